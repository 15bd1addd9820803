use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sqglab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqglab"))
        .current_dir(dir)
        .env_remove("SQGLAB_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (h, rows) = csv(path);
    let i = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name} in {h:?}"));
    rows.into_iter().map(|r| r[i].clone()).collect()
}

fn partial_files(dir: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            found.extend(partial_files(&p));
        } else if p.extension().is_some_and(|x| x == "partial") {
            found.push(p);
        }
    }
    found
}

const SMALL: &[&str] = &["--n", "32", "--t-span", "0.1"];

fn simulate(dir: &Path, out: &str) -> Output {
    sqglab(dir, &[&["simulate", "--out-dir", out], SMALL].concat())
}

#[test]
fn simulate_writes_artifacts_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for out in ["a", "b"] {
        let o = simulate(d, out);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["norms.csv", "init.sqgf", "final.sqgf", "config.resolved", "snapshots/index.csv"] {
        assert!(d.join("a").join(f).is_file(), "missing {f}");
    }
    let (h, rows) = csv(&d.join("a/norms.csv"));
    assert_eq!(h, ["t", "l2proxy", "hsigma", "lp", "linf", "energy_residual"]);
    assert!(rows.len() >= 2);
    // 17 significant digits
    assert!(rows[1][1].split('e').next().unwrap().len() == 18, "{}", rows[1][1]);
    assert_eq!(fs::read(d.join("a/norms.csv")).unwrap(), fs::read(d.join("b/norms.csv")).unwrap());
    assert_eq!(fs::read(d.join("a/final.sqgf")).unwrap(), fs::read(d.join("b/final.sqgf")).unwrap());
    assert!(partial_files(d).is_empty());
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = sqglab(d, &["simulate", "--out-dir", "g", "--gamma", "2.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sqg.gamma") && stderr(&o).contains("(H1)"), "{}", stderr(&o));

    let o = sqglab(d, &["simulate", "--out-dir", "u", "--set", "nudge.nu=3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nudge.nu"));

    fs::write(d.join("v2.cfg"), "schema_version = 2\n").unwrap();
    let o = sqglab(d, &["simulate", "--out-dir", "v", "--config", "v2.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("schema_version"));

    let o = sqglab(d, &["nudge", "--out-dir", "s", "--n", "32", "--mu", "1000"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nudge.mu"));

    let o = Command::new(env!("CARGO_BIN_EXE_sqglab"))
        .current_dir(d)
        .env("SQGLAB_THREADS", "many")
        .args(["lp-verify", "--out-dir", "t", "--n", "16"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("SQGLAB_THREADS"));
}

#[test]
fn flags_override_set_which_overrides_the_file() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("run.cfg"), "# layered\nsqg.kappa = 2\ntime.dt = 0.02\ngrid.n = 16\n").unwrap();
    let o = sqglab(
        d,
        &["simulate", "--config", "run.cfg", "--out-dir", "p", "--set", "sqg.kappa=3", "--set", "time.t_span=0.04", "--kappa", "4"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let resolved = fs::read_to_string(d.join("p/config.resolved")).unwrap();
    for line in ["sqg.kappa = 4", "time.dt = 0.02", "grid.n = 16", "time.t_span = 0.04"] {
        assert!(resolved.lines().any(|l| l == line), "{line} not in\n{resolved}");
    }
}

#[test]
fn blowup_exits_3_with_the_last_good_snapshot() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = sqglab(
        d,
        &[
            "simulate", "--out-dir", "b", "--n", "32", "--dt", "0.5", "--t-span", "50", "--sample-every", "1", "--init", "random:1",
            "--set", "init.norm=1e4",
        ],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let err = stderr(&o);
    let last = err.rsplit("last good snapshot: ").next().unwrap().trim();
    assert!(d.join(last).is_file(), "{err}");
    assert!(d.join("b/norms.csv").is_file());
}

#[test]
fn one_point_sweep_matches_a_direct_run() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(&simulate(d, "direct")), 0);
    let o = sqglab(d, &["sweep", "--command", "simulate", "--out-dir", "sw", "--set", "time.t_span=0.1", "--axis", "grid.n=32"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(d.join("direct/norms.csv")).unwrap(), fs::read(d.join("sw/points/p00000/norms.csv")).unwrap());
    assert_eq!(column(&d.join("sw/sweep.csv"), "status"), ["ok"]);
}

#[test]
fn sweep_records_failures_and_enforces_the_cap() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = sqglab(
        d,
        &["sweep", "--command", "simulate", "--out-dir", "f", "--set", "grid.n=16", "--set", "time.t_span=0.05", "--axis", "sqg.gamma=1.5,2.5"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sw = d.join("f/sweep.csv");
    assert_eq!(column(&sw, "status"), ["ok", "failed"]);
    assert_eq!(column(&sw, "exit_code"), ["0", "2"]);
    assert!(column(&sw, "error")[1].contains("(H1)"));

    let o = sqglab(d, &["sweep", "--command", "simulate", "--out-dir", "c", "--cap", "3", "--axis", "sqg.kappa=1,2", "--axis", "grid.n=16,32"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sweep.cap"));

    let o = sqglab(d, &["sweep", "--command", "simulate", "--out-dir", "k", "--axis", "sqg.nu=1,2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mu_sweep_rates_are_monotone() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = sqglab(
        d,
        &[
            "sweep", "--command", "nudge", "--out-dir", "mu", "--threads", "2", "--set", "grid.n=32", "--set", "time.dt=0.002", "--set",
            "time.sample_every=1", "--set", "nudge.window=1.5", "--set", "nudge.ref_spinup=2", "--axis", "nudge.mu=4,16,64,256",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sw = d.join("mu/sweep.csv");
    assert_eq!(column(&sw, "nudge.mu"), ["4", "16", "64", "256"]);
    let rates: Vec<f64> = column(&sw, "fitted_rate").iter().map(|r| r.parse().expect("every point has a fit")).collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
    // the shared reference is generated once
    assert!(d.join("mu/ref/index.csv").is_file());
    assert!(!d.join("mu/points/p00000/ref").exists());
}

#[test]
fn nudge_then_diagnose() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = sqglab(
        d,
        &["nudge", "--out-dir", "nd", "--n", "32", "--sample-every", "2", "--window", "1", "--mu", "32", "--set", "nudge.ref_spinup=5"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&d.join("nd/sync.csv"));
    assert_eq!(h, ["s", "err_l2proxy", "err_hsigma", "err_hminushalf", "inserted_energy"]);
    assert!(rows.iter().flatten().all(|c| c.parse::<f64>().unwrap() >= 0.0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("nd/report.json")).unwrap()).unwrap();
    assert_eq!(report["all_hypotheses_hold"], true);
    assert!(report["terminal_ratio"].as_f64().unwrap() < 1e-3);

    let o = sqglab(d, &["diagnose", "--out-dir", "dg", "--run", "nd"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("dg/diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["nudged"], true);
    let u: Vec<f64> = diag["degiorgi"]["U"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(u.windows(2).all(|w| w[1] <= w[0]), "{u:?}");
    assert_eq!(diag["lemmas"]["iteration"]["verdict"], "holds");

    let o = sqglab(d, &["diagnose", "--out-dir", "dx", "--run", "nowhere"]);
    assert_eq!(code(&o), 2);
    assert!(partial_files(d).is_empty());
}

#[test]
fn steady_detform_periodic_and_lp_verify_run() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = sqglab(d, &["steady", "--out-dir", "st", "--n", "32"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let st: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("st/report.json")).unwrap()).unwrap();
    assert_eq!(st["converged"], true);

    let o = sqglab(d, &["detform", "--out-dir", "df", "--n", "32", "--ref-steady", "st/steady.sqgf", "--tau-span", "0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(column(&d.join("df/detform.csv"), "tau").len() >= 2);

    let o = sqglab(d, &["periodic", "--out-dir", "pe", "--n", "32", "--period", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.join("pe/orbit.csv").is_file());

    let o = sqglab(d, &["lp-verify", "--out-dir", "lp", "--n", "32", "--ensemble", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lp: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("lp/lp_verify.json")).unwrap()).unwrap();
    let entries = lp["entries"].as_array().unwrap();
    assert!(!entries.is_empty());
    assert!(entries.iter().all(|e| e["constant"].as_f64().is_some_and(|c| c.is_finite() && c > 0.0)));
    assert!(partial_files(d).is_empty());
}
