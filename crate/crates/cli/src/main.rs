//! `sqglab`: runs forced SQG, nudging and determining-form experiments from a
//! flat config file plus flags, writing CSV/JSON/SQGF artifacts.

mod config;
mod error;
mod output;
mod run;
mod sweep;

use std::path::Path;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use config::Config;
use error::CliError;
use run::Ctx;

const SIMULATE: &[(&str, &str)] = &[
    ("n", "grid.n"),
    ("gamma", "sqg.gamma"),
    ("kappa", "sqg.kappa"),
    ("dt", "time.dt"),
    ("t-span", "time.t_span"),
    ("spinup", "time.spinup"),
    ("forcing", "forcing.source"),
    ("eps", "sqg.eps"),
    ("scheme", "time.scheme"),
    ("sample-every", "time.sample_every"),
    ("init", "init.source"),
];
const NUDGE: &[(&str, &str)] = &[
    ("mu", "nudge.mu"),
    ("m", "nudge.m"),
    ("operator", "nudge.operator"),
    ("cutoff", "nudge.cutoff"),
    ("ref", "nudge.ref"),
    ("w0", "nudge.w0"),
    ("window", "nudge.window"),
];
const DETFORM: &[(&str, &str)] = &[
    ("ref-steady", "detform.ref_steady"),
    ("v0", "detform.v0"),
    ("m", "nudge.m"),
    ("mu", "nudge.mu"),
    ("tau-span", "detform.tau_span"),
    ("dtau", "detform.dtau"),
    ("rhs-power", "detform.rhs_power"),
];
const DIAGNOSE: &[(&str, &str)] = &[
    ("run", "diagnose.run"),
    ("check", "diagnose.check"),
    ("M", "diagnose.M"),
    ("lambda", "diagnose.lambda"),
    ("delta-inf", "diagnose.delta_inf"),
    ("n-max", "diagnose.n_max"),
];
const LP_VERIFY: &[(&str, &str)] = &[("n", "grid.n"), ("ensemble", "lp.ensemble"), ("beta", "lp.beta"), ("p", "lp.p"), ("q", "lp.q")];
const SWEEP: &[(&str, &str)] = &[("command", "sweep.command"), ("cap", "sweep.cap")];
const STEADY: &[(&str, &str)] = &[("tol", "steady.tol"), ("t-max", "steady.t_max")];
const PERIODIC: &[(&str, &str)] = &[("period", "forcing.period"), ("tol", "periodic.tol"), ("max-iter", "periodic.max_iter")];

fn flag_sets(name: &str) -> Vec<&'static [(&'static str, &'static str)]> {
    match name {
        "simulate" => vec![SIMULATE],
        "nudge" => vec![SIMULATE, NUDGE],
        "detform" => vec![SIMULATE, DETFORM],
        "diagnose" => vec![DIAGNOSE],
        "lp-verify" => vec![LP_VERIFY],
        "sweep" => vec![SWEEP],
        "steady" => vec![SIMULATE, STEADY],
        "periodic" => vec![SIMULATE, PERIODIC],
        _ => vec![],
    }
}

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("simulate", "Integrate the forced equation; writes norms.csv and snapshots"),
    ("nudge", "Nudge toward a reference run; writes sync.csv and report.json"),
    ("detform", "Integrate the determining-form ODE; writes detform.csv"),
    ("diagnose", "Level-set, De Giorgi, bound and lemma checks on a run; writes diagnostics.json"),
    ("lp-verify", "Empirical Bernstein constants per block; writes lp_verify.json"),
    ("sweep", "Run a subcommand over a parameter grid; writes sweep.csv"),
    ("steady", "Find a steady state by forward integration"),
    ("periodic", "Find a time-periodic orbit for periodic forcing"),
];

fn cli() -> Command {
    let mut root = Command::new("sqglab")
        .about("Pseudo-spectral lab for the forced subcritical SQG equation on the 2-torus")
        .subcommand_required(true)
        .arg(Arg::new("config").long("config").value_name("FILE").global(true).help("flat key = value config file"))
        .arg(Arg::new("out-dir").long("out-dir").value_name("DIR").global(true))
        .arg(Arg::new("seed").long("seed").value_name("INT").global(true))
        .arg(Arg::new("threads").long("threads").value_name("INT").global(true).help("falls back to SQGLAB_THREADS"))
        .arg(Arg::new("set").long("set").value_name("KEY=VALUE").action(ArgAction::Append).global(true).help("override any config key"));
    for (name, about) in SUBCOMMANDS {
        let mut sc = Command::new(*name).about(*about);
        for set in flag_sets(name) {
            for (flag, key) in set {
                sc = sc.arg(Arg::new(*flag).long(*flag).value_name("VALUE").help(format!("sets {key}")));
            }
        }
        if *name == "sweep" {
            sc = sc.arg(Arg::new("axis").long("axis").value_name("KEY=V1,V2").action(ArgAction::Append).help("adds a sweep axis"));
        }
        root = root.subcommand(sc);
    }
    root
}

fn resolve(name: &str, m: &ArgMatches) -> Result<(Config, usize), CliError> {
    let mut cfg = Config::default();
    if let Some(path) = m.get_one::<String>("config") {
        cfg.merge_file(Path::new(path))?;
    }
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::config(kv, "--set expects KEY=VALUE"))?;
        cfg.set(k.trim(), v)?;
    }
    for (flag, key) in [("out-dir", "out_dir"), ("seed", "seed")] {
        if let Some(v) = m.get_one::<String>(flag) {
            cfg.set(key, v)?;
        }
    }
    for set in flag_sets(name) {
        for (flag, key) in set {
            if let Some(v) = m.get_one::<String>(flag) {
                cfg.set(key, v)?;
            }
        }
    }
    if name == "sweep" {
        let extra: Vec<String> = m.get_many::<String>("axis").into_iter().flatten().cloned().collect();
        if !extra.is_empty() {
            let joined = [cfg.raw("sweep.axes").to_string()].into_iter().chain(extra).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(";");
            cfg.set("sweep.axes", &joined)?;
        }
    }
    if let Some(v) = m.get_one::<String>("threads") {
        cfg.set("threads", v)?;
    } else if let Ok(v) = std::env::var("SQGLAB_THREADS") {
        v.trim().parse::<usize>().map_err(|_| CliError::config("SQGLAB_THREADS", format!("{v:?} is not a thread count")))?;
        cfg.set("threads", &v)?;
    }
    let threads: usize = cfg.get("threads")?;
    let _: u64 = cfg.get("seed")?;
    Ok((cfg, threads))
}

fn execute(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    let (cfg, threads) = resolve(name, m)?;
    let ctx = Ctx::new(cfg)?;
    let summary = if name == "sweep" { sweep::sweep(&ctx, threads)? } else { run::dispatch(name, &ctx)? };
    for (k, v) in summary {
        println!("{k} = {}", output::num(v));
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    match execute(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
