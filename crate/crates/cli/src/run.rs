//! Subcommand bodies. Each returns the scalars a sweep aggregates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sqglab_core::degiorgi::{
    fractional_lower_bound, interpolation_exponent, iteration_lemma_check, level_energies, levelset_inequality_check, linfty_bound_estimate,
    positivity_pair, IterationParams, LevelSetConfig, LinftyInputs,
};
use sqglab_core::detform::{detform_integrate, perturbed_steady, projected_steady, DetformConfig, WMapConfig};
use sqglab_core::dynamics::{
    apriori_bound_check, attractor_sample, diagnostics, integrate, lowmode_forcing, max_principle_check, periodic_orbit, steady_state_find,
    AttractorConfig, DiagnosticsSpec, Forcing, Scheme, SqgParams, StepperConfig, Trajectory,
};
use sqglab_core::lp::LpBlocks;
use sqglab_core::nudging::{check_hypotheses, synchronize_experiment, FeedbackOperator, NudgeParams, SyncConfig};
use sqglab_core::spectral::random_field;
use sqglab_core::{bounds, rng, SpectralField, TorusGrid};

use crate::config::{Config, KEYS, SCHEMA_VERSION};
use crate::error::{with_last_good, CliError};
use crate::output::{create_dir, read_series, read_snapshot, write_atomic, write_json, write_snapshot, Csv, Series};

pub type Summary = BTreeMap<String, f64>;

pub struct Ctx {
    pub cfg: Config,
    pub out: PathBuf,
}

impl Ctx {
    /// Creates the run directory and writes the resolved config echo.
    pub fn new(cfg: Config) -> Result<Self, CliError> {
        let out = PathBuf::from(cfg.raw("out_dir"));
        create_dir(&out)?;
        write_atomic(&out.join("config.resolved"), cfg.echo().as_bytes())?;
        Ok(Self { cfg, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub const COMMANDS: &[&str] = &["simulate", "nudge", "detform", "diagnose", "lp-verify", "steady", "periodic"];

pub fn dispatch(name: &str, ctx: &Ctx) -> Result<Summary, CliError> {
    match name {
        "simulate" => simulate(ctx),
        "nudge" => nudge(ctx),
        "detform" => detform(ctx),
        "diagnose" => diagnose(ctx),
        "lp-verify" => lp_verify(ctx),
        "steady" => steady(ctx),
        "periodic" => periodic(ctx),
        other => Err(CliError::config("sweep.command", format!("{other:?} is not a runnable subcommand"))),
    }
}

fn keyed(key: &str) -> impl Fn(sqglab_core::Error) -> CliError + '_ {
    move |e| CliError::config(key, e.to_string())
}

pub fn grid(c: &Config) -> Result<TorusGrid, CliError> {
    TorusGrid::new(c.get("grid.n")?).map_err(keyed("grid.n"))
}

fn stepper(c: &Config) -> Result<StepperConfig, CliError> {
    let scheme: Scheme = c.raw("time.scheme").parse().map_err(keyed("time.scheme"))?;
    StepperConfig::new(c.get("time.dt")?, scheme).map_err(keyed("time.dt"))
}

fn sample_every(c: &Config) -> Result<usize, CliError> {
    let k: usize = c.get("time.sample_every")?;
    if k == 0 {
        return Err(CliError::config("time.sample_every", "must be at least 1"));
    }
    Ok(k)
}

fn read_on_grid(path: &str, g: TorusGrid, key: &str) -> Result<SpectralField, CliError> {
    let f = read_snapshot(Path::new(path)).map_err(|e| CliError::config(key, e.to_string()))?;
    if f.grid().n() != g.n() {
        return Err(CliError::config(key, format!("{path} has n = {}, run uses n = {}", f.grid().n(), g.n())));
    }
    Ok(f)
}

/// `zero`, `random:<seed>` or an `SQGF` path.
fn field_source(c: &Config, key: &str, g: TorusGrid) -> Result<SpectralField, CliError> {
    let spec = c.raw(key);
    if spec == "zero" {
        return Ok(SpectralField::zeros(g));
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed.parse().map_err(|_| CliError::config(key, format!("bad seed in {spec:?}")))?;
        let mut r = rng::stream(seed, key);
        return Ok(random_field(g, &mut r, c.get("init.band")?, 0.0, c.get("init.norm")?));
    }
    read_on_grid(spec, g, key)
}

pub fn sqg_params(c: &Config, g: TorusGrid) -> Result<SqgParams, CliError> {
    let src = c.raw("forcing.source");
    let amp: f64 = c.get("forcing.amplitude")?;
    let shape = match src {
        "builtin:lowmode" => lowmode_forcing(g, amp),
        "builtin:zero" => SpectralField::zeros(g),
        s if s.starts_with("builtin:") => return Err(CliError::config("forcing.source", format!("unknown builtin {s:?}"))),
        path => read_on_grid(path, g, "forcing.source")?,
    };
    let period: f64 = c.get("forcing.period")?;
    let forcing = if period > 0.0 {
        Forcing::Periodic { shape, period }
    } else if period == 0.0 {
        Forcing::Steady(shape)
    } else {
        return Err(CliError::config("forcing.period", "must be non-negative"));
    };
    let p = SqgParams { kappa: c.get("sqg.kappa")?, gamma: c.get("sqg.gamma")?, forcing, viscosity: c.get("sqg.eps")?, advection: true };
    p.validate().map_err(|e| {
        let key = match &e {
            sqglab_core::Error::Hypothesis { .. } => "sqg.gamma",
            sqglab_core::Error::Param { name, .. } if name == "kappa" => "sqg.kappa",
            sqglab_core::Error::Param { name, .. } if name == "viscosity" => "sqg.eps",
            _ => "forcing.period",
        };
        CliError::config(key, e.to_string())
    })?;
    Ok(p)
}

pub fn nudge_params(c: &Config) -> Result<NudgeParams, CliError> {
    let operator = match c.raw("nudge.operator") {
        "lp" => FeedbackOperator::LowPass { m: c.get("nudge.m")? },
        "sharp" => FeedbackOperator::Sharp { cutoff: c.get("nudge.cutoff")? },
        other => return Err(CliError::config("nudge.operator", format!("{other:?} is not lp or sharp"))),
    };
    let n = NudgeParams {
        mu: c.get("nudge.mu")?,
        operator,
        sigma: c.get("nudge.sigma")?,
        p: c.get("nudge.p")?,
        c0: c.get("nudge.c0")?,
        c0p: c.get("nudge.c0p")?,
        c0pp: c.get("nudge.c0pp")?,
    };
    n.validate().map_err(|e| match &e {
        sqglab_core::Error::Param { name, .. } => CliError::config(name, e.to_string()),
        _ => CliError::Core(e),
    })?;
    Ok(n)
}

/// The feedback term is stepped explicitly; `mu dt` past the real-axis
/// stability limit of the scheme makes the error grow instead of decay.
fn feedback_stable(np: &NudgeParams, cfg: StepperConfig) -> Result<(), CliError> {
    let limit = match cfg.scheme {
        Scheme::ExpEuler => 2.0,
        Scheme::IfRk4 | Scheme::Etdrk4 => 2.5,
    };
    if np.mu * cfg.dt > limit {
        return Err(CliError::config("nudge.mu", format!("mu * dt = {} exceeds {limit}; lower time.dt", np.mu * cfg.dt)));
    }
    Ok(())
}

fn norms_csv(tr: &Trajectory, sqg: &SqgParams, c: &Config) -> Result<Csv, CliError> {
    let spec = DiagnosticsSpec { sigma: c.get("norms.sigma")?, p: c.get("norms.p")? };
    let mut csv = Csv::new(&["t", "l2proxy", "hsigma", "lp", "linf", "energy_residual"]);
    for r in diagnostics(tr, sqg, spec).map_err(keyed("norms.p"))? {
        csv.row(&[r.t, r.l2proxy, r.hsigma, r.lp, r.linf, r.energy_residual])?;
    }
    Ok(csv)
}

fn steps_for(span: f64, dt: f64) -> usize {
    (span / dt - 1e-9).ceil().max(0.0) as usize
}

fn simulate(ctx: &Ctx) -> Result<Summary, CliError> {
    let c = &ctx.cfg;
    let g = grid(c)?;
    let sqg = sqg_params(c, g)?;
    let cfg = stepper(c)?;
    let every = sample_every(c)?;
    let t_span: f64 = c.get("time.t_span")?;
    let spinup: f64 = c.get("time.spinup")?;
    if !(t_span >= 0.0 && spinup >= 0.0) {
        return Err(CliError::config("time.t_span", "spans must be non-negative"));
    }
    let theta0 = field_source(c, "init.source", g)?;
    let init_path = ctx.path("init.sqgf");
    write_snapshot(&init_path, &theta0)?;
    let mut u = theta0;
    let mut t0 = 0.0;
    if spinup > 0.0 {
        let n = steps_for(spinup, cfg.dt).max(1);
        let tr = integrate(&u, &sqg, cfg, 0.0, spinup, n).map_err(|e| with_last_good(e, Some(init_path.clone())))?;
        t0 = tr.end_time();
        u = tr.last().clone();
    }
    let mut series = Series::create(&ctx.path("snapshots"))?;
    series.push(t0, &u)?;
    let mut samples = vec![u.clone()];
    let chunks = steps_for(t_span, cfg.dt).div_ceil(every);
    let h = every as f64 * cfg.dt;
    let mut failure = None;
    for k in 0..chunks {
        let t = t0 + k as f64 * h;
        match integrate(&u, &sqg, cfg, t, h, every) {
            Ok(tr) => {
                u = tr.last().clone();
                series.push(t0 + (k + 1) as f64 * h, &u)?;
                samples.push(u.clone());
            }
            Err(e) => {
                failure = Some(with_last_good(e, series.last()));
                break;
            }
        }
    }
    let tr = Trajectory::new(t0, h, samples)?;
    let norms = norms_csv(&tr, &sqg, c).and_then(|csv| csv.write(&ctx.path("norms.csv")));
    if let Some(e) = failure {
        return Err(e);
    }
    norms?;
    write_snapshot(&ctx.path("final.sqgf"), tr.last())?;
    let energy = sqglab_core::dynamics::energy_balance(&tr, &sqg);
    Ok(Summary::from([
        ("samples".into(), tr.len() as f64),
        ("final_l2proxy".into(), tr.last().l2proxy()),
        ("max_energy_residual".into(), energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
    ]))
}

/// A run directory (its `snapshots/`) or a bare series directory.
fn series_dir(path: &Path) -> PathBuf {
    if path.join("snapshots").join("index.csv").exists() {
        path.join("snapshots")
    } else {
        path.to_path_buf()
    }
}

/// Reads `config.resolved` of a run, rejecting newer schemas.
fn run_config(dir: &Path) -> Result<Option<Config>, CliError> {
    let p = dir.join("config.resolved");
    if !p.exists() {
        return Ok(None);
    }
    let mut c = Config::default();
    c.merge_file(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    Ok(Some(c))
}

fn load_reference(path: &str, g: TorusGrid) -> Result<Trajectory, CliError> {
    let dir = Path::new(path);
    run_config(dir)?;
    let tr = read_series(&series_dir(dir)).map_err(|e| CliError::config("nudge.ref", e.to_string()))?;
    if tr.grid().n() != g.n() {
        return Err(CliError::config("nudge.ref", format!("reference has n = {}, run uses n = {}", tr.grid().n(), g.n())));
    }
    Ok(tr)
}

/// Attractor sample over the sync window, written as a series to `dir`.
pub fn generate_reference(c: &Config, dir: &Path) -> Result<Trajectory, CliError> {
    let g = grid(c)?;
    let sqg = sqg_params(c, g)?;
    let ac = AttractorConfig {
        spinup: c.get("nudge.ref_spinup")?,
        window: c.get("nudge.window")?,
        sample_every: sample_every(c)?,
        init_band: c.get("init.band")?,
        init_sigma: 0.0,
        init_norm: c.get("init.norm")?,
        seed: c.get("seed")?,
    };
    let att = attractor_sample(&sqg, stepper(c)?, ac)?;
    let mut s = Series::create(dir)?;
    s.push_all(&att.traj)?;
    Ok(att.traj)
}

fn reference_for(ctx: &Ctx, g: TorusGrid) -> Result<Trajectory, CliError> {
    let r = ctx.cfg.raw("nudge.ref");
    if r.is_empty() {
        generate_reference(&ctx.cfg, &ctx.path("ref"))
    } else {
        load_reference(r, g)
    }
}

fn sup_over(tr: &Trajectory, f: impl Fn(&SpectralField) -> f64) -> f64 {
    tr.samples.iter().map(f).fold(0.0, f64::max)
}

fn nudge(ctx: &Ctx) -> Result<Summary, CliError> {
    let c = &ctx.cfg;
    let g = grid(c)?;
    let sqg = sqg_params(c, g)?;
    let cfg = stepper(c)?;
    let np = nudge_params(c)?;
    feedback_stable(&np, cfg)?;
    let blocks = LpBlocks::new(g);
    let reference = reference_for(ctx, g)?;
    let f_lp = bounds::f_lp(sqg.forcing.shape().to_physical().lebesgue_norm(np.p).map_err(keyed("nudge.p"))?, sqg.kappa);
    let theta_sigma = sup_over(&reference, |f| f.sobolev_norm(np.sigma));
    let g_lp = bounds::g_lp(sqg.kappa, np.mu, f_lp, theta_sigma);
    let hyp = check_hypotheses(&sqg, &np, g_lp, None)?;
    let w0 = field_source(c, "nudge.w0", g)?;
    let w0_path = ctx.path("w0.sqgf");
    write_snapshot(&w0_path, &w0)?;
    let window: f64 = c.get("nudge.window")?;
    let sc = SyncConfig { sample_every: sample_every(c)?, threshold: c.get("nudge.threshold")?, ..SyncConfig::new(window) };
    let rec = synchronize_experiment(&sqg, &np, &blocks, cfg, &reference, &w0, &sc).map_err(|e| with_last_good(e, Some(w0_path)))?;
    let mut csv = Csv::new(&["s", "err_l2proxy", "err_hsigma", "err_hminushalf", "inserted_energy"]);
    for r in &rec.rows {
        csv.row(&[r.s, r.err_l2proxy, r.err_hsigma, r.err_hminushalf, r.inserted_energy])?;
    }
    csv.write(&ctx.path("sync.csv"))?;
    Series::create(&ctx.path("w"))?.push_all(&rec.w)?;
    let (rate, r2) = rec.fit.map_or((None, None), |(a, b)| (Some(a), Some(b)));
    write_json(
        &ctx.path("report.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "fitted_rate": rate,
            "fit_r2": r2,
            "initial_error": rec.initial_error,
            "terminal_ratio": rec.terminal_ratio,
            "synchronized": rec.synchronized,
            "time_below_threshold": rec.time_below(sc.threshold).map(|t| t - reference.t0),
            "g_lp": g_lp,
            "theta_hsigma": theta_sigma,
            "hypotheses": hyp,
            "all_hypotheses_hold": hyp.all_hold(),
        }),
    )?;
    let mut s = Summary::from([
        ("terminal_ratio".into(), rec.terminal_ratio),
        ("synchronized".into(), rec.synchronized as u8 as f64),
        ("fitted_rate".into(), rate.unwrap_or(f64::NAN)),
        ("fit_r2".into(), r2.unwrap_or(f64::NAN)),
    ]);
    for e in &hyp.entries {
        s.insert(format!("margin{}", e.tag.trim_matches(|ch| ch == '(' || ch == ')')), e.margin);
    }
    Ok(s)
}

fn theta_star(ctx: &Ctx, sqg: &SqgParams, cfg: StepperConfig, sigma: f64) -> Result<SpectralField, CliError> {
    let c = &ctx.cfg;
    let g = sqg.grid();
    let src = c.raw("detform.ref_steady");
    let th = if src.is_empty() {
        let st = steady_state_find(sqg, cfg, &SpectralField::zeros(g), sigma, c.get("steady.tol")?, c.get("steady.t_max")?)?;
        if !st.converged {
            return Err(CliError::Input(format!("no steady state: residual {:e} at t = {}", st.residual, st.t)));
        }
        st.theta
    } else {
        read_on_grid(src, g, "detform.ref_steady")?
    };
    write_snapshot(&ctx.path("steady.sqgf"), &th)?;
    Ok(th)
}

fn detform(ctx: &Ctx) -> Result<Summary, CliError> {
    let c = &ctx.cfg;
    let g = grid(c)?;
    let sqg = sqg_params(c, g)?;
    let cfg = stepper(c)?;
    let np = nudge_params(c)?;
    feedback_stable(&np, cfg)?;
    let blocks = LpBlocks::new(g);
    let th = theta_star(ctx, &sqg, cfg, np.sigma)?;
    let window: f64 = c.get("detform.window")?;
    let count: usize = c.get("detform.samples")?;
    if count < 2 {
        return Err(CliError::config("detform.samples", "need at least two samples"));
    }
    let spec = c.raw("detform.v0");
    let v0 = if spec == "proj-steady" {
        projected_steady(&th, &np, &blocks, 0.0, window, count)
    } else if let Some(rest) = spec.strip_prefix("perturbed:") {
        let (eps, seed) = rest.split_once(':').ok_or_else(|| CliError::config("detform.v0", "expected perturbed:<eps>:<seed>"))?;
        let eps: f64 = eps.parse().map_err(|_| CliError::config("detform.v0", format!("bad eps {eps:?}")))?;
        let seed: u64 = seed.parse().map_err(|_| CliError::config("detform.v0", format!("bad seed {seed:?}")))?;
        perturbed_steady(&th, &np, &blocks, eps, seed, 0.0, window, count)
    } else if let Some(run) = spec.strip_prefix("proj-attractor:") {
        let tr = load_reference(run, g).map_err(|e| CliError::config("detform.v0", e.to_string()))?;
        let a = (tr.end_time() - window).max(tr.t0);
        let h = (tr.end_time() - a) / (count - 1) as f64;
        let samples = (0..count).map(|i| np.apply(&blocks, &tr.at(a + h * i as f64))).collect();
        Trajectory::new(a, h, samples).map_err(keyed("detform.window"))?
    } else {
        return Err(CliError::config("detform.v0", format!("{spec:?} is not proj-steady, proj-attractor:<run> or perturbed:<eps>:<seed>")));
    };
    let wc = WMapConfig::for_mu(np.mu, c.get("detform.tol_forget")?).map_err(keyed("detform.tol_forget"))?;
    let positive = |key: &str| -> Result<Option<f64>, CliError> {
        let x: f64 = c.get(key)?;
        Ok((x > 0.0).then_some(x))
    };
    let dc = DetformConfig {
        tau_span: positive("detform.tau_span")?,
        dtau: positive("detform.dtau")?,
        tol: c.get("detform.tol")?,
        power: c.get("detform.rhs_power")?,
        max_increases: c.get("detform.max_increases")?,
    };
    let run = detform_integrate(&v0, &th, &sqg, &np, &blocks, cfg, &wc, &dc).map_err(|e| match e {
        sqglab_core::Error::Param { ref name, .. } if name == "rhs_power" => CliError::config("detform.rhs_power", e.to_string()),
        other => CliError::Core(other),
    })?;
    let mut csv = Csv::new(&["tau", "residual_x", "dist_to_steady_x", "lambda"]);
    for s in &run.states {
        csv.row(&[s.tau, s.residual_x, s.dist_to_steady_x, s.lambda])?;
    }
    csv.write(&ctx.path("detform.csv"))?;
    Series::create(&ctx.path("v"))?.push_all(&run.v)?;
    let first = run.states[0].residual_x;
    let last = run.states.last().unwrap().residual_x;
    let ratio = if first > 0.0 { last / first } else { 0.0 };
    write_json(
        &ctx.path("report.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "lambda0": run.lambda0,
            "radius": run.radius,
            "in_ball": run.in_ball,
            "initial_residual_x": first,
            "terminal_residual_x": last,
            "terminal_ratio": ratio,
            "states": run.states.len(),
            "relax_time": wc.relax_time,
        }),
    )?;
    Ok(Summary::from([("lambda0".into(), run.lambda0), ("terminal_ratio".into(), ratio), ("in_ball".into(), run.in_ball as u8 as f64)]))
}

fn steady(ctx: &Ctx) -> Result<Summary, CliError> {
    let c = &ctx.cfg;
    let g = grid(c)?;
    let sqg = sqg_params(c, g)?;
    let cfg = stepper(c)?;
    let sigma: f64 = c.get("norms.sigma")?;
    let theta0 = field_source(c, "init.source", g)?;
    let st = steady_state_find(&sqg, cfg, &theta0, sigma, c.get("steady.tol")?, c.get("steady.t_max")?).map_err(|e| match e {
        sqglab_core::Error::Param { ref name, .. } if name == "forcing" => CliError::config("forcing.period", e.to_string()),
        other => with_last_good(other, None),
    })?;
    write_snapshot(&ctx.path("steady.sqgf"), &st.theta)?;
    write_json(
        &ctx.path("report.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "residual": st.residual,
            "converged": st.converged,
            "t": st.t,
            "l2proxy": st.theta.l2proxy(),
            "hsigma": st.theta.sobolev_norm(sigma),
        }),
    )?;
    Ok(Summary::from([("residual".into(), st.residual), ("converged".into(), st.converged as u8 as f64), ("t".into(), st.t)]))
}

fn periodic(ctx: &Ctx) -> Result<Summary, CliError> {
    let c = &ctx.cfg;
    let g = grid(c)?;
    let sqg = sqg_params(c, g)?;
    if sqg.forcing.period().is_none() {
        return Err(CliError::config("forcing.period", "periodic orbits need forcing.period > 0"));
    }
    let cfg = stepper(c)?;
    let theta0 = field_source(c, "init.source", g)?;
    let orbit = periodic_orbit(&sqg, cfg, &theta0, c.get("periodic.tol")?, c.get("periodic.max_iter")?, sample_every(c)?)?;
    write_snapshot(&ctx.path("start.sqgf"), &orbit.start)?;
    Series::create(&ctx.path("orbit"))?.push_all(&orbit.orbit)?;
    norms_csv(&orbit.orbit, &sqg, c)?.write(&ctx.path("orbit.csv"))?;
    write_json(
        &ctx.path("report.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "closure": orbit.closure,
            "iterations": orbit.iterations,
            "period": sqg.forcing.period(),
        }),
    )?;
    Ok(Summary::from([("closure".into(), orbit.closure), ("iterations".into(), orbit.iterations as f64)]))
}

fn lp_verify(ctx: &Ctx) -> Result<Summary, CliError> {
    let c = &ctx.cfg;
    let g = grid(c)?;
    let blocks = LpBlocks::new(g);
    let count: usize = c.get("lp.ensemble")?;
    if count == 0 {
        return Err(CliError::config("lp.ensemble", "must be at least 1"));
    }
    let band: f64 = c.get("lp.band")?;
    let band = if band > 0.0 { band } else { g.dealiased_radius() };
    let mut r = rng::stream(c.get("seed")?, "lp-verify");
    let ens: Vec<SpectralField> = (0..count).map(|_| random_field(g, &mut r, band, 0.0, 1.0)).collect();
    let (beta, p, q): (f64, f64, f64) = (c.get("lp.beta")?, c.get("lp.p")?, c.get("lp.q")?);
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    // block 0 holds only the mean, which every field here lacks; blocks
    // starting past the band are empty too
    for j in (1..=blocks.j_max()).filter(|&j| 2f64.powi(j as i32 - 2) < band) {
        let rep = blocks.bernstein_check(&ens, j, beta, p, q).map_err(keyed("lp.p"))?;
        worst = worst.max(rep.upper);
        for (name, value) in [("upper", rep.upper), ("lower", rep.lower), ("lowpass", rep.lowpass)] {
            entries.push(json!({ "j": j, "inequality": name, "constant": value }));
        }
    }
    write_json(
        &ctx.path("lp_verify.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": g.n(),
            "ensemble": count,
            "band": band,
            "beta": beta,
            "p": p,
            "q": q,
            "entries": entries,
        }),
    )?;
    Ok(Summary::from([("max_upper".into(), worst)]))
}

/// Level-set, De Giorgi, bound and lemma diagnostics over a finished run.
fn diagnose(ctx: &Ctx) -> Result<Summary, CliError> {
    let run_dir = PathBuf::from(ctx.cfg.raw("diagnose.run"));
    if run_dir.as_os_str().is_empty() {
        return Err(CliError::config("diagnose.run", "a run directory is required"));
    }
    // physics from the run, diagnostic settings from this invocation
    let mut c = run_config(&run_dir)?.ok_or_else(|| CliError::config("diagnose.run", format!("{} has no config.resolved", run_dir.display())))?;
    for (k, _) in KEYS {
        if ["diagnose.", "lemma.", "bounds."].iter().any(|p| k.starts_with(p)) {
            c.set(k, ctx.cfg.raw(k))?;
        }
    }
    let check = c.raw("diagnose.check").to_string();
    let all = ["levelset", "degiorgi", "bounds", "lemmas"];
    let selected: Vec<&str> = match check.as_str() {
        "all" => all.to_vec(),
        one if all.contains(&one) => vec![one],
        other => return Err(CliError::config("diagnose.check", format!("{other:?} is not one of levelset, degiorgi, bounds, lemmas, all"))),
    };
    let g = grid(&c)?;
    let sqg = sqg_params(&c, g)?;
    let np = nudge_params(&c)?;
    let blocks = LpBlocks::new(g);
    let nudged = run_dir.join("w").join("index.csv").exists();
    let (w, free, mu) = if nudged {
        let w = read_series(&run_dir.join("w"))?;
        let r = c.raw("nudge.ref");
        let reference = if r.is_empty() { read_series(&run_dir.join("ref"))? } else { load_reference(r, g)? };
        (w, reference, np.mu)
    } else {
        let tr = read_series(&series_dir(&run_dir))?;
        (tr.clone(), tr, 0.0)
    };
    let v = if nudged {
        Trajectory::new(w.t0, w.dt, (0..w.len()).map(|i| np.observe(&blocks, &free.at(w.time(i)))).collect())?
    } else {
        w.map(|f| SpectralField::zeros(f.grid()))
    };
    let (kappa, gamma, p) = (sqg.kappa, sqg.gamma, np.p);
    let cb: f64 = c.get("bounds.c")?;
    let sup = sup_over(&w, |f| f.to_physical().sup_abs());
    let f_lp = bounds::f_lp(sqg.forcing.shape().to_physical().lebesgue_norm(p).map_err(keyed("nudge.p"))?, kappa);
    let rho0 = sup_over(&v, |f| f.to_physical().lebesgue_norm(p).unwrap_or(f64::NAN));
    let mut out = serde_json::Map::new();
    out.insert("schema_version".into(), json!(SCHEMA_VERSION));
    out.insert("run".into(), json!(run_dir.display().to_string()));
    out.insert("nudged".into(), json!(nudged));
    let mut summary = Summary::new();

    for name in selected {
        let value: Value = match name {
            "levelset" => {
                let lam: f64 = c.get("diagnose.lambda")?;
                let lam = if lam > 0.0 { lam } else { sup / 2.0 };
                let want: usize = c.get("diagnose.pairs")?;
                let gap = 6.min(w.len().saturating_sub(1));
                if gap == 0 {
                    return Err(CliError::Input("level-set check needs at least two samples".into()));
                }
                let room = w.len() - 1 - gap;
                let stride = (room / want.max(1)).max(1);
                let pairs: Vec<(usize, usize)> = (0..=room).step_by(stride).take(want).map(|i| (i, i + gap)).collect();
                let f = sqg.forcing.clone();
                let r = levelset_inequality_check(&w, &v, &|t| f.at(t), kappa, gamma, mu, np.level(), lam, &pairs)?;
                summary.insert("levelset_min_residual".into(), r.min_residual);
                json!({ "report": r, "pairs": pairs, "passed": r.min_residual >= -1e-6 })
            }
            "degiorgi" => {
                let delta: f64 = c.get("diagnose.delta_inf")?;
                let delta = delta.min(w.end_time() - w.t0);
                let n_max: usize = c.get("diagnose.n_max")?;
                let base = LevelSetConfig { m: 1.0, n_max, delta_inf: delta, s0: w.t0 };
                let u0 = level_energies(&w, &base, gamma, kappa)?[0];
                let m_cfg: f64 = c.get("diagnose.M")?;
                let big_m = if m_cfg > 0.0 { m_cfg } else { sup };
                let u = level_energies(&w, &LevelSetConfig { m: big_m, ..base }, gamma, kappa)?;
                let m_inf = (mu > 0.0).then(|| bounds::m_infinity(cb, kappa, mu, gamma, p, f_lp, rho0, u0));
                let u_inf = match m_inf {
                    Some(m) if m.is_finite() && m > 0.0 => Some(level_energies(&w, &LevelSetConfig { m, ..base }, gamma, kappa)?),
                    _ => None,
                };
                let est = linfty_bound_estimate(&LinftyInputs { kappa, mu, gamma, p, f_lp, rho0, u0, delta_inf: delta }, sup, cb);
                summary.insert("degiorgi_calibration".into(), est.calibration);
                json!({
                    "M": big_m,
                    "delta_inf": delta,
                    "u0": u0,
                    "U": u,
                    "non_increasing": u.windows(2).all(|x| x[1] <= x[0]),
                    "M_inf": m_inf,
                    "U_at_M_inf": u_inf,
                    "linfty": est,
                })
            }
            "bounds" => {
                let sigma = np.sigma;
                let ap = apriori_bound_check(&free, &sqg, sigma, 1e-8);
                let mp = max_principle_check(&free, &sqg, p, cb, 1e-8).map_err(keyed("nudge.p"))?;
                let theta_sigma = ap.sup_hsigma;
                let f_hm = bounds::f_hminus(sqg.forcing.shape().sobolev_norm(-gamma / 2.0), kappa);
                let mut entry = json!({
                    "energy_max_residual": ap.max_residual,
                    "energy_passed": ap.passed,
                    "max_principle": mp,
                    "theta_hsigma": theta_sigma,
                });
                if nudged {
                    let g_l2 = bounds::g_l2_sq(cb, kappa, mu, f_hm, theta_sigma).sqrt();
                    let g_lp = bounds::g_lp(kappa, mu, f_lp, theta_sigma);
                    let w_l2 = sup_over(&w, |f| f.l2proxy());
                    let w_lp = sup_over(&w, |f| f.to_physical().lebesgue_norm(p).unwrap_or(f64::NAN));
                    entry["g_l2"] = json!({ "bound": g_l2, "measured": w_l2, "margin": g_l2 - w_l2 });
                    entry["g_lp"] = json!({ "bound": g_lp, "measured": w_lp, "margin": g_lp - w_lp });
                    summary.insert("g_lp_margin".into(), g_lp - w_lp);
                }
                summary.insert("energy_max_residual".into(), ap.max_residual);
                entry
            }
            "lemmas" => {
                let ip = IterationParams {
                    a: c.get("lemma.a")?,
                    b: c.get("lemma.b")?,
                    c: c.get("lemma.c")?,
                    d: vec![c.get("lemma.d")?],
                    v0: c.get("lemma.v0")?,
                    v1: c.get("lemma.v1")?,
                    c0: c.get("lemma.c0")?,
                };
                let it = iteration_lemma_check(&ip, c.get("lemma.M")?, c.get("lemma.n_max")?).map_err(keyed("lemma.d"))?;
                let alpha = interpolation_exponent(c.get("lemma.P")?, c.get("lemma.Q")?, gamma).map_err(keyed("lemma.P"))?;
                let last = w.last();
                let fine = TorusGrid::new((4 * g.n()).min(512))?;
                let mut frac = Vec::new();
                for pe in [2u32, 4] {
                    let (lhs, rhs) = fractional_lower_bound(last, gamma, pe, fine)?;
                    frac.push(json!({ "p": pe, "lhs": lhs, "rhs": rhs, "holds": lhs >= rhs - 1e-12 }));
                }
                let lam = 0.3 * last.to_physical().sup_abs();
                let (pl, pr) = positivity_pair(last, lam, gamma, fine)?;
                summary.insert("lemma_v2".into(), it.sequence.get(2).copied().unwrap_or(f64::NAN));
                json!({
                    "iteration": it,
                    "alpha": alpha,
                    "fractional_lower_bound": frac,
                    "positivity": { "lambda": lam, "lhs": pl, "rhs": pr, "holds": pl >= pr - 1e-12 },
                })
            }
            _ => unreachable!(),
        };
        out.insert(name.into(), value);
    }
    write_json(&ctx.path("diagnostics.json"), &Value::Object(out))?;
    Ok(summary)
}
