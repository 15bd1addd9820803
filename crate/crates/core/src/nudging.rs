//! Feedback-nudged SQG: `w_s + u(w) . grad w + kappa Lambda^gamma w = f - mu S (w - v)`.

use serde::Serialize;

use crate::dynamics::{run, Propagator, SqgParams, StepperConfig, Trajectory};
use crate::error::{param, Error, Result};
use crate::lp::LpBlocks;
use crate::spectral::{project_modes, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FeedbackOperator {
    /// Littlewood-Paley low pass `S_m`.
    LowPass { m: i32 },
    /// Sharp spectral cut `|k| <= cutoff`.
    Sharp { cutoff: f64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NudgeParams {
    pub mu: f64,
    pub operator: FeedbackOperator,
    pub sigma: f64,
    pub p: f64,
    pub c0: f64,
    pub c0p: f64,
    pub c0pp: f64,
}

impl NudgeParams {
    pub fn lowpass(mu: f64, m: i32, sigma: f64, p: f64) -> Result<Self> {
        let n = Self { mu, operator: FeedbackOperator::LowPass { m }, sigma, p, c0: 1.0, c0p: 1.0, c0pp: 1.0 };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(param("nudge.mu", format!("{} must be non-negative", self.mu)));
        }
        match self.operator {
            FeedbackOperator::LowPass { m } if m < -1 => Err(param("nudge.m", format!("{m} < -1"))),
            FeedbackOperator::Sharp { cutoff } if !(cutoff >= 0.0) => Err(param("nudge.cutoff", "must be non-negative")),
            _ => Ok(()),
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    /// Dyadic level of the feedback; for a sharp cut, the `m` with
    /// `2^{m-1}` nearest the cutoff.
    pub fn level(&self) -> i32 {
        match self.operator {
            FeedbackOperator::LowPass { m } => m,
            FeedbackOperator::Sharp { cutoff } => cutoff.max(0.5).log2().round() as i32 + 1,
        }
    }

    pub fn table(&self, blocks: &LpBlocks) -> Vec<f64> {
        match self.operator {
            FeedbackOperator::LowPass { m } => blocks.lowpass_table(m),
            FeedbackOperator::Sharp { cutoff } => {
                blocks.grid().modulus_table().iter().map(|&r| if r <= cutoff { 1.0 } else { 0.0 }).collect()
            }
        }
    }

    pub fn apply(&self, blocks: &LpBlocks, f: &SpectralField) -> SpectralField {
        match self.operator {
            FeedbackOperator::LowPass { m } => blocks.lowpass(f, m),
            FeedbackOperator::Sharp { cutoff } => project_modes(f, cutoff),
        }
    }

    /// What is observed of a reference state: `S_{m-1} theta` for the
    /// low pass, `P_h theta` for the sharp cut.
    pub fn observe(&self, blocks: &LpBlocks, theta: &SpectralField) -> SpectralField {
        match self.operator {
            FeedbackOperator::LowPass { m } => blocks.lowpass(theta, m - 1),
            FeedbackOperator::Sharp { cutoff } => project_modes(theta, cutoff),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisEntry {
    pub tag: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub entries: Vec<HypothesisEntry>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }

    pub fn get(&self, tag: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.tag == tag)
    }
}

fn entry(tag: &'static str, lhs: f64, rhs: f64) -> HypothesisEntry {
    HypothesisEntry { tag, lhs, rhs, margin: lhs - rhs, holds: lhs >= rhs }
}

/// Structural hypotheses are hard errors; the quantitative ones on `mu`
/// and `m` come back as margins. `g_sigma_inf` enables the second part
/// of the resolution condition.
pub fn check_hypotheses(sqg: &SqgParams, nudge: &NudgeParams, g_lp: f64, g_sigma_inf: Option<f64>) -> Result<HypothesisReport> {
    sqg.validate()?;
    nudge.validate()?;
    let (gamma, sigma, p) = (sqg.gamma, nudge.sigma, nudge.p);
    if !(sigma > 2.0 - gamma) {
        return Err(Error::Hypothesis { tag: "(H2)", detail: format!("sigma = {sigma} <= 2 - gamma = {}", 2.0 - gamma) });
    }
    let two_p = if p.is_infinite() { 0.0 } else { 2.0 / p };
    if !(p >= 1.0) || !(1.0 - sigma < two_p && two_p < gamma - 1.0) {
        return Err(Error::Hypothesis {
            tag: "(H3)",
            detail: format!("need 1 - sigma < 2/p < gamma - 1, got {} < {two_p} < {}", 1.0 - sigma, gamma - 1.0),
        });
    }
    let kappa = sqg.kappa;
    let mu_min = nudge.c0 * kappa * (g_lp / kappa).powf(gamma / (gamma - 1.0 - two_p));
    let m = nudge.level() as f64;
    let mut entries = vec![
        entry("(H6)", nudge.mu, mu_min),
        entry("(H7a)", 2f64.powf(gamma * m), nudge.c0p * nudge.mu / kappa),
    ];
    if let Some(gs) = g_sigma_inf {
        entries.push(entry("(H7b)", 2f64.powf(m), nudge.c0pp * (gs / g_lp).powf(1.0 / (1.0 - two_p - sigma))));
    }
    Ok(HypothesisReport { entries })
}

/// A source of observations `v(s)`.
pub trait Observations {
    fn at(&self, s: f64) -> SpectralField;
}

impl Observations for SpectralField {
    fn at(&self, _s: f64) -> SpectralField {
        self.clone()
    }
}

impl Observations for Trajectory {
    fn at(&self, s: f64) -> SpectralField {
        Trajectory::at(self, s)
    }
}

/// The nudged system with its linear rates (`kappa |k|^gamma + mu s(k)`).
pub struct Nudged<'a> {
    pub sqg: &'a SqgParams,
    pub nudge: &'a NudgeParams,
    table: Vec<f64>,
    prop: Propagator,
}

impl<'a> Nudged<'a> {
    pub fn new(sqg: &'a SqgParams, nudge: &'a NudgeParams, blocks: &LpBlocks, cfg: StepperConfig) -> Self {
        let table = nudge.table(blocks);
        let rates: Vec<f64> = sqg
            .linear_rates(blocks.grid())
            .iter()
            .zip(&table)
            .map(|(l, s)| l + nudge.mu * s)
            .collect();
        Self { sqg, nudge, prop: Propagator::new(&rates, cfg), table }
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    /// Explicit part: advection, forcing and `mu S v`.
    pub fn nonlinear(&self, s: f64, w: &SpectralField, v: &dyn Observations) -> SpectralField {
        self.sqg.nonlinear(s, w).axpy(self.nudge.mu, &v.at(s).apply_table(&self.table))
    }

    pub fn step(&self, w: &SpectralField, s: f64, v: &dyn Observations) -> SpectralField {
        self.prop.step(s, w, &mut |t, x| self.nonlinear(t, x, v))
    }

    pub fn integrate(&self, w0: &SpectralField, s0: f64, span: f64, sample_every: usize, v: &dyn Observations) -> Result<Trajectory> {
        run(w0, s0, span, sample_every, &self.prop, &mut |t, x| self.nonlinear(t, x, v), &mut |_, _| {})
    }

    /// `mu S (v - w)`, the feedback forcing.
    pub fn feedback(&self, w: &SpectralField, v: &SpectralField) -> SpectralField {
        v.sub(w).apply_table(&self.table).scale(self.nudge.mu)
    }
}

/// One nudged step from `s`; `v` supplies the observations at stage times.
pub fn nudged_step(
    w: &SpectralField,
    s: f64,
    v: &dyn Observations,
    sqg: &SqgParams,
    nudge: &NudgeParams,
    blocks: &LpBlocks,
    cfg: StepperConfig,
) -> Result<SpectralField> {
    crate::dynamics::check_finite(w, s)?;
    let out = Nudged::new(sqg, nudge, blocks, cfg).step(w, s, v);
    crate::dynamics::check_finite(&out, s + cfg.dt)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SyncConfig {
    pub window: f64,
    pub sample_every: usize,
    /// Relative error below which a run counts as synchronized.
    pub threshold: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
}

impl SyncConfig {
    pub fn new(window: f64) -> Self {
        Self { window, sample_every: 1, threshold: 1e-6, fit_lo: 1e-9, fit_hi: 1e-2 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SyncRow {
    pub s: f64,
    pub err_l2proxy: f64,
    pub err_hsigma: f64,
    pub err_hminushalf: f64,
    pub inserted_energy: f64,
}

#[derive(Clone, Debug)]
pub struct SyncRecord {
    pub rows: Vec<SyncRow>,
    pub initial_error: f64,
    pub terminal_ratio: f64,
    pub synchronized: bool,
    /// Decay rate and R^2 of the log-linear fit over the fit band.
    pub fit: Option<(f64, f64)>,
    pub w: Trajectory,
}

impl SyncRecord {
    /// First sample time with relative error below `ratio`.
    pub fn time_below(&self, ratio: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.err_l2proxy < ratio * self.initial_error).map(|r| r.s)
    }
}

/// Least-squares line through `(x, y)`; returns slope and R^2.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 3 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, r2))
}

fn sync_record(
    w: Trajectory,
    reference: &Trajectory,
    sigma: f64,
    sc: &SyncConfig,
    inserted: impl Fn(usize, &SpectralField, f64) -> f64,
) -> SyncRecord {
    let mut rows = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    let mut prev = None;
    for (i, wi) in w.samples.iter().enumerate() {
        let s = w.time(i);
        let e = wi.sub(&reference.at(s));
        let power = inserted(i, wi, s);
        if let Some(p) = prev {
            acc += 0.5 * w.dt * (p + power);
        }
        prev = Some(power);
        rows.push(SyncRow {
            s,
            err_l2proxy: e.l2proxy(),
            err_hsigma: e.sobolev_norm(sigma),
            err_hminushalf: e.sobolev_norm(-0.5),
            inserted_energy: acc,
        });
    }
    let initial_error = rows[0].err_l2proxy;
    let terminal_ratio = if initial_error > 0.0 { rows.last().unwrap().err_l2proxy / initial_error } else { 0.0 };
    // the leading run inside the band over which the error keeps falling;
    // a floor reached later would flatten the slope
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in rows.iter().skip_while(|r| r.err_l2proxy / initial_error > sc.fit_hi) {
        let q = r.err_l2proxy / initial_error;
        if q < sc.fit_lo || ys.last().is_some_and(|&y| r.err_l2proxy.ln() >= y) {
            break;
        }
        xs.push(r.s);
        ys.push(r.err_l2proxy.ln());
    }
    let fit = linear_fit(&xs, &ys).map(|(slope, r2)| (-slope, r2));
    SyncRecord { rows, initial_error, terminal_ratio, synchronized: terminal_ratio < sc.threshold, fit, w }
}

/// Twin experiment: `w` is nudged toward observations of `reference`.
pub fn synchronize_experiment(
    sqg: &SqgParams,
    nudge: &NudgeParams,
    blocks: &LpBlocks,
    cfg: StepperConfig,
    reference: &Trajectory,
    w0: &SpectralField,
    sc: &SyncConfig,
) -> Result<SyncRecord> {
    if reference.end_time() + 1e-12 < reference.t0 + sc.window {
        return Err(Error::Window(format!(
            "reference covers [{}, {}], window needs {}",
            reference.t0,
            reference.end_time(),
            reference.t0 + sc.window
        )));
    }
    let v = reference.map(|th| nudge.observe(blocks, th));
    let sys = Nudged::new(sqg, nudge, blocks, cfg);
    let w = sys.integrate(w0, reference.t0, sc.window, sc.sample_every, &v)?;
    Ok(sync_record(w, reference, nudge.sigma, sc, |_, wi, s| 2.0 * sys.feedback(wi, &v.at(s)).inner(wi)))
}

#[derive(Clone, Debug, Serialize)]
pub struct MuThreshold {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub evaluations: usize,
}

/// Bisects on `mu` for the synchronization boundary. A bracket whose
/// lower end is 0 and already synchronizes gives threshold 0.
#[allow(clippy::too_many_arguments)]
pub fn minimal_mu_search(
    sqg: &SqgParams,
    template: &NudgeParams,
    blocks: &LpBlocks,
    cfg: StepperConfig,
    reference: &Trajectory,
    w0: &SpectralField,
    sc: &SyncConfig,
    bracket: (f64, f64),
    rel_tol: f64,
) -> Result<MuThreshold> {
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(param("bracket", format!("[{lo}, {hi}] is not an increasing non-negative interval")));
    }
    let mut evaluations = 0;
    let mut classify = |mu: f64| -> Result<bool> {
        evaluations += 1;
        Ok(synchronize_experiment(sqg, &template.with_mu(mu), blocks, cfg, reference, w0, sc)?.synchronized)
    };
    let at_lo = classify(lo)?;
    if at_lo && lo == 0.0 {
        return Ok(MuThreshold { lo: 0.0, hi: 0.0, estimate: 0.0, evaluations: 1 });
    }
    if at_lo == classify(hi)? {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if classify(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MuThreshold { lo, hi, estimate: 0.5 * (lo + hi), evaluations })
}

#[derive(Clone, Debug)]
pub struct DeterminingRecord {
    pub sync: SyncRecord,
    pub determining: bool,
    pub theta_lp: f64,
    /// `c0 (Theta_Lp / kappa)^{1/(gamma - 1 - 2/p)}`, the resolution the
    /// theory asks for.
    pub required_inverse_h: f64,
}

/// Direct insertion of `P_h theta_ref` after every step.
#[allow(clippy::too_many_arguments)]
pub fn determining_modes_experiment(
    sqg: &SqgParams,
    cfg: StepperConfig,
    cutoff: f64,
    p: f64,
    c0: f64,
    reference: &Trajectory,
    w0: &SpectralField,
    sc: &SyncConfig,
) -> Result<DeterminingRecord> {
    let prop = Propagator::new(&sqg.linear_rates(w0.grid()), cfg);
    let low = |f: &SpectralField| project_modes(f, cutoff);
    let start = w0.sub(&low(w0)).add(&low(&reference.at(reference.t0)));
    let w = run(
        &start,
        reference.t0,
        sc.window,
        sc.sample_every,
        &prop,
        &mut |s, th| sqg.nonlinear(s, th),
        &mut |s, u| {
            let r = reference.at(s);
            *u = u.sub(&low(u)).add(&low(&r));
        },
    )?;
    let mut theta_lp = 0.0f64;
    for th in &reference.samples {
        theta_lp = theta_lp.max(th.to_physical().lebesgue_norm(p)?);
    }
    let two_p = if p.is_infinite() { 0.0 } else { 2.0 / p };
    let required_inverse_h = c0 * (theta_lp / sqg.kappa).powf(1.0 / (sqg.gamma - 1.0 - two_p));
    let sync = sync_record(w, reference, 0.0, sc, |_, _, _| 0.0);
    Ok(DeterminingRecord { determining: sync.synchronized, sync, theta_lp, required_inverse_h })
}

/// `||phi - P_{1/h} phi||_{L2} / (h^beta ||phi||_{H^beta})`, the
/// interpolant constant of the sharp projection.
pub fn interpolant_ratio(phi: &SpectralField, h: f64, beta: f64) -> f64 {
    let rest = phi.sub(&project_modes(phi, 1.0 / h));
    rest.l2proxy() / (h.powf(beta) * phi.sobolev_norm(beta))
}
