//! Forced SQG time stepping, steady states, periodic orbits and energy
//! bookkeeping.
//!
//! The equation is `theta_t + u . grad theta + kappa Lambda^gamma theta
//! - eps Delta theta = f`, with the linear part integrated exactly per mode.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng;
use crate::spectral::{advection_term, fractional_laplacian, random_field, SpectralField, TorusGrid};

#[derive(Clone, Debug)]
pub enum Forcing {
    Steady(SpectralField),
    /// `f(t) = cos(2 pi t / period) * shape`.
    Periodic { shape: SpectralField, period: f64 },
}

impl Forcing {
    pub fn at(&self, t: f64) -> SpectralField {
        match self {
            Forcing::Steady(f) => f.clone(),
            Forcing::Periodic { shape, period } => shape.scale((2.0 * std::f64::consts::PI * t / period).cos()),
        }
    }

    /// The spatial profile; bounds use it as the amplitude.
    pub fn shape(&self) -> &SpectralField {
        match self {
            Forcing::Steady(f) => f,
            Forcing::Periodic { shape, .. } => shape,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            Forcing::Steady(_) => None,
            Forcing::Periodic { period, .. } => Some(*period),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.shape().l2proxy() == 0.0
    }
}

/// `amp * (cos x1 + sin(x1 + x2))`.
pub fn lowmode_forcing(grid: TorusGrid, amp: f64) -> SpectralField {
    SpectralField::from_fn(grid, |x, y| amp * (x.cos() + (x + y).sin()))
}

#[derive(Clone, Debug)]
pub struct SqgParams {
    pub kappa: f64,
    pub gamma: f64,
    pub forcing: Forcing,
    /// Optional `eps (-Delta)` term; zero by default.
    pub viscosity: f64,
    /// Turning this off leaves the linear forced problem.
    pub advection: bool,
}

impl SqgParams {
    pub fn new(kappa: f64, gamma: f64, forcing: Forcing) -> Result<Self> {
        let p = Self { kappa, gamma, forcing, viscosity: 0.0, advection: true };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma < 2.0) {
            return Err(Error::Hypothesis { tag: "(H1)", detail: format!("gamma = {} not in (1, 2)", self.gamma) });
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(param("kappa", format!("{} must be positive", self.kappa)));
        }
        if !(self.viscosity >= 0.0) {
            return Err(param("viscosity", "must be non-negative"));
        }
        if let Some(p) = self.forcing.period() {
            if !(p > 0.0) {
                return Err(param("forcing.period", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> TorusGrid {
        self.forcing.shape().grid()
    }

    /// Per-mode decay rate `kappa |k|^gamma + eps |k|^2`.
    pub fn linear_rates(&self, grid: TorusGrid) -> Vec<f64> {
        grid.modulus_table()
            .into_iter()
            .map(|r| if r == 0.0 { 0.0 } else { self.kappa * r.powf(self.gamma) + self.viscosity * r * r })
            .collect()
    }

    /// `-u . grad theta + f(t)`.
    pub fn nonlinear(&self, t: f64, theta: &SpectralField) -> SpectralField {
        let f = self.forcing.at(t);
        if self.advection {
            f.sub(&advection_term(theta))
        } else {
            f
        }
    }

    /// `kappa Lambda^gamma theta + eps Lambda^2 theta + u . grad theta - f`.
    pub fn steady_residual(&self, theta: &SpectralField) -> SpectralField {
        let mut r = fractional_laplacian(theta, self.gamma).scale(self.kappa).sub(&self.nonlinear(0.0, theta));
        if self.viscosity > 0.0 {
            r = r.axpy(self.viscosity, &fractional_laplacian(theta, 2.0));
        }
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Lawson integrating-factor RK4.
    #[default]
    IfRk4,
    /// Cox-Matthews exponential time differencing RK4; keeps equilibria
    /// as exact fixed points.
    Etdrk4,
    /// First-order exponential Euler.
    ExpEuler,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "if-rk4" | "ifrk4" => Ok(Scheme::IfRk4),
            "etdrk4" => Ok(Scheme::Etdrk4),
            "exp-euler" | "euler" => Ok(Scheme::ExpEuler),
            _ => Err(param("scheme", format!("unknown scheme {s:?}"))),
        }
    }
}

impl Scheme {
    pub fn order(&self) -> u32 {
        match self {
            Scheme::ExpEuler => 1,
            _ => 4,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
}

impl StepperConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(param("dt", format!("{dt} must be positive")));
        }
        Ok(Self { dt, scheme })
    }
}

/// `phi_1..phi_3` at `x <= 0`.
fn phis(x: f64) -> (f64, f64, f64) {
    if x.abs() < 0.5 {
        // phi_k(x) = sum_j x^j / (j + k)!
        let (mut p1, mut p2, mut p3) = (0.0, 0.0, 0.0);
        let (mut term, mut fact) = (1.0, 1.0);
        for j in 0..30 {
            let j = j as f64;
            let f1 = fact * (j + 1.0);
            let f2 = f1 * (j + 2.0);
            let f3 = f2 * (j + 3.0);
            p1 += term / f1;
            p2 += term / f2;
            p3 += term / f3;
            term *= x;
            fact *= j + 1.0;
        }
        (p1, p2, p3)
    } else {
        let e = x.exp();
        let p1 = (e - 1.0) / x;
        let p2 = (e - 1.0 - x) / (x * x);
        let p3 = (e - 1.0 - x - 0.5 * x * x) / (x * x * x);
        (p1, p2, p3)
    }
}

/// Exponential propagator for `u' = -L u + N(t, u)` with diagonal `L`.
#[derive(Clone, Debug)]
pub struct Propagator {
    dt: f64,
    scheme: Scheme,
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl Propagator {
    pub fn new(rates: &[f64], cfg: StepperConfig) -> Self {
        let h = cfg.dt;
        let e = rates.iter().map(|l| (-l * h).exp()).collect();
        let e2 = rates.iter().map(|l| (-l * h / 2.0).exp()).collect();
        let (mut q, mut f1, mut f2, mut f3) = (vec![], vec![], vec![], vec![]);
        match cfg.scheme {
            Scheme::IfRk4 => {}
            Scheme::ExpEuler => {
                f1 = rates.iter().map(|l| h * phis(-l * h).0).collect();
            }
            Scheme::Etdrk4 => {
                for l in rates {
                    q.push(0.5 * h * phis(-l * h / 2.0).0);
                    let (p1, p2, p3) = phis(-l * h);
                    f1.push(h * (p1 - 3.0 * p2 + 4.0 * p3));
                    f2.push(h * (p2 - 2.0 * p3));
                    f3.push(h * (4.0 * p3 - p2));
                }
            }
        }
        Self { dt: h, scheme: cfg.scheme, e, e2, q, f1, f2, f3 }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, t: f64, u: &SpectralField, n: &mut dyn FnMut(f64, &SpectralField) -> SpectralField) -> SpectralField {
        let h = self.dt;
        match self.scheme {
            Scheme::IfRk4 => {
                let k1 = n(t, u);
                let a = u.axpy(h / 2.0, &k1).apply_table(&self.e2);
                let k2 = n(t + h / 2.0, &a);
                let eu2 = u.apply_table(&self.e2);
                let b = eu2.axpy(h / 2.0, &k2);
                let k3 = n(t + h / 2.0, &b);
                let c = u.apply_table(&self.e).axpy(h, &k3.apply_table(&self.e2));
                let k4 = n(t + h, &c);
                let mid = k2.add(&k3).apply_table(&self.e2).scale(2.0);
                let incr = k1.apply_table(&self.e).add(&mid).add(&k4);
                u.apply_table(&self.e).axpy(h / 6.0, &incr)
            }
            Scheme::Etdrk4 => {
                let nu = n(t, u);
                let eu2 = u.apply_table(&self.e2);
                let a = eu2.add(&nu.apply_table(&self.q));
                let na = n(t + h / 2.0, &a);
                let b = eu2.add(&na.apply_table(&self.q));
                let nb = n(t + h / 2.0, &b);
                let c = a.apply_table(&self.e2).add(&nb.scale(2.0).sub(&nu).apply_table(&self.q));
                let nc = n(t + h, &c);
                u.apply_table(&self.e)
                    .add(&nu.apply_table(&self.f1))
                    .add(&na.add(&nb).apply_table(&self.f2).scale(2.0))
                    .add(&nc.apply_table(&self.f3))
            }
            Scheme::ExpEuler => {
                let nu = n(t, u);
                u.apply_table(&self.e).add(&nu.apply_table(&self.f1))
            }
        }
    }
}

pub(crate) fn check_finite(f: &SpectralField, t: f64) -> Result<()> {
    match f.first_non_finite() {
        Some((k1, k2)) => Err(Error::Blowup { t, k1, k2 }),
        None => Ok(()),
    }
}

/// One step of the forced equation from time `t`.
pub fn sqg_step(theta: &SpectralField, t: f64, params: &SqgParams, cfg: StepperConfig) -> Result<SpectralField> {
    check_finite(theta, t)?;
    let prop = Propagator::new(&params.linear_rates(theta.grid()), cfg);
    let out = prop.step(t, theta, &mut |s, th| params.nonlinear(s, th));
    check_finite(&out, t + cfg.dt)?;
    Ok(out)
}

/// Uniformly sampled solution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, samples: Vec<SpectralField>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Window("empty trajectory".into()));
        }
        if samples.len() > 1 && !(dt > 0.0) {
            return Err(param("dt", "sample spacing must be positive"));
        }
        Ok(Self { t0, dt, samples })
    }

    pub fn constant(f: SpectralField, t0: f64, t1: f64, count: usize) -> Self {
        let count = count.max(2);
        let dt = (t1 - t0) / (count - 1) as f64;
        Self { t0, dt, samples: vec![f; count] }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn grid(&self) -> TorusGrid {
        self.samples[0].grid()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn last(&self) -> &SpectralField {
        self.samples.last().unwrap()
    }

    /// Linear interpolation, clamped at the ends.
    pub fn at(&self, s: f64) -> SpectralField {
        if self.samples.len() == 1 || s <= self.t0 {
            return self.samples[0].clone();
        }
        let x = (s - self.t0) / self.dt;
        let i = x.floor() as usize;
        if i + 1 >= self.samples.len() {
            return self.last().clone();
        }
        let w = x - i as f64;
        if w < 1e-12 {
            return self.samples[i].clone();
        }
        self.samples[i].lerp(&self.samples[i + 1], w)
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self { t0: self.t0, dt: self.dt, samples: self.samples.iter().map(f).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&SpectralField, &SpectralField) -> SpectralField) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// Samples with `t` in `[a, b]`, keeping the original spacing.
    pub fn window(&self, a: f64, b: f64) -> Result<Self> {
        let eps = 1e-9 * self.dt.max(1e-300);
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.time(i) >= a - eps && self.time(i) <= b + eps).collect();
        if idx.is_empty() {
            return Err(Error::Window(format!("no samples in [{a}, {b}]")));
        }
        Ok(Self {
            t0: self.time(idx[0]),
            dt: self.dt,
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
        })
    }
}

/// Steps `theta0` over `t_span`, keeping every `sample_every`-th state.
/// The step count is rounded up to a multiple of `sample_every`.
pub fn integrate(
    theta0: &SpectralField,
    params: &SqgParams,
    cfg: StepperConfig,
    t0: f64,
    t_span: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    let prop = Propagator::new(&params.linear_rates(theta0.grid()), cfg);
    run(theta0, t0, t_span, sample_every, &prop, &mut |s, th| params.nonlinear(s, th), &mut |_, _| {})
}

pub(crate) fn step_count(t_span: f64, dt: f64, sample_every: usize) -> Result<usize> {
    if sample_every == 0 {
        return Err(param("sample_every", "must be at least 1"));
    }
    if !(t_span >= 0.0) {
        return Err(param("t_span", "must be non-negative"));
    }
    let steps = (t_span / dt - 1e-9).ceil().max(0.0) as usize;
    Ok(steps.div_ceil(sample_every) * sample_every)
}

/// Shared driver. `after` runs on each new state and may modify it in place.
pub(crate) fn run(
    theta0: &SpectralField,
    t0: f64,
    t_span: f64,
    sample_every: usize,
    prop: &Propagator,
    n: &mut dyn FnMut(f64, &SpectralField) -> SpectralField,
    after: &mut dyn FnMut(f64, &mut SpectralField),
) -> Result<Trajectory> {
    check_finite(theta0, t0)?;
    let steps = step_count(t_span, prop.dt(), sample_every)?;
    let mut samples = vec![theta0.clone()];
    let mut u = theta0.clone();
    for i in 0..steps {
        let t = t0 + prop.dt() * i as f64;
        u = prop.step(t, &u, n);
        after(t + prop.dt(), &mut u);
        check_finite(&u, t + prop.dt())?;
        if (i + 1) % sample_every == 0 {
            samples.push(u.clone());
        }
    }
    Trajectory::new(t0, prop.dt() * sample_every as f64, samples)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    pub sigma: f64,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2proxy: f64,
    pub hsigma: f64,
    pub lp: f64,
    pub linf: f64,
    pub energy_residual: f64,
}

pub fn diagnostics(traj: &Trajectory, params: &SqgParams, spec: DiagnosticsSpec) -> Result<Vec<DiagnosticsRecord>> {
    let energy = energy_balance(traj, params);
    traj.samples
        .iter()
        .enumerate()
        .map(|(i, th)| {
            let phys = th.to_physical();
            Ok(DiagnosticsRecord {
                t: traj.time(i),
                l2proxy: th.l2proxy(),
                hsigma: th.sobolev_norm(spec.sigma),
                lp: phys.lebesgue_norm(spec.p)?,
                linf: phys.sup_abs(),
                energy_residual: energy[i],
            })
        })
        .collect()
}

/// Cumulative `||theta(t)||^2 - ||theta(t0)||^2 + int (2 kappa ||theta||^2_{gamma/2}
/// + 2 eps ||theta||^2_1 - 2 <f, theta>)`, trapezoid in time.
pub fn energy_balance(traj: &Trajectory, params: &SqgParams) -> Vec<f64> {
    let dissip: Vec<f64> = traj
        .samples
        .iter()
        .enumerate()
        .map(|(i, th)| {
            2.0 * params.kappa * th.sobolev_norm(params.gamma / 2.0).powi(2)
                + 2.0 * params.viscosity * th.sobolev_norm(1.0).powi(2)
                - 2.0 * params.forcing.at(traj.time(i)).inner(th)
        })
        .collect();
    let e0 = traj.samples[0].l2proxy().powi(2);
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for i in 1..traj.len() {
        acc += 0.5 * traj.dt * (dissip[i - 1] + dissip[i]);
        out.push(traj.samples[i].l2proxy().powi(2) - e0 + acc);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct AprioriReport {
    pub energy_residual: Vec<f64>,
    pub max_residual: f64,
    pub sup_hsigma: f64,
    pub passed: bool,
}

/// Energy inequality along a trajectory plus the running `H^sigma` sup.
pub fn apriori_bound_check(traj: &Trajectory, params: &SqgParams, sigma: f64, tol: f64) -> AprioriReport {
    let energy = energy_balance(traj, params);
    let max_residual = energy.iter().fold(f64::NEG_INFINITY, |m, &r| m.max(r));
    let sup_hsigma = traj.samples.iter().fold(0.0, |m: f64, th| m.max(th.sobolev_norm(sigma)));
    AprioriReport { passed: max_residual <= tol, energy_residual: energy, max_residual, sup_hsigma }
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxPrincipleReport {
    pub bound: f64,
    pub sup_lp: f64,
    pub passed: bool,
}

/// `sup_t ||theta||_p <= max(||theta_0||_p, ||f||_p / (C kappa))`.
pub fn max_principle_check(traj: &Trajectory, params: &SqgParams, p: f64, c: f64, tol: f64) -> Result<MaxPrincipleReport> {
    let f_lp = params.forcing.shape().to_physical().lebesgue_norm(p)? / params.kappa;
    let bound = traj.samples[0].to_physical().lebesgue_norm(p)?.max(f_lp / c);
    let mut sup_lp = 0.0f64;
    for th in &traj.samples {
        sup_lp = sup_lp.max(th.to_physical().lebesgue_norm(p)?);
    }
    Ok(MaxPrincipleReport { bound, sup_lp, passed: sup_lp <= bound * (1.0 + tol) })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AttractorConfig {
    pub spinup: f64,
    pub window: f64,
    pub sample_every: usize,
    pub init_band: f64,
    pub init_sigma: f64,
    pub init_norm: f64,
    pub seed: u64,
}

impl AttractorConfig {
    pub fn new(spinup: f64, window: f64, seed: u64) -> Self {
        Self { spinup, window, sample_every: 1, init_band: 4.0, init_sigma: 0.0, init_norm: 1.0, seed }
    }
}

#[derive(Clone, Debug)]
pub struct AttractorSample {
    pub traj: Trajectory,
    pub settled: bool,
    pub drift: f64,
}

/// Random band-limited start, spun up, then sampled over a window.
/// `settled` holds when the running max of `||theta||_{H^sigma}` moved by
/// under 1% across the last third of the spin-up.
pub fn attractor_sample(params: &SqgParams, cfg: StepperConfig, ac: AttractorConfig) -> Result<AttractorSample> {
    let grid = params.grid();
    let mut r = rng::stream(ac.seed, "attractor-init");
    let theta0 = random_field(grid, &mut r, ac.init_band, ac.init_sigma, ac.init_norm);
    let spin = integrate(&theta0, params, cfg, 0.0, ac.spinup, ac.sample_every)?;
    let norms: Vec<f64> = spin.samples.iter().map(|t| t.sobolev_norm(ac.init_sigma)).collect();
    let cut = norms.len() * 2 / 3;
    let max_all = norms.iter().fold(0.0f64, |m, &x| m.max(x));
    let max_early = norms[..cut.max(1)].iter().fold(0.0f64, |m, &x| m.max(x));
    let drift = if max_all > 0.0 { (max_all - max_early) / max_all } else { 0.0 };
    let traj = integrate(spin.last(), params, cfg, spin.end_time(), ac.window, ac.sample_every)?;
    Ok(AttractorSample { traj, settled: drift < 0.01, drift })
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub theta: SpectralField,
    pub residual: f64,
    pub converged: bool,
    pub t: f64,
}

/// Residual of the steady equation in `H^{sigma - gamma}`.
pub fn steady_residual_norm(theta: &SpectralField, params: &SqgParams, sigma: f64) -> f64 {
    params.steady_residual(theta).sobolev_norm(sigma - params.gamma)
}

/// Forward integration until the steady residual drops below `tol`.
pub fn steady_state_find(
    params: &SqgParams,
    cfg: StepperConfig,
    theta0: &SpectralField,
    sigma: f64,
    tol: f64,
    t_max: f64,
) -> Result<SteadyState> {
    if params.forcing.period().is_some() {
        return Err(param("forcing", "steady states need time-independent forcing"));
    }
    let prop = Propagator::new(&params.linear_rates(theta0.grid()), cfg);
    let check = ((0.1 / cfg.dt).round() as usize).max(1);
    let mut u = theta0.clone();
    let mut t = 0.0;
    let mut residual = steady_residual_norm(&u, params, sigma);
    let mut steps = 0usize;
    while residual >= tol && t < t_max {
        u = prop.step(t, &u, &mut |s, th| params.nonlinear(s, th));
        t += cfg.dt;
        steps += 1;
        check_finite(&u, t)?;
        if steps % check == 0 {
            residual = steady_residual_norm(&u, params, sigma);
        }
    }
    residual = steady_residual_norm(&u, params, sigma);
    Ok(SteadyState { converged: residual < tol, theta: u, residual, t })
}

#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub start: SpectralField,
    pub orbit: Trajectory,
    pub closure: f64,
    pub iterations: usize,
}

/// Fixed point of the period map by Picard iteration. The step is shrunk
/// so a whole number of steps fills one period.
pub fn periodic_orbit(
    params: &SqgParams,
    cfg: StepperConfig,
    theta0: &SpectralField,
    tol: f64,
    max_iter: usize,
    sample_every: usize,
) -> Result<PeriodicOrbit> {
    let period = params.forcing.period().ok_or_else(|| param("forcing.period", "periodic forcing required"))?;
    let per_period = (period / cfg.dt).ceil() as usize;
    let per_period = per_period.div_ceil(sample_every) * sample_every;
    let cfg = StepperConfig { dt: period / per_period as f64, ..cfg };
    let prop = Propagator::new(&params.linear_rates(theta0.grid()), cfg);
    let mut u = theta0.clone();
    for it in 1..=max_iter {
        let traj = run(&u, 0.0, period, sample_every, &prop, &mut |s, th| params.nonlinear(s, th), &mut |_, _| {})?;
        let next = traj.last().clone();
        let closure = next.sub(&u).l2proxy();
        if closure < tol {
            return Ok(PeriodicOrbit { start: u, orbit: traj, closure, iterations: it });
        }
        u = next;
    }
    Err(Error::Diverged(format!("period map did not close to {tol} in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phis_match_at_switch() {
        let (a1, a2, a3) = phis(-0.4999999);
        let (b1, b2, b3) = phis(-0.5000001);
        assert!((a1 - b1).abs() < 1e-7 && (a2 - b2).abs() < 1e-7 && (a3 - b3).abs() < 1e-7);
        let (p1, p2, p3) = phis(0.0);
        assert_eq!((p1, p2), (1.0, 0.5));
        assert!((p3 - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn gamma_outside_range_names_h1() {
        let g = TorusGrid::new(16).unwrap();
        let err = SqgParams::new(1.0, 2.5, Forcing::Steady(SpectralField::zeros(g))).unwrap_err();
        assert!(err.to_string().contains("(H1)"));
    }

    #[test]
    fn interpolation_clamps() {
        let g = TorusGrid::new(8).unwrap();
        let a = SpectralField::from_fn(g, |x, _| x.cos());
        let tr = Trajectory::new(1.0, 0.5, vec![a.scale(0.0), a.clone(), a.scale(3.0)]).unwrap();
        assert!(tr.at(0.0).l2proxy() == 0.0);
        assert!(tr.at(1.75).max_abs_diff(&a.scale(2.0)) < 1e-15);
        assert!(tr.at(9.0).max_abs_diff(&a.scale(3.0)) < 1e-15);
    }
}
