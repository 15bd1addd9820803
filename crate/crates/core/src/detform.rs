//! Determining form: the nudged solution map `W`, its trajectory norms, and
//! the ODE `dv/dtau = -||v - S_m W(v)||_X^2 (v - S_m theta*)`.

use serde::Serialize;

use crate::dynamics::{run, SqgParams, StepperConfig, Trajectory};
use crate::error::{param, Error, Result};
use crate::lp::LpBlocks;
use crate::nudging::{NudgeParams, Nudged};
use crate::rng;
use crate::spectral::{random_field, SpectralField};

/// Centred differences inside, one-sided at the ends.
pub fn time_derivative(v: &Trajectory) -> Result<Trajectory> {
    let n = v.len();
    if n < 2 {
        return Err(Error::Window("a derivative needs at least two samples".into()));
    }
    let h = v.dt;
    let samples = (0..n)
        .map(|i| match i {
            0 => v.samples[1].sub(&v.samples[0]).scale(1.0 / h),
            i if i == n - 1 => v.samples[n - 1].sub(&v.samples[n - 2]).scale(1.0 / h),
            i => v.samples[i + 1].sub(&v.samples[i - 1]).scale(0.5 / h),
        })
        .collect();
    Trajectory::new(v.t0, h, samples)
}

/// `sup_s ||w(s)||_{H^sigma}`.
pub fn y_norm(w: &Trajectory, sigma: f64) -> f64 {
    w.samples.iter().fold(0.0, |m: f64, f| m.max(f.sobolev_norm(sigma)))
}

/// `sup ||v||_{H^sigma} + 2^{-(2 + sigma) m} sup ||v'||_{H^sigma}`.
pub fn x_norm(v: &Trajectory, sigma: f64, m: i32) -> Result<f64> {
    let dv = time_derivative(v)?;
    Ok(y_norm(v, sigma) + 2f64.powf(-(2.0 + sigma) * m as f64) * y_norm(&dv, sigma))
}

/// `C (1 + kappa) (1 + ||f||_{H^{-gamma/2}} / kappa)^2`.
pub fn radius_r(sqg: &SqgParams, c: f64) -> f64 {
    let f = sqg.forcing.shape().sobolev_norm(-sqg.gamma / 2.0) / sqg.kappa;
    c * (1.0 + sqg.kappa) * (1.0 + f).powi(2)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WMapConfig {
    pub relax_time: f64,
    pub tol_forget: f64,
}

impl WMapConfig {
    /// Relaxation long enough to forget the start by `tol_forget`.
    pub fn for_mu(mu: f64, tol_forget: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(param("nudge.mu", "W needs mu > 0"));
        }
        if !(tol_forget > 0.0 && tol_forget < 1.0) {
            return Err(param("tol_forget", "must lie in (0, 1)"));
        }
        Ok(Self { relax_time: (1.0 / tol_forget).ln() / mu, tol_forget })
    }

    pub fn new(relax_time: f64, tol_forget: f64, mu: f64) -> Result<Self> {
        let min = Self::for_mu(mu, tol_forget)?;
        if relax_time + 1e-12 < min.relax_time {
            return Err(param("relax_time", format!("{relax_time} < ln(1/tol)/mu = {}", min.relax_time)));
        }
        Ok(Self { relax_time, tol_forget })
    }
}

/// `W(v)` sampled at the times of `v`. The nudged equation starts at
/// `v.t0 - relax_time` from `w_init` (zero by default), with `v` held
/// constant before its window. The step is shrunk to divide the sample
/// spacing.
#[allow(clippy::too_many_arguments)]
pub fn w_map(
    v: &Trajectory,
    sqg: &SqgParams,
    nudge: &NudgeParams,
    blocks: &LpBlocks,
    cfg: StepperConfig,
    wc: &WMapConfig,
    w_init: Option<&SpectralField>,
) -> Result<Trajectory> {
    let grid = v.grid();
    let per_sample = if v.len() > 1 { (v.dt / cfg.dt - 1e-9).ceil().max(1.0) as usize } else { 1 };
    let h = if v.len() > 1 { v.dt / per_sample as f64 } else { cfg.dt };
    let relax_steps = (wc.relax_time / h - 1e-9).ceil().max(0.0) as usize;
    let sys = Nudged::new(sqg, nudge, blocks, StepperConfig { dt: h, ..cfg });
    let zero = SpectralField::zeros(grid);
    let w0 = w_init.unwrap_or(&zero);
    let s_start = v.t0 - relax_steps as f64 * h;
    let mut nl = |t: f64, x: &SpectralField| sys.nonlinear(t, x, v);
    let start = if relax_steps > 0 {
        run(w0, s_start, relax_steps as f64 * h, relax_steps, sys.propagator(), &mut nl, &mut |_, _| {})?.last().clone()
    } else {
        w0.clone()
    };
    let span = (v.len() - 1) as f64 * v.dt;
    let traj = run(&start, v.t0, span, per_sample, sys.propagator(), &mut nl, &mut |_, _| {})?;
    Trajectory::new(v.t0, v.dt, traj.samples.into_iter().take(v.len()).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub ratio_y: f64,
    pub ratio_hminushalf: f64,
    /// `2^{m (sigma + 1/2)}`, the predicted growth of the constant in `m`.
    pub scale_ref: f64,
}

/// Difference quotients of `S_m W` between two inputs.
#[allow(clippy::too_many_arguments)]
pub fn w_map_lipschitz_probe(
    v1: &Trajectory,
    v2: &Trajectory,
    sqg: &SqgParams,
    nudge: &NudgeParams,
    blocks: &LpBlocks,
    cfg: StepperConfig,
    wc: &WMapConfig,
) -> Result<LipschitzReport> {
    let m = nudge.level();
    let dv = v1.zip_with(v2, |a, b| a.sub(b));
    let dx = x_norm(&dv, nudge.sigma, m)?;
    if dx == 0.0 {
        return Err(param("v1, v2", "inputs coincide"));
    }
    let w1 = w_map(v1, sqg, nudge, blocks, cfg, wc, None)?;
    let w2 = w_map(v2, sqg, nudge, blocks, cfg, wc, None)?;
    let dw = w1.zip_with(&w2, |a, b| nudge.apply(blocks, &a.sub(b)));
    let raw = w1.zip_with(&w2, |a, b| a.sub(b));
    Ok(LipschitzReport {
        ratio_y: y_norm(&dw, nudge.sigma) / dx,
        ratio_hminushalf: y_norm(&raw, -0.5) / dx,
        scale_ref: 2f64.powf(m as f64 * (nudge.sigma + 0.5)),
    })
}

#[derive(Clone, Debug)]
pub struct DetformRhs {
    pub rhs: Trajectory,
    pub lambda: f64,
    pub residual: f64,
    pub w: Trajectory,
}

/// Right-hand side of the determining-form ODE at `v`.
#[allow(clippy::too_many_arguments)]
pub fn detform_rhs(
    v: &Trajectory,
    theta_star: &SpectralField,
    sqg: &SqgParams,
    nudge: &NudgeParams,
    blocks: &LpBlocks,
    cfg: StepperConfig,
    wc: &WMapConfig,
    power: i32,
) -> Result<DetformRhs> {
    if power != 1 && power != 2 {
        return Err(param("rhs_power", format!("{power} is not 1 or 2")));
    }
    let w = w_map(v, sqg, nudge, blocks, cfg, wc, None)?;
    let gap = v.zip_with(&w, |a, b| a.sub(&nudge.apply(blocks, b)));
    let residual = x_norm(&gap, nudge.sigma, nudge.level())?;
    let lambda = residual.powi(power);
    let target = nudge.apply(blocks, theta_star);
    let rhs = v.map(|a| a.sub(&target).scale(-lambda));
    Ok(DetformRhs { rhs, lambda, residual, w })
}

#[derive(Clone, Debug, Serialize)]
pub struct DetFormState {
    pub tau: f64,
    pub residual_x: f64,
    pub dist_to_steady_x: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DetformConfig {
    /// Defaults to `50 / lambda_0`.
    pub tau_span: Option<f64>,
    /// Defaults to `0.1 / lambda_0`.
    pub dtau: Option<f64>,
    pub tol: f64,
    pub power: i32,
    /// Consecutive residual increases tolerated before giving up.
    pub max_increases: usize,
}

impl Default for DetformConfig {
    fn default() -> Self {
        Self { tau_span: None, dtau: None, tol: 0.0, power: 2, max_increases: 10 }
    }
}

#[derive(Clone, Debug)]
pub struct DetformRun {
    pub states: Vec<DetFormState>,
    pub v: Trajectory,
    pub lambda0: f64,
    pub radius: f64,
    /// Whether `v0` started inside the ball of radius `3R` about `S_m theta*`.
    pub in_ball: bool,
}

fn combine(v: &Trajectory, k: &Trajectory, a: f64) -> Trajectory {
    v.zip_with(k, |x, y| x.axpy(a, y))
}

/// RK4 in `tau`; each stage evaluates `W` afresh.
#[allow(clippy::too_many_arguments)]
pub fn detform_integrate(
    v0: &Trajectory,
    theta_star: &SpectralField,
    sqg: &SqgParams,
    nudge: &NudgeParams,
    blocks: &LpBlocks,
    cfg: StepperConfig,
    wc: &WMapConfig,
    dc: &DetformConfig,
) -> Result<DetformRun> {
    let (sigma, m) = (nudge.sigma, nudge.level());
    let target = nudge.apply(blocks, theta_star);
    let dist = |v: &Trajectory| x_norm(&v.map(|a| a.sub(&target)), sigma, m);
    let radius = radius_r(sqg, 1.0);
    let in_ball = dist(v0)? <= 3.0 * radius;
    let rhs = |v: &Trajectory| detform_rhs(v, theta_star, sqg, nudge, blocks, cfg, wc, dc.power);

    let first = rhs(v0)?;
    let lambda0 = first.lambda;
    let mut states = vec![DetFormState { tau: 0.0, residual_x: first.residual, dist_to_steady_x: dist(v0)?, lambda: lambda0 }];
    if lambda0 == 0.0 || first.residual < dc.tol {
        return Ok(DetformRun { states, v: v0.clone(), lambda0, radius, in_ball });
    }
    let span = dc.tau_span.unwrap_or(50.0 / lambda0);
    let h = dc.dtau.unwrap_or(0.1 / lambda0);
    let steps = (span / h - 1e-9).ceil() as usize;
    let h = span / steps as f64;
    let mut v = v0.clone();
    let mut k1 = first.rhs;
    let mut increases = 0;
    for i in 1..=steps {
        let k2 = rhs(&combine(&v, &k1, h / 2.0))?.rhs;
        let k3 = rhs(&combine(&v, &k2, h / 2.0))?.rhs;
        let k4 = rhs(&combine(&v, &k3, h))?.rhs;
        let sum = k1.zip_with(&k2, |a, b| a.axpy(2.0, b)).zip_with(&k3, |a, b| a.axpy(2.0, b)).zip_with(&k4, |a, b| a.add(b));
        v = combine(&v, &sum, h / 6.0);
        let now = rhs(&v)?;
        let prev = states.last().unwrap().residual_x;
        increases = if now.residual > prev { increases + 1 } else { 0 };
        states.push(DetFormState { tau: h * i as f64, residual_x: now.residual, dist_to_steady_x: dist(&v)?, lambda: now.lambda });
        if increases >= dc.max_increases {
            return Err(Error::Diverged(format!("residual grew for {increases} consecutive steps at tau = {}", h * i as f64)));
        }
        if now.residual < dc.tol {
            break;
        }
        k1 = now.rhs;
    }
    Ok(DetformRun { states, v, lambda0, radius, in_ball })
}

/// `S_m theta*` held constant over `count` samples of `[t0, t1]`.
pub fn projected_steady(theta_star: &SpectralField, nudge: &NudgeParams, blocks: &LpBlocks, t0: f64, t1: f64, count: usize) -> Trajectory {
    Trajectory::constant(nudge.apply(blocks, theta_star), t0, t1, count)
}

/// `S_m theta*` plus a constant-in-time perturbation from the range of
/// `S_{m-1}`, scaled to `eps` times `||S_m theta*||_{H^sigma}`.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_steady(
    theta_star: &SpectralField,
    nudge: &NudgeParams,
    blocks: &LpBlocks,
    eps: f64,
    seed: u64,
    t0: f64,
    t1: f64,
    count: usize,
) -> Trajectory {
    let base = nudge.apply(blocks, theta_star);
    let mut r = rng::stream(seed, "detform-perturbation");
    let m = nudge.level();
    let raw = random_field(base.grid(), &mut r, 2f64.powi(m - 1), nudge.sigma, 1.0);
    let zeta = blocks.lowpass(&raw, m - 1);
    let scale = eps * base.sobolev_norm(nudge.sigma) / zeta.sobolev_norm(nudge.sigma).max(f64::MIN_POSITIVE);
    Trajectory::constant(base.axpy(scale, &zeta), t0, t1, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn x_norm_of_linear_ramp() {
        let g = TorusGrid::new(16).unwrap();
        let c = SpectralField::from_fn(g, |x, _| x.cos());
        let v = Trajectory::new(0.0, 0.25, (0..5).map(|i| c.scale(0.25 * i as f64)).collect()).unwrap();
        let want = (1.0 + 2f64.powf(-2.6 * 3.0)) / 2f64.sqrt();
        assert!((x_norm(&v, 0.6, 3).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn derivative_needs_two_samples() {
        let g = TorusGrid::new(8).unwrap();
        let v = Trajectory::new(0.0, 1.0, vec![SpectralField::zeros(g)]).unwrap();
        assert!(time_derivative(&v).is_err());
    }

    #[test]
    fn relax_time_too_short_is_rejected() {
        assert!(WMapConfig::new(0.1, 1e-8, 64.0).is_err());
        let ok = WMapConfig::for_mu(64.0, 1e-8).unwrap();
        assert!((ok.relax_time - (1e8f64).ln() / 64.0).abs() < 1e-15);
    }
}
