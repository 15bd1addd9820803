//! Level-set truncations, De Giorgi energies and the iteration lemma.
//!
//! Truncations are not band-limited, so their norms are taken on a grid
//! twice as fine, where the squares of band-limited fields are exact.
//! Spatial integrals are reported as means over the torus, matching the
//! coefficient convention used for Sobolev norms.

use serde::Serialize;

use crate::bounds;
use crate::dynamics::Trajectory;
use crate::error::{param, Error, Result};
use crate::lp::LpBlocks;
use crate::spectral::{forward_raw, fractional_laplacian, inverse_raw, zero_pad, PhysicalField, SpectralField, TorusGrid};

/// `phi(f) = (f - lambda)_+` pointwise.
pub fn truncate(f: &PhysicalField, lambda: f64) -> PhysicalField {
    f.map(|v| excess(v, lambda))
}

/// `f_lambda`: `f` clipped to `[-lambda, lambda]`.
pub fn clip(f: &PhysicalField, lambda: f64) -> PhysicalField {
    f.map(|v| v.clamp(-lambda, lambda))
}

/// `(x - lambda)_+`.
#[inline]
pub fn excess(x: f64, lambda: f64) -> f64 {
    (x - lambda).max(0.0)
}

#[derive(Clone, Debug)]
pub struct LambdaDecomposition {
    pub clipped: PhysicalField,
    pub plus: PhysicalField,
    pub minus: PhysicalField,
}

/// `f = f_lambda + (f - lambda)_+ - (-f - lambda)_+`.
pub fn lambda_decompose(f: &PhysicalField, lambda: f64) -> Result<LambdaDecomposition> {
    if !(lambda > 0.0) {
        return Err(param("lambda", format!("{lambda} must be positive")));
    }
    Ok(LambdaDecomposition {
        clipped: clip(f, lambda),
        plus: truncate(f, lambda),
        minus: f.map(|v| excess(-v, lambda)),
    })
}

/// Grid with twice the points of `g`.
pub fn fine_grid(g: TorusGrid) -> TorusGrid {
    TorusGrid::new(2 * g.n()).expect("doubling a valid grid")
}

fn oversample(w: &SpectralField) -> PhysicalField {
    zero_pad(w, fine_grid(w.grid())).expect("padding onto a finer grid").to_physical()
}

/// Mean square and `H^{gamma/2}` seminorm squared of arbitrary samples.
fn raw_energy(grid: TorusGrid, values: &[f64], gamma: f64, modulus: &[f64]) -> (f64, f64) {
    let c = forward_raw(grid.n(), values);
    let mut l2 = 0.0;
    let mut h = 0.0;
    for (ci, &r) in c.iter().zip(modulus) {
        let e = ci.norm_sqr();
        l2 += e;
        if r > 0.0 {
            h += r.powf(gamma) * e;
        }
    }
    (l2, h)
}

/// `(||Phi||^2, ||Phi||^2_{H^{gamma/2}})` for `Phi = ((w - lambda)_+, (-w - lambda)_+)`.
pub fn phi_vector_energy(w: &SpectralField, lambda: f64, gamma: f64) -> (f64, f64) {
    let p = oversample(w);
    let modulus = p.grid().modulus_table();
    phi_energy_on(&p, lambda, gamma, &modulus)
}

fn phi_energy_on(p: &PhysicalField, lambda: f64, gamma: f64, modulus: &[f64]) -> (f64, f64) {
    let plus: Vec<f64> = p.values().iter().map(|&v| excess(v, lambda)).collect();
    let minus: Vec<f64> = p.values().iter().map(|&v| excess(-v, lambda)).collect();
    let (a, b) = raw_energy(p.grid(), &plus, gamma, modulus);
    let (c, d) = raw_energy(p.grid(), &minus, gamma, modulus);
    (a + c, b + d)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LevelSetConfig {
    /// Top level `M`; `lambda_n = M (1 - 2^{-n})`.
    pub m: f64,
    pub n_max: usize,
    pub delta_inf: f64,
    /// Start of the window; `s_n = s0 + delta_inf (1 - 2^{-n})`.
    pub s0: f64,
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

/// `U_n = sup_{[s_n, S]} ||Phi_n||^2 + kappa int_{s_n}^S ||Phi_n||^2_{H^{gamma/2}}`
/// for `n = 0..=n_max`, with values between samples interpolated linearly.
pub fn level_energies(w: &Trajectory, cfg: &LevelSetConfig, gamma: f64, kappa: f64) -> Result<Vec<f64>> {
    if !(cfg.m > 0.0 && cfg.delta_inf > 0.0) {
        return Err(param("M, delta_inf", "must be positive"));
    }
    let end = cfg.s0 + cfg.delta_inf;
    if cfg.s0 < w.t0 - 1e-12 || end > w.end_time() + 1e-9 * w.dt {
        return Err(Error::Window(format!("[{}, {}] not inside [{}, {}]", cfg.s0, end, w.t0, w.end_time())));
    }
    let first = (((cfg.s0 - w.t0) / w.dt) + 1e-9).floor() as usize;
    let last = (((end - w.t0) / w.dt) - 1e-9).ceil().min((w.len() - 1) as f64) as usize;
    let fine = fine_grid(w.grid());
    let modulus = fine.modulus_table();
    let levels: Vec<f64> = (0..=cfg.n_max).map(|n| cfg.m * (1.0 - 2f64.powi(-(n as i32)))).collect();
    // energies[i][n] for samples first..=last
    let energies: Vec<Vec<(f64, f64)>> = (first..=last)
        .map(|i| {
            let p = oversample(&w.samples[i]);
            levels.iter().map(|&l| phi_energy_on(&p, l, gamma, &modulus)).collect()
        })
        .collect();
    let times: Vec<f64> = (first..=last).map(|i| w.time(i)).collect();
    let at = |n: usize, s: f64| -> (f64, f64) {
        let k = times.iter().rposition(|&t| t <= s + 1e-12).unwrap_or(0).min(times.len().saturating_sub(2));
        if times.len() == 1 {
            return energies[0][n];
        }
        let x = ((s - times[k]) / w.dt).clamp(0.0, 1.0);
        let (a, b) = (energies[k][n], energies[k + 1][n]);
        (lerp(a.0, b.0, x), lerp(a.1, b.1, x))
    };
    let mut out = Vec::with_capacity(cfg.n_max + 1);
    for n in 0..=cfg.n_max {
        let sn = cfg.s0 + cfg.delta_inf * (1.0 - 2f64.powi(-(n as i32)));
        let mut pts = vec![(sn, at(n, sn))];
        for (k, &t) in times.iter().enumerate() {
            if t > sn + 1e-12 && t < end - 1e-12 {
                pts.push((t, energies[k][n]));
            }
        }
        pts.push((end, at(n, end)));
        let sup = pts.iter().fold(0.0f64, |m, p| m.max(p.1 .0));
        let integral: f64 = pts.windows(2).map(|q| 0.5 * (q[1].0 - q[0].0) * (q[0].1 .1 + q[1].1 .1)).sum();
        out.push(sup + kappa * integral);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSetReport {
    pub lambda: f64,
    pub residuals: Vec<f64>,
    pub min_residual: f64,
    /// Whether `2^{gamma m} >= mu / kappa`; the inequality is only
    /// claimed under it.
    pub resolution_ok: bool,
}

/// Terms of the level-set energy inequality at each sample.
struct LevelTerms {
    energy: f64,
    dissipation: f64,
    forcing: f64,
    feedback: f64,
}

/// `RHS - LHS` of the level-set energy inequality over sample pairs
/// `(i, j)`, `i < j`. `v` holds the observations at the same times as `w`.
#[allow(clippy::too_many_arguments)]
pub fn levelset_inequality_check(
    w: &Trajectory,
    v: &Trajectory,
    forcing: &dyn Fn(f64) -> SpectralField,
    kappa: f64,
    gamma: f64,
    mu: f64,
    m: i32,
    lambda: f64,
    pairs: &[(usize, usize)],
) -> Result<LevelSetReport> {
    if !(lambda > 0.0) {
        return Err(param("lambda", "must be positive"));
    }
    if v.len() != w.len() {
        return Err(Error::Window("observation and state sample counts differ".into()));
    }
    let grid = w.grid();
    let coarse_blocks = LpBlocks::new(grid);
    let fine = fine_grid(grid);
    let blocks = LpBlocks::new(fine);
    let modulus = fine.modulus_table();
    let len = fine.len();
    let square = |values: &[f64], tilde: bool| -> Vec<f64> {
        let c = forward_raw(fine.n(), values);
        let mut acc = vec![0.0; len];
        for j in -1..=blocks.j_max() {
            let b = inverse_raw(fine.n(), &blocks.apply_raw(&c, j, tilde));
            for (a, x) in acc.iter_mut().zip(&b) {
                *a += x.re * x.re;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    };
    let mut needed: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    needed.sort_unstable();
    needed.dedup();
    if needed.last().is_some_and(|&i| i >= w.len()) {
        return Err(Error::Window("pair index past the end of the trajectory".into()));
    }
    let lo = *needed.first().unwrap_or(&0);
    let hi = *needed.last().unwrap_or(&0);
    let mut terms = Vec::with_capacity(hi + 1 - lo);
    for i in lo..=hi {
        let s = w.time(i);
        let p = oversample(&w.samples[i]);
        let (energy, dissipation) = phi_energy_on(&p, lambda, gamma, &modulus);
        let drive = zero_pad(&forcing(s).axpy(mu, &coarse_blocks.lowpass(&v.samples[i], m)), fine)?.to_physical();
        let forcing_term = p
            .values()
            .iter()
            .zip(drive.values())
            .map(|(&x, &d)| d.abs() * excess(x.abs(), lambda))
            .sum::<f64>()
            / len as f64;
        let clipped: Vec<f64> = p.values().iter().map(|&x| x.clamp(-lambda, lambda)).collect();
        let plus: Vec<f64> = p.values().iter().map(|&x| excess(x, lambda)).collect();
        let minus: Vec<f64> = p.values().iter().map(|&x| excess(-x, lambda)).collect();
        let s_clip = square(&clipped, false);
        let s_plus = square(&plus, true);
        let s_minus = square(&minus, true);
        let feedback = (0..len).map(|k| s_clip[k] * (s_plus[k] + s_minus[k])).sum::<f64>() / len as f64;
        terms.push(LevelTerms { energy, dissipation, forcing: forcing_term, feedback });
    }
    let t = |i: usize| &terms[i - lo];
    let mut residuals = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        if a >= b {
            return Err(param("pairs", format!("({a}, {b}) is not increasing")));
        }
        let mut diss = 0.0;
        let mut drive = 0.0;
        for i in a..b {
            let h = 0.5 * w.dt;
            diss += h * (t(i).dissipation + t(i + 1).dissipation);
            drive += h * (2.0 * 2f64.sqrt() * (t(i).forcing + t(i + 1).forcing) + 2.0 * mu * (t(i).feedback + t(i + 1).feedback));
        }
        let lhs = t(b).energy + kappa * diss;
        let rhs = t(a).energy + drive;
        residuals.push(rhs - lhs);
    }
    let min_residual = residuals.iter().fold(f64::INFINITY, |m, &r| m.min(r));
    Ok(LevelSetReport { lambda, residuals, min_residual, resolution_ok: 2f64.powf(gamma * m as f64) >= mu / kappa })
}

/// `alpha` from `1/(P+Q) = (1 - alpha)/2 + alpha (2 - gamma)/4`.
pub fn interpolation_exponent(p: f64, q: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0 && gamma < 2.0) {
        return Err(Error::Hypothesis { tag: "(H1)", detail: format!("gamma = {gamma} not in (1, 2)") });
    }
    let alpha = (0.5 - 1.0 / (p + q)) / (gamma / 4.0);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param("P, Q", format!("alpha = {alpha} outside (0, 1) for P = {p}, Q = {q}")));
    }
    Ok(alpha)
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: Vec<f64>,
    pub v0: f64,
    pub v1: f64,
    pub c0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationVerdict {
    Holds,
    /// The bound failed but `M` is below the threshold, so nothing is claimed.
    HypothesisNotMet,
    /// The bound failed although `M` clears the threshold.
    Violated,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationReport {
    pub sequence: Vec<f64>,
    pub y0: f64,
    pub threshold: f64,
    /// Threshold of the `V_1 <= V_0` form.
    pub threshold_monotone: f64,
    pub hypothesis_met: bool,
    /// Whether the supplied `V_1` is consistent with the recursion from `V_0`.
    pub v1_consistent: bool,
    pub verdict: IterationVerdict,
}

/// Builds the extremal sequence `V_n = C 2^{na} M^{-b} sum_j V_{n-1}^{d_j}` from
/// `V_0` and checks `V_n <= V_0 2^{-n y0}` for `n >= 2`.
pub fn iteration_lemma_check(ip: &IterationParams, big_m: f64, n_max: usize) -> Result<IterationReport> {
    if ip.d.is_empty() {
        return Err(param("d", "need at least one exponent"));
    }
    let d = ip.d.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(d > 1.5) {
        return Err(param("d", format!("min d = {d} must exceed 3/2")));
    }
    if !(ip.a > 0.0 && ip.b > 0.0 && ip.c > 0.0 && ip.v0 > 0.0 && ip.v1 >= 0.0 && big_m > 0.0) {
        return Err(param("a, b, C, V0, M", "must be positive"));
    }
    let y0 = 3.0 * ip.a / (2.0 * d - 3.0);
    let sum_pow = |v: f64, shift: f64| ip.d.iter().map(|dj| v.powf(dj - shift)).sum::<f64>();
    let threshold = ip.c0
        * ((2f64.powf(2.0 * (ip.a + y0)) * sum_pow(ip.v1, 0.0) / ip.v0).powf(1.0 / ip.b))
            .max((sum_pow(ip.v0, 0.0) / ip.v0).powf(1.0 / ip.b));
    let threshold_monotone = ip.c0 * (2f64.powf(2.0 * (ip.a + y0)) * sum_pow(ip.v0, 1.0)).powf(1.0 / ip.b);
    let mut seq = vec![ip.v0];
    for n in 1..=n_max {
        let prev = seq[n - 1];
        seq.push(ip.c * 2f64.powf(n as f64 * ip.a) / big_m.powf(ip.b) * sum_pow(prev, 0.0));
    }
    let holds = (2..=n_max).all(|n| seq[n] <= ip.v0 * 2f64.powf(-(n as f64) * y0) * (1.0 + 1e-12));
    let hypothesis_met = big_m >= threshold;
    let v1_consistent = n_max < 1 || seq[1] <= ip.v1 * (1.0 + 1e-12);
    let verdict = match (holds, hypothesis_met) {
        (true, _) => IterationVerdict::Holds,
        (false, false) => IterationVerdict::HypothesisNotMet,
        (false, true) => IterationVerdict::Violated,
    };
    Ok(IterationReport { sequence: seq, y0, threshold, threshold_monotone, hypothesis_met, v1_consistent, verdict })
}

#[derive(Clone, Debug, Serialize)]
pub struct LinftyEstimate {
    pub estimate: f64,
    pub measured_sup: f64,
    pub margin: f64,
    /// Smallest `C` for which the estimate covers the measurement.
    pub calibration: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinftyInputs {
    pub kappa: f64,
    pub mu: f64,
    pub gamma: f64,
    pub p: f64,
    /// `||f||_{L^p} / kappa`.
    pub f_lp: f64,
    /// `sup ||v||_{L^p}`.
    pub rho0: f64,
    pub u0: f64,
    pub delta_inf: f64,
}

pub fn linfty_bound_estimate(x: &LinftyInputs, measured_sup: f64, c: f64) -> LinftyEstimate {
    let unit = bounds::dg_bound(1.0, x.kappa, x.mu, x.gamma, x.p, x.f_lp, x.rho0, x.u0, x.delta_inf);
    let estimate = c * unit;
    let calibration = if unit > 0.0 { measured_sup / unit } else { 0.0 };
    LinftyEstimate { estimate, measured_sup, margin: estimate - measured_sup, calibration }
}

/// `(int g^{p-1} Lambda^gamma g, (1/p) ||Lambda^{gamma/2} g^{p/2}||^2)` as torus
/// means, for even `p`. The grid must resolve `g^p`.
pub fn fractional_lower_bound(g: &SpectralField, gamma: f64, p: u32, oversample_to: TorusGrid) -> Result<(f64, f64)> {
    if p < 2 || p % 2 != 0 {
        return Err(param("p", format!("{p} is not an even integer >= 2")));
    }
    let gf = zero_pad(g, oversample_to)?;
    let vals = gf.to_physical();
    let lg = fractional_laplacian(&gf, gamma).to_physical();
    let len = oversample_to.len() as f64;
    let lhs = vals.values().iter().zip(lg.values()).map(|(x, l)| x.powi(p as i32 - 1) * l).sum::<f64>() / len;
    let half: Vec<f64> = vals.values().iter().map(|x| x.powi(p as i32 / 2)).collect();
    let (_, h) = raw_energy(oversample_to, &half, gamma, &oversample_to.modulus_table());
    Ok((lhs, h / p as f64))
}

/// `(int (Lambda^gamma g) (g - lambda)_+, ||(g - lambda)_+||^2_{H^{gamma/2}})` as
/// torus means on the given grid.
pub fn positivity_pair(g: &SpectralField, lambda: f64, gamma: f64, on: TorusGrid) -> Result<(f64, f64)> {
    let gf = zero_pad(g, on)?;
    let vals = gf.to_physical();
    let lg = fractional_laplacian(&gf, gamma).to_physical();
    let phi: Vec<f64> = vals.values().iter().map(|&x| excess(x, lambda)).collect();
    let lhs = lg.values().iter().zip(&phi).map(|(l, f)| l * f).sum::<f64>() / on.len() as f64;
    let (_, h) = raw_energy(on, &phi, gamma, &on.modulus_table());
    Ok((lhs, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_iteration_instance() {
        let ip = IterationParams { a: 1.0, b: 1.0, c: 1.0, d: vec![2.0], v0: 1.0, v1: 1.0, c0: 1.0 };
        let r = iteration_lemma_check(&ip, 256.0, 6).unwrap();
        assert_eq!(r.y0, 3.0);
        assert_eq!(r.threshold, 256.0);
        assert!(r.hypothesis_met);
        assert_eq!(r.verdict, IterationVerdict::Holds);
        let v2 = 4.0 / 256.0 * (2.0f64 / 256.0).powi(2);
        assert!((r.sequence[2] - v2).abs() < 1e-20);
        assert!(r.sequence[2] < 1e-6);
    }

    #[test]
    fn alpha_for_p2_q_gamma() {
        for gamma in [1.1, 1.5, 1.9] {
            let a = interpolation_exponent(2.0, gamma, gamma).unwrap();
            assert!((a - 2.0 / (2.0 + gamma)).abs() < 1e-15);
        }
        assert!(interpolation_exponent(2.0, 1.5, 2.5).is_err());
        assert!(interpolation_exponent(0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn decompose_rejects_non_positive_level() {
        let g = TorusGrid::new(8).unwrap();
        let f = PhysicalField::from_fn(g, |x, _| x.sin());
        assert!(lambda_decompose(&f, 0.0).is_err());
    }
}
