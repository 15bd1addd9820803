//! Littlewood-Paley blocks built from a smooth radial bump.
//!
//! `phi_{-1}(k) = psi0(|k|)` and `phi_j(k) = psi0(|k| 2^{-j-1}) - psi0(|k| 2^{-j})`,
//! so that `S_m = sum_{j <= m} Delta_j` has symbol `psi0(|k| 2^{-m-1})`.

use crate::error::{param, Error, Result};
use crate::spectral::{fractional_laplacian, PhysicalField, SpectralField, TorusGrid, C64};

fn smooth_step(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Equal to 1 on `[0, 1/4]`, 0 on `[1/2, inf)`, smooth in between.
pub fn standard_psi0(r: f64) -> f64 {
    let a = smooth_step((0.5 - r) * 4.0);
    let b = smooth_step((r - 0.25) * 4.0);
    a / (a + b)
}

#[derive(Clone, Copy, Debug)]
pub struct BumpProfile {
    psi0: fn(f64) -> f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self { psi0: standard_psi0 }
    }
}

impl BumpProfile {
    pub fn standard() -> Self {
        Self::default()
    }

    /// Accepts a caller-supplied profile after sampling it on `[0, 1]`.
    pub fn custom(psi0: fn(f64) -> f64) -> Result<Self> {
        let mut prev = f64::INFINITY;
        for i in 0..=4096 {
            let r = i as f64 / 4096.0;
            let v = psi0(r);
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(param("psi0", format!("value {v} at r = {r} outside [0, 1]")));
            }
            if r <= 0.25 && v != 1.0 {
                return Err(param("psi0", format!("psi0({r}) = {v}, expected 1")));
            }
            if r >= 0.5 && v != 0.0 {
                return Err(param("psi0", format!("psi0({r}) = {v}, expected 0")));
            }
            if v > prev + 1e-15 {
                return Err(param("psi0", format!("increases near r = {r}")));
            }
            prev = v;
        }
        Ok(Self { psi0 })
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (self.psi0)(r)
    }
}

/// Dyadic block tables for one grid.
#[derive(Clone, Debug)]
pub struct LpBlocks {
    grid: TorusGrid,
    j_max: i32,
    profile: BumpProfile,
    modulus: Vec<f64>,
}

impl LpBlocks {
    pub fn new(grid: TorusGrid) -> Self {
        Self::with_profile(grid, BumpProfile::standard())
    }

    /// `j_max` is the least `J` with `2^{J-1}` at or above the largest
    /// lattice modulus, so `S_{j_max}` is exactly the identity.
    pub fn with_profile(grid: TorusGrid, profile: BumpProfile) -> Self {
        let radius = grid.lattice_radius();
        let mut j_max = 0;
        while 2f64.powi(j_max - 1) < radius {
            j_max += 1;
        }
        Self { grid, j_max, profile, modulus: grid.modulus_table() }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn profile(&self) -> BumpProfile {
        self.profile
    }

    /// Symbol of `Delta_j` at radius `r`.
    pub fn block_symbol(&self, j: i32, r: f64) -> f64 {
        let p = &self.profile;
        if j == -1 {
            p.eval(r)
        } else {
            p.eval(r * 2f64.powi(-j - 1)) - p.eval(r * 2f64.powi(-j))
        }
    }

    /// Symbol of `S_m`; zero for `m < -1`.
    pub fn lowpass_symbol(&self, m: i32, r: f64) -> f64 {
        if m < -1 {
            0.0
        } else {
            self.profile.eval(r * 2f64.powi(-m - 1))
        }
    }

    fn check_j(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_max {
            Err(Error::BlockIndex { j, j_max: self.j_max })
        } else {
            Ok(())
        }
    }

    pub fn block_table(&self, j: i32) -> Result<Vec<f64>> {
        self.check_j(j)?;
        Ok(self.modulus.iter().map(|&r| self.block_symbol(j, r)).collect())
    }

    pub fn lowpass_table(&self, m: i32) -> Vec<f64> {
        self.modulus.iter().map(|&r| self.lowpass_symbol(m, r)).collect()
    }

    pub fn block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.same_grid(f)?;
        Ok(f.apply_table(&self.block_table(j)?))
    }

    /// `sum_{|i - j| <= 1} Delta_i f` over valid indices.
    pub fn tilde_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_j(j)?;
        self.same_grid(f)?;
        let table: Vec<f64> = self
            .modulus
            .iter()
            .map(|&r| ((j - 1).max(-1)..=(j + 1).min(self.j_max)).map(|i| self.block_symbol(i, r)).sum())
            .collect();
        Ok(f.apply_table(&table))
    }

    pub fn lowpass(&self, f: &SpectralField, m: i32) -> SpectralField {
        if m >= self.j_max {
            return f.clone();
        }
        f.apply_table(&self.lowpass_table(m))
    }

    pub fn highpass(&self, f: &SpectralField, m: i32) -> SpectralField {
        f.sub(&self.lowpass(f, m))
    }

    /// Pointwise `(sum_j |Delta_j f|^2)^{1/2}`, or with tilde blocks.
    pub fn square_function(&self, f: &SpectralField, tilde: bool) -> Result<PhysicalField> {
        self.same_grid(f)?;
        let mut acc = vec![0.0; self.grid.len()];
        for j in -1..=self.j_max {
            let b = if tilde { self.tilde_block(f, j)? } else { self.block(f, j)? };
            for (a, v) in acc.iter_mut().zip(b.to_physical().values()) {
                *a += v * v;
            }
        }
        PhysicalField::new(self.grid, acc.into_iter().map(f64::sqrt).collect())
    }

    /// Applies a block or tilde block to raw coefficients that may carry a
    /// mean (truncations are not mean-zero).
    pub(crate) fn apply_raw(&self, coeffs: &[C64], j: i32, tilde: bool) -> Vec<C64> {
        let lo = if tilde { (j - 1).max(-1) } else { j };
        let hi = if tilde { (j + 1).min(self.j_max) } else { j };
        coeffs
            .iter()
            .zip(&self.modulus)
            .map(|(c, &r)| c * (lo..=hi).map(|i| self.block_symbol(i, r)).sum::<f64>())
            .collect()
    }

    /// `sum_j 2^{2 j beta} ||Delta_j f||^2 / ||f||^2_{H^beta}`.
    pub fn besov_ratio(&self, f: &SpectralField, beta: f64) -> Result<f64> {
        let mut s = 0.0;
        for j in 0..=self.j_max {
            s += 2f64.powf(2.0 * j as f64 * beta) * self.block(f, j)?.l2proxy().powi(2);
        }
        Ok(s / f.sobolev_norm(beta).powi(2))
    }

    /// Largest Bernstein constants seen over an ensemble.
    pub fn bernstein_check(&self, ensemble: &[SpectralField], j: i32, beta: f64, p: f64, q: f64) -> Result<BernsteinReport> {
        self.check_j(j)?;
        if !(p >= 1.0 && p <= q) {
            return Err(param("p, q", format!("need 1 <= p <= q, got p = {p}, q = {q}")));
        }
        let jf = j.max(0) as f64;
        let gap = 2.0 * (1.0 / p - 1.0 / q);
        let (mut lower, mut upper, mut low, mut used) = (0.0f64, 0.0f64, 0.0f64, 0);
        for g in ensemble {
            let d = self.block(g, j)?;
            if d.l2proxy() == 0.0 {
                continue;
            }
            used += 1;
            let dq = d.to_physical().lebesgue_norm(q)?;
            let dp = d.to_physical().lebesgue_norm(p)?;
            let ld = fractional_laplacian(&d, beta).to_physical().lebesgue_norm(q)?;
            lower = lower.max(2f64.powf(jf * beta) * dq / ld);
            upper = upper.max(ld / (2f64.powf(jf * (beta + gap)) * dp));
            let s = self.lowpass(g, j);
            let sp = s.to_physical().lebesgue_norm(p)?;
            let ls = fractional_laplacian(&s, beta).to_physical().lebesgue_norm(q)?;
            if sp > 0.0 {
                low = low.max(ls / (2f64.powf(jf * (beta + gap)) * sp));
            }
        }
        if used == 0 {
            return Err(param("ensemble", format!("block {j} vanishes on every sample")));
        }
        let ceiling = BernsteinReport::DEFAULT_CEILING;
        Ok(BernsteinReport {
            j,
            beta,
            p,
            q,
            lower,
            upper,
            lowpass: low,
            samples: used,
            ceiling,
            passed: lower <= ceiling && upper <= ceiling && low <= ceiling,
        })
    }

    fn same_grid(&self, f: &SpectralField) -> Result<()> {
        if f.grid().n() != self.grid.n() {
            Err(Error::GridMismatch(self.grid.n(), f.grid().n()))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct BernsteinReport {
    pub j: i32,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
    pub lowpass: f64,
    pub samples: usize,
    pub ceiling: f64,
    pub passed: bool,
}

impl BernsteinReport {
    pub const DEFAULT_CEILING: f64 = 1e3;
}
