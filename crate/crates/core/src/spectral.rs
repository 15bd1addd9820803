//! Grids, fields and Fourier-side operators on the torus [-pi, pi]^2.
//!
//! A field is stored by its coefficients in FFT index order, normalised so
//! that `theta(x) = sum_k c(k) exp(i k.x)`. Collocation points sit at
//! `x_j = 2 pi j / n`. Retained modes satisfy `|k_i| <= n/2 - 1`; the Nyquist
//! row and column are always zero, as is the mean.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    dealias_num: u32,
    dealias_den: u32,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_dealias(n, 2, 3)
    }

    pub fn with_dealias(n: usize, num: u32, den: u32) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!("n = {n} must be even and at least 8")));
        }
        if den == 0 || num == 0 || num > den {
            return Err(Error::Grid(format!("dealias fraction {num}/{den} outside (0, 1]")));
        }
        Ok(Self { n, dealias_num: num, dealias_den: den })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained |k_i|.
    pub fn kmax(&self) -> i64 {
        self.n as i64 / 2 - 1
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_num as f64 / self.dealias_den as f64
    }

    /// Largest |k_i| kept by the dealiasing filter.
    pub fn dealias_kmax(&self) -> i64 {
        (self.n as i64 / 2 * self.dealias_num as i64) / self.dealias_den as i64
    }

    /// Euclidean radius of the dealiased box.
    pub fn dealiased_radius(&self) -> f64 {
        self.dealias_kmax() as f64 * 2f64.sqrt()
    }

    /// Largest |k| on the retained lattice.
    pub fn lattice_radius(&self) -> f64 {
        self.kmax() as f64 * 2f64.sqrt()
    }

    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage index of wavenumber `k`, if it is on the retained lattice.
    pub fn index(&self, k: i64) -> Option<usize> {
        if k.abs() > self.kmax() {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (self.wavenumber(idx / self.n), self.wavenumber(idx % self.n))
    }

    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let h = self.n / 2;
        idx / self.n == h || idx % self.n == h
    }

    /// |k| for every storage slot.
    pub fn modulus_table(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let (a, b) = self.wavevector(idx);
                ((a * a + b * b) as f64).sqrt()
            })
            .collect()
    }

    pub fn dealias_mask(&self) -> Vec<bool> {
        let kd = self.dealias_kmax();
        (0..self.len())
            .map(|idx| {
                let (a, b) = self.wavevector(idx);
                !self.is_nyquist(idx) && a.abs().max(b.abs()) <= kd
            })
            .collect()
    }

    pub fn point(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n as f64
    }
}

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Field buffers at n = 128 sit right at glibc's mmap threshold, so every
/// temporary would otherwise be a fresh mapping with its own page faults.
fn tune_allocator() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    {
        static ONCE: OnceLock<()> = OnceLock::new();
        ONCE.get_or_init(|| unsafe {
            libc::mallopt(libc::M_MMAP_THRESHOLD, 256 << 20);
            libc::mallopt(libc::M_TRIM_THRESHOLD, 512 << 20);
        });
    }
}

fn plans(n: usize) -> Arc<Plans> {
    tune_allocator();
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
        })
        .clone()
}

fn transpose(buf: &mut [C64], n: usize) {
    const B: usize = 16;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(n) {
                    buf.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

fn fft2(buf: &mut [C64], n: usize, inverse: bool) {
    let p = plans(n);
    let f = if inverse { &p.inv } else { &p.fwd };
    f.process(buf);
    transpose(buf, n);
    f.process(buf);
    transpose(buf, n);
}

/// Normalised forward transform of arbitrary real samples; keeps every slot.
pub(crate) fn forward_raw(n: usize, values: &[f64]) -> Vec<C64> {
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft2(&mut buf, n, false);
    let s = 1.0 / (n * n) as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Unnormalised inverse transform; the real part holds the samples.
pub(crate) fn inverse_raw(n: usize, coeffs: &[C64]) -> Vec<C64> {
    let mut buf = coeffs.to_vec();
    fft2(&mut buf, n, true);
    buf
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("{} samples for an n = {} grid", values.len(), grid.n())));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = (0..n * n).map(|idx| f(grid.point(idx / n), grid.point(idx % n))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Integral over the torus by the grid rule.
    pub fn integral(&self) -> f64 {
        let h = 2.0 * PI / self.grid.n() as f64;
        self.values.iter().sum::<f64>() * h * h
    }

    /// Grid-quadrature L^p norm over the torus; `p = inf` gives the sup.
    pub fn lebesgue_norm(&self, p: f64) -> Result<f64> {
        lebesgue_norm(self, p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, coeffs: vec![ZERO; grid.len()] }
    }

    /// Wraps raw coefficients, zeroing the mean and Nyquist slots and
    /// symmetrising so the field is real.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Grid(format!("{} coefficients for an n = {} grid", coeffs.len(), grid.n())));
        }
        let mut f = Self { grid, coeffs };
        f.enforce();
        Ok(f)
    }

    /// Wraps coefficients without touching them. Used by readers that
    /// validate separately.
    pub(crate) fn from_coeffs_unchecked(grid: TorusGrid, coeffs: Vec<C64>) -> Self {
        Self { grid, coeffs }
    }

    pub fn from_physical(p: &PhysicalField) -> Self {
        let coeffs = forward_raw(p.grid.n(), &p.values);
        let mut f = Self { grid: p.grid, coeffs };
        f.enforce();
        f
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_physical(&PhysicalField::from_fn(grid, f))
    }

    /// Builds a field mode by mode from `(k1, k2) -> c`; the result is
    /// symmetrised, so supplying one half plane is not enough.
    pub fn from_modes(grid: TorusGrid, f: impl Fn(i64, i64) -> C64) -> Self {
        let coeffs = (0..grid.len())
            .map(|idx| {
                let (a, b) = grid.wavevector(idx);
                f(a, b)
            })
            .collect();
        let mut out = Self { grid, coeffs };
        out.enforce();
        out
    }

    fn enforce(&mut self) {
        let n = self.grid.n();
        self.coeffs[0] = ZERO;
        let h = n / 2;
        for t in 0..n {
            self.coeffs[h * n + t] = ZERO;
            self.coeffs[t * n + h] = ZERO;
        }
        for i in 0..n {
            for j in 0..n {
                let a = i * n + j;
                let b = ((n - i) % n) * n + (n - j) % n;
                if a < b {
                    let avg = 0.5 * (self.coeffs[a] + self.coeffs[b].conj());
                    self.coeffs[a] = avg;
                    self.coeffs[b] = avg.conj();
                } else if a == b {
                    self.coeffs[a] = C64::new(self.coeffs[a].re, 0.0);
                }
            }
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> C64 {
        match (self.grid.index(k1), self.grid.index(k2)) {
            (Some(a), Some(b)) => self.coeffs[a * self.grid.n() + b],
            _ => ZERO,
        }
    }

    pub fn to_physical(&self) -> PhysicalField {
        let buf = inverse_raw(self.grid.n(), &self.coeffs);
        PhysicalField { grid: self.grid, values: buf.iter().map(|c| c.re).collect() }
    }

    /// Largest |c(k) - conj c(-k)| and |c(0)|, i.e. distance from a real,
    /// mean-zero field.
    pub fn reality_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut d = self.coeffs[0].norm();
        for i in 0..n {
            for j in 0..n {
                let b = ((n - i) % n) * n + (n - j) % n;
                d = d.max((self.coeffs[i * n + j] - self.coeffs[b].conj()).norm());
            }
        }
        d
    }

    pub fn map_modes(&self, f: impl Fn(i64, i64, C64) -> C64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let (a, b) = self.grid.wavevector(idx);
                f(a, b, c)
            })
            .collect();
        Self { grid: self.grid, coeffs }
    }

    /// Multiplies by a real radial symbol `m(|k|)`; `m` is never evaluated at 0.
    pub fn radial_multiplier(&self, m: impl Fn(f64) -> f64) -> Self {
        self.map_modes(|a, b, c| {
            if a == 0 && b == 0 {
                ZERO
            } else {
                c * m(((a * a + b * b) as f64).sqrt())
            }
        })
    }

    /// Multiplies by a precomputed real table indexed like the storage.
    pub fn apply_table(&self, table: &[f64]) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(table).map(|(c, m)| c * m).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.grid.n(), other.grid.n(), "grid mismatch");
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect(),
        }
    }

    /// `(1 - w) * self + w * other`.
    pub fn lerp(&self, other: &Self, w: f64) -> Self {
        self.scale(1.0 - w).axpy(w, other)
    }

    /// Real coefficient inner product `sum_k Re(conj(a_k) b_k)`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Homogeneous Sobolev norm on the coefficients.
    pub fn sobolev_norm(&self, sigma: f64) -> f64 {
        sobolev_norm(self, sigma)
    }

    /// Coefficient l2 norm, `(2 pi)^-1` times the L2 integral norm.
    pub fn l2proxy(&self) -> f64 {
        sobolev_norm(self, 0.0)
    }

    /// Index and wavevector of the first non-finite coefficient.
    pub fn first_non_finite(&self) -> Option<(i64, i64)> {
        self.coeffs
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
            .map(|idx| self.grid.wavevector(idx))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Packs two real fields into one inverse transform.
pub fn to_physical_pair(a: &SpectralField, b: &SpectralField) -> (PhysicalField, PhysicalField) {
    let grid = a.grid;
    let packed: Vec<C64> = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + C64::i() * y).collect();
    let buf = inverse_raw(grid.n(), &packed);
    (
        PhysicalField { grid, values: buf.iter().map(|c| c.re).collect() },
        PhysicalField { grid, values: buf.iter().map(|c| c.im).collect() },
    )
}

/// `Lambda^s`, the Fourier multiplier `|k|^s`.
pub fn fractional_laplacian(theta: &SpectralField, s: f64) -> SpectralField {
    if s == 0.0 {
        return theta.clone();
    }
    theta.radial_multiplier(|r| r.powf(s))
}

/// Riesz-transform velocity `u = (-R_2 theta, R_1 theta)`.
pub fn riesz_velocity(theta: &SpectralField) -> (SpectralField, SpectralField) {
    let u1 = theta.map_modes(|a, b, c| {
        if a == 0 && b == 0 {
            ZERO
        } else {
            C64::new(0.0, b as f64 / ((a * a + b * b) as f64).sqrt()) * c
        }
    });
    let u2 = theta.map_modes(|a, b, c| {
        if a == 0 && b == 0 {
            ZERO
        } else {
            C64::new(0.0, -(a as f64) / ((a * a + b * b) as f64).sqrt()) * c
        }
    });
    (u1, u2)
}

pub fn gradient(theta: &SpectralField) -> (SpectralField, SpectralField) {
    (
        theta.map_modes(|a, _, c| C64::new(0.0, a as f64) * c),
        theta.map_modes(|_, b, c| C64::new(0.0, b as f64) * c),
    )
}

/// Zeroes modes with `max(|k1|, |k2|)` above the dealiasing cut.
pub fn dealias(theta: &SpectralField) -> SpectralField {
    let kd = theta.grid.dealias_kmax();
    theta.map_modes(|a, b, c| if a.abs().max(b.abs()) > kd { ZERO } else { c })
}

struct AdvectionTables {
    k1: Vec<f64>,
    k2: Vec<f64>,
    inv_mod: Vec<f64>,
    keep: Vec<bool>,
    mirror: Vec<usize>,
}

fn advection_tables(grid: TorusGrid) -> Arc<AdvectionTables> {
    static CACHE: OnceLock<Mutex<HashMap<TorusGrid, Arc<AdvectionTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(grid)
        .or_insert_with(|| {
            let n = grid.n();
            let len = grid.len();
            let (mut k1, mut k2, mut inv_mod, mut mirror) =
                (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
            for idx in 0..len {
                let (a, b) = grid.wavevector(idx);
                k1.push(a as f64);
                k2.push(b as f64);
                let r = ((a * a + b * b) as f64).sqrt();
                inv_mod.push(if r > 0.0 { 1.0 / r } else { 0.0 });
                mirror.push(((n - idx / n) % n) * n + (n - idx % n) % n);
            }
            let mut keep = grid.dealias_mask();
            keep[0] = false;
            Arc::new(AdvectionTables { k1, k2, inv_mod, keep, mirror })
        })
        .clone()
}

/// Dealiased `u . grad theta` with `u` the Riesz velocity of `theta`.
///
/// The input is filtered as well as the output, which makes the discrete
/// form exactly skew: `<advection_term(theta), theta> = 0`.
pub fn advection_term(theta: &SpectralField) -> SpectralField {
    let grid = theta.grid;
    let t = advection_tables(grid);
    let len = grid.len();
    let i = C64::i();
    // u1 + i u2 and d1 theta + i d2 theta share one transform each
    let mut vel = vec![ZERO; len];
    let mut grad = vec![ZERO; len];
    for idx in 0..len {
        if !t.keep[idx] {
            continue;
        }
        let c = theta.coeffs[idx];
        let u1 = i * c * (t.k2[idx] * t.inv_mod[idx]);
        let u2 = -i * c * (t.k1[idx] * t.inv_mod[idx]);
        vel[idx] = u1 + i * u2;
        grad[idx] = i * c * t.k1[idx] + i * (i * c * t.k2[idx]);
    }
    let n = grid.n();
    fft2(&mut vel, n, true);
    fft2(&mut grad, n, true);
    let mut prod: Vec<C64> =
        vel.iter().zip(&grad).map(|(u, g)| C64::new(u.re * g.re + u.im * g.im, 0.0)).collect();
    fft2(&mut prod, n, false);
    let s = 1.0 / len as f64;
    let coeffs = (0..len)
        .map(|idx| if t.keep[idx] { 0.5 * s * (prod[idx] + prod[t.mirror[idx]].conj()) } else { ZERO })
        .collect();
    SpectralField { grid, coeffs }
}

/// `(sum_{k != 0} |k|^{2 sigma} |c(k)|^2)^{1/2}`.
pub fn sobolev_norm(theta: &SpectralField, sigma: f64) -> f64 {
    let g = theta.grid;
    let mut s = 0.0;
    for (idx, c) in theta.coeffs.iter().enumerate() {
        let (a, b) = g.wavevector(idx);
        let k2 = (a * a + b * b) as f64;
        if k2 > 0.0 {
            let w = if sigma == 0.0 { 1.0 } else { k2.powf(sigma) };
            s += w * c.norm_sqr();
        }
    }
    s.sqrt()
}

pub fn lebesgue_norm(f: &PhysicalField, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(f.sup_abs());
    }
    if !(p >= 1.0) {
        return Err(crate::error::param("p", format!("{p} is not in [1, inf]")));
    }
    let h = 2.0 * PI / f.grid.n() as f64;
    // scaled by the sup so large fields do not overflow
    let top = f.sup_abs();
    if top == 0.0 || !top.is_finite() {
        return Ok(top);
    }
    let s: f64 = if p == 2.0 {
        f.values.iter().map(|v| (v / top).powi(2)).sum()
    } else {
        f.values.iter().map(|v| (v.abs() / top).powf(p)).sum()
    };
    Ok(top * (s * h * h).powf(1.0 / p))
}

/// Keeps modes with `|k| <= cutoff`.
pub fn project_modes(theta: &SpectralField, cutoff: f64) -> SpectralField {
    theta.radial_multiplier(|r| if r <= cutoff { 1.0 } else { 0.0 })
}

/// Re-expresses a field on a finer grid with the same coefficients.
pub fn zero_pad(theta: &SpectralField, fine: TorusGrid) -> Result<SpectralField> {
    if fine.n() < theta.grid.n() {
        return Err(Error::Grid(format!("cannot pad n = {} onto n = {}", theta.grid.n(), fine.n())));
    }
    let mut out = SpectralField::zeros(fine);
    let n = fine.n();
    for (idx, c) in theta.coeffs.iter().enumerate() {
        if *c == ZERO {
            continue;
        }
        let (a, b) = theta.grid.wavevector(idx);
        if let (Some(i), Some(j)) = (fine.index(a), fine.index(b)) {
            out.coeffs[i * n + j] = *c;
        }
    }
    Ok(out)
}

/// Drops modes a coarser grid cannot hold.
pub fn restrict(theta: &SpectralField, coarse: TorusGrid) -> SpectralField {
    let mut out = SpectralField::zeros(coarse);
    let n = coarse.n();
    for (idx, c) in theta.coeffs.iter().enumerate() {
        let (a, b) = theta.grid.wavevector(idx);
        if let (Some(i), Some(j)) = (coarse.index(a), coarse.index(b)) {
            out.coeffs[i * n + j] = *c;
        }
    }
    out.enforce();
    out
}

/// Gaussian field supported on `0 < |k| <= band`, scaled to unit
/// homogeneous `H^sigma` norm times `norm`.
pub fn random_field<R: Rng + ?Sized>(grid: TorusGrid, rng: &mut R, band: f64, sigma: f64, norm: f64) -> SpectralField {
    let mut coeffs = vec![ZERO; grid.len()];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let (a, b) = grid.wavevector(idx);
        let r = ((a * a + b * b) as f64).sqrt();
        // draw unconditionally so the stream layout does not depend on band
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        if r > 0.0 && r <= band {
            *c = C64::new(re, im);
        }
    }
    let mut f = SpectralField { grid, coeffs };
    f.enforce();
    let s = f.sobolev_norm(sigma);
    if s > 0.0 {
        f.scale(norm / s)
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cos_x1_has_two_half_coefficients() {
        let g = TorusGrid::new(16).unwrap();
        let f = SpectralField::from_fn(g, |x, _| x.cos());
        assert_relative_eq!(f.coeff(1, 0).re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(f.coeff(-1, 0).re, 0.5, epsilon = 1e-14);
        assert!(f.coeff(0, 1).norm() < 1e-14);
    }

    #[test]
    fn nyquist_and_mean_are_zeroed() {
        let g = TorusGrid::new(8).unwrap();
        let f = SpectralField::from_fn(g, |x, y| 3.0 + (4.0 * x).cos() + y.sin());
        assert_eq!(f.coeff(0, 0), ZERO);
        assert_eq!(f.coeffs()[4 * 8], ZERO);
        assert_relative_eq!(f.coeff(0, 1).im, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(TorusGrid::new(7).is_err());
        assert!(TorusGrid::new(4).is_err());
        assert!(TorusGrid::with_dealias(16, 4, 3).is_err());
    }

    #[test]
    fn dealias_cut_for_64_is_21() {
        assert_eq!(TorusGrid::new(64).unwrap().dealias_kmax(), 21);
        assert_eq!(TorusGrid::new(128).unwrap().dealias_kmax(), 42);
    }

    #[test]
    fn lp_norm_of_cos() {
        let g = TorusGrid::new(32).unwrap();
        let f = PhysicalField::from_fn(g, |x, _| x.cos());
        let want = (1.5 * PI * PI).powf(0.25);
        assert_relative_eq!(f.lebesgue_norm(4.0).unwrap(), want, max_relative = 1e-13);
        assert_relative_eq!(f.lebesgue_norm(f64::INFINITY).unwrap(), 1.0, epsilon = 1e-15);
        assert!(f.lebesgue_norm(0.5).is_err());
    }

    #[test]
    fn zero_pad_preserves_values() {
        let g = TorusGrid::new(16).unwrap();
        let f = SpectralField::from_fn(g, |x, y| (x + 2.0 * y).sin());
        let fine = zero_pad(&f, TorusGrid::new(32).unwrap()).unwrap();
        let p = fine.to_physical();
        assert_relative_eq!(p.values()[2 * 32 + 6], (PI * 2.0 / 32.0 * (2.0 + 12.0)).sin(), epsilon = 1e-13);
        assert!(restrict(&fine, g).max_abs_diff(&f) < 1e-15);
    }
}
