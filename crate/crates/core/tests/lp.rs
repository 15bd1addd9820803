use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use sqglab_core::lp::{standard_psi0, BumpProfile, LpBlocks};
use sqglab_core::spectral::random_field;
use sqglab_core::{rng, SpectralField, TorusGrid};

fn cos_x1(g: TorusGrid) -> SpectralField {
    SpectralField::from_modes(g, |a, b| if a.abs() == 1 && b == 0 { Complex64::new(0.5, 0.0) } else { Complex64::new(0.0, 0.0) })
}

fn field(g: TorusGrid, seed: u64, band: f64) -> SpectralField {
    random_field(g, &mut rng::stream(seed, "lp-tests"), band, 0.0, 1.0)
}

#[test]
fn unit_and_zero_wavenumbers() {
    let b = LpBlocks::new(TorusGrid::new(32).unwrap());
    for j in -1..=b.j_max() {
        assert_eq!(b.block_symbol(j, 1.0), if j == 1 { 1.0 } else { 0.0 });
        assert_eq!(b.block_symbol(j, 0.0), if j == -1 { 1.0 } else { 0.0 });
    }
}

#[test]
fn blocks_of_cos_x1() {
    let g = TorusGrid::new(32).unwrap();
    let b = LpBlocks::new(g);
    let c = cos_x1(g);
    assert!(b.block(&c, 1).unwrap().max_abs_diff(&c) < 1e-15);
    assert_eq!(b.block(&c, 3).unwrap().l2proxy(), 0.0);
    assert!(b.lowpass(&c, 1).max_abs_diff(&c) < 1e-15);
    assert_eq!(b.lowpass(&c, -1).l2proxy(), 0.0);
    assert!(b.tilde_block(&c, 1).unwrap().max_abs_diff(&c) < 1e-15);
    assert_eq!(b.tilde_block(&c, 5).unwrap().l2proxy(), 0.0);
    assert!(b.block(&c, b.j_max() + 1).is_err());
    assert!(b.block(&c, -2).is_err());
}

#[test]
fn square_function_of_a_single_block() {
    let g = TorusGrid::new(32).unwrap();
    let b = LpBlocks::new(g);
    let c = cos_x1(g);
    let s = b.square_function(&c, false).unwrap();
    for (i, v) in s.values().iter().enumerate() {
        let x = g.point(i / g.n());
        assert!((v - x.cos().abs()).abs() < 1e-14);
    }
    assert_eq!(b.square_function(&SpectralField::zeros(g), true).unwrap().sup_abs(), 0.0);
}

#[test]
fn partition_and_support_on_every_lattice_point() {
    for n in [32, 64, 128] {
        let g = TorusGrid::new(n).unwrap();
        let b = LpBlocks::new(g);
        for &r in &g.modulus_table() {
            let s: f64 = (-1..=b.j_max()).map(|j| b.block_symbol(j, r)).sum();
            assert!((s - 1.0).abs() < 1e-12);
            for j in 0..=b.j_max() {
                if r < 2f64.powi(j - 2) || r > 2f64.powi(j) {
                    assert_eq!(b.block_symbol(j, r), 0.0, "n {n} j {j} r {r}");
                }
            }
            for m in -1..=b.j_max() {
                let s = b.lowpass_symbol(m, r);
                assert!((0.0..=1.0).contains(&s));
                if r <= 2f64.powi(m - 2) {
                    assert_eq!(s, 1.0);
                }
                if r > 2f64.powi(m) {
                    assert_eq!(s, 0.0);
                }
            }
        }
    }
}

#[test]
fn highpass_gain_bound_over_the_lattice() {
    // sup_k (1 - s_m(k)) |k|^{-gamma} 2^{m gamma} bounds ||T_m f||_{-gamma/2} / (2^{-m gamma/2} ||f||_{gamma/2}) squared
    let g = TorusGrid::new(128).unwrap();
    let b = LpBlocks::new(g);
    let gamma = 1.5;
    for m in 0..b.j_max() {
        let worst = g
            .modulus_table()
            .iter()
            .filter(|&&r| r > 0.0)
            .map(|&r| (1.0 - b.lowpass_symbol(m, r)) * r.powf(-gamma) * 2f64.powf(m as f64 * gamma))
            .fold(0.0f64, f64::max)
            .sqrt();
        assert!(worst <= 4f64.powf(gamma / 2.0), "m {m}: {worst}");
        for seed in 0..5 {
            let f = field(g, seed, 60.0);
            let lhs = b.highpass(&f, m).sobolev_norm(-gamma / 2.0);
            let rhs = 2f64.powf(-(m as f64) * gamma / 2.0) * f.sobolev_norm(gamma / 2.0);
            assert!(lhs <= worst * rhs * (1.0 + 1e-12));
        }
    }
}

#[test]
fn bernstein_contraction_and_single_modes() {
    let g = TorusGrid::new(64).unwrap();
    let b = LpBlocks::new(g);
    let ens: Vec<SpectralField> = (0..20).map(|s| field(g, s, 45.0)).collect();
    // block 0 is empty on mean-zero fields
    for j in 1..=b.j_max() {
        let r = b.bernstein_check(&ens, j, 0.0, 2.0, 2.0).unwrap();
        assert!(r.upper <= 1.0 + 1e-10);
    }
    // single mode at |k| = 5 lives in blocks 3 and 4
    let single = SpectralField::from_fn(g, |x, y| (3.0 * x + 4.0 * y).cos());
    let (beta, p, q) = (0.75, 2.0, 4.0);
    for j in [3, 4] {
        let r = b.bernstein_check(std::slice::from_ref(&single), j, beta, p, q).unwrap();
        // ||cos||_4 / ||cos||_2 on the torus, from the means 3/8 and 1/2 of cos^4 and cos^2
        let shape = (4.0 * PI * PI).powf(0.25 - 0.5) * (3.0f64 / 8.0).powf(0.25) / 0.5f64.sqrt();
        let pure = 5f64.powf(beta) * shape / 2f64.powf(j as f64 * (beta + 2.0 * (1.0 / p - 1.0 / q)));
        assert!((r.upper - pure).abs() < 1e-12 * pure, "{} vs {pure}", r.upper);
    }
    assert!(b.bernstein_check(&[], 2, 0.0, 2.0, 2.0).is_err());
}

#[test]
fn bernstein_constants_stable_across_seeds() {
    let g = TorusGrid::new(64).unwrap();
    let b = LpBlocks::new(g);
    let run = |base: u64| -> f64 {
        let ens: Vec<SpectralField> = (0..100).map(|s| field(g, base + s, 30.0)).collect();
        b.bernstein_check(&ens, 4, 0.75, 2.0, 2.0).unwrap().upper
    };
    let (a, c) = (run(0), run(1000));
    assert!((a - c).abs() <= 0.2 * a.max(c));
}

#[test]
fn custom_profiles() {
    assert!(BumpProfile::custom(standard_psi0).is_ok());
    assert!(BumpProfile::custom(|r| 1.0 - r).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blocks_reassemble(seed in any::<u64>()) {
        let g = TorusGrid::new(64).unwrap();
        let b = LpBlocks::new(g);
        let f = field(g, seed, 45.0);
        let mut sum = SpectralField::zeros(g);
        for j in -1..=b.j_max() {
            sum = sum.add(&b.block(&f, j).unwrap());
        }
        prop_assert!(sum.max_abs_diff(&f) < 1e-12);
        for m in -1..=b.j_max() {
            prop_assert!(b.lowpass(&f, m).add(&b.highpass(&f, m)).max_abs_diff(&f) < 1e-15);
        }
    }

    #[test]
    fn tilde_is_identity_on_its_block(seed in any::<u64>(), j in 0i32..7) {
        let g = TorusGrid::new(64).unwrap();
        let b = LpBlocks::new(g);
        let d = b.block(&field(g, seed, 45.0), j).unwrap();
        prop_assert!(b.tilde_block(&d, j).unwrap().max_abs_diff(&d) < 1e-15);
    }

    #[test]
    fn sobolev_besov_equivalence(seed in any::<u64>(), beta in -1.5f64..1.5) {
        let g = TorusGrid::new(64).unwrap();
        let b = LpBlocks::new(g);
        let ratio = b.besov_ratio(&field(g, seed, 45.0), beta).unwrap();
        let c = 4f64.powf(beta.abs()) * 5.0;
        prop_assert!(ratio <= c && ratio >= 1.0 / c);
    }

    #[test]
    fn square_function_l2_ratio_bounded(seed in any::<u64>()) {
        let g = TorusGrid::new(32).unwrap();
        let b = LpBlocks::new(g);
        let f = field(g, seed, 22.0);
        let s = b.square_function(&f, false).unwrap().lebesgue_norm(2.0).unwrap();
        let l2 = f.to_physical().lebesgue_norm(2.0).unwrap();
        // sum_j phi_j^2 lies in [1/2, 1]
        prop_assert!(s <= l2 * (1.0 + 1e-12) && s >= l2 / 2f64.sqrt() * (1.0 - 1e-12));
    }
}
