use proptest::prelude::*;
use sqglab_core::degiorgi::*;
use sqglab_core::dynamics::Trajectory;
use sqglab_core::spectral::{random_field, zero_pad};
use sqglab_core::{bounds, rng, PhysicalField, SpectralField, TorusGrid};

fn field(n: usize, seed: u64, band: f64, norm: f64) -> SpectralField {
    random_field(TorusGrid::new(n).unwrap(), &mut rng::stream(seed, "degiorgi-tests"), band, 0.0, norm)
}

#[test]
fn truncation_examples() {
    let g = TorusGrid::new(8).unwrap();
    let vals: Vec<f64> = (0..64).map(|i| (i as f64 - 32.0) / 4.0).collect();
    let f = PhysicalField::new(g, vals.clone()).unwrap();
    let t = truncate(&f, 2.0);
    let c = clip(&f, 2.0);
    for (i, x) in vals.iter().enumerate() {
        assert_eq!(t.values()[i], (x - 2.0).max(0.0));
        assert_eq!(c.values()[i], x.clamp(-2.0, 2.0));
    }
    assert_eq!(excess(3.0, 1.0), 2.0);
    assert_eq!(excess(-3.0, 1.0), 0.0);
}

#[test]
fn decomposition_of_constants() {
    let g = TorusGrid::new(8).unwrap();
    let three = PhysicalField::new(g, vec![3.0; 64]).unwrap();
    let d = lambda_decompose(&three, 1.0).unwrap();
    assert!(d.clipped.values().iter().all(|&v| v == 1.0));
    assert!(d.plus.values().iter().all(|&v| v == 2.0));
    assert!(d.minus.values().iter().all(|&v| v == 0.0));
    let neg = PhysicalField::new(g, vec![-0.5; 64]).unwrap();
    let d = lambda_decompose(&neg, 1.0).unwrap();
    assert!(d.clipped.values().iter().all(|&v| v == -0.5));
    assert!(d.plus.values().iter().chain(d.minus.values()).all(|&v| v == 0.0));
}

#[test]
fn phi_energy_limits() {
    let w = field(32, 1, 8.0, 1.0);
    let fine = zero_pad(&w, TorusGrid::new(64).unwrap()).unwrap().to_physical();
    assert_eq!(phi_vector_energy(&w, fine.sup_abs(), 1.5), (0.0, 0.0));
    let (l2, h) = phi_vector_energy(&w, 0.0, 1.5);
    // Phi at lambda = 0 is (w_+, w_-), whose pointwise squares sum to w^2
    assert!((l2 - w.l2proxy().powi(2)).abs() < 1e-12);
    assert!(h >= 0.0);
}

#[test]
fn phi_energy_converges_under_refinement() {
    let w = field(32, 2, 6.0, 1.0);
    let lam = 0.3 * w.to_physical().sup_abs();
    let (a, ha) = phi_vector_energy(&zero_pad(&w, TorusGrid::new(64).unwrap()).unwrap(), lam, 1.5);
    let (b, hb) = phi_vector_energy(&zero_pad(&w, TorusGrid::new(128).unwrap()).unwrap(), lam, 1.5);
    assert!((a - b).abs() < 0.01 * b, "{a} {b}");
    assert!((ha - hb).abs() < 0.05 * hb, "{ha} {hb}");
}

fn decaying(seed: u64) -> Trajectory {
    let w = field(16, seed, 5.0, 1.0);
    Trajectory::new(0.0, 0.05, (0..21).map(|i| w.scale((-(i as f64) * 0.1).exp())).collect()).unwrap()
}

#[test]
fn level_energies_vanish_above_the_sup_and_decrease() {
    let w = decaying(3);
    let sup = zero_pad(&w.samples[0], TorusGrid::new(32).unwrap()).unwrap().to_physical().sup_abs();
    let cfg = LevelSetConfig { m: 2.0 * sup, n_max: 6, delta_inf: 0.5, s0: 0.2 };
    let u = level_energies(&w, &cfg, 1.5, 1.0).unwrap();
    assert!(u[0] > 0.0);
    assert!(u[1..].iter().all(|&x| x == 0.0));
    let cfg = LevelSetConfig { m: 0.5 * sup, ..cfg };
    let u = level_energies(&w, &cfg, 1.5, 1.0).unwrap();
    assert!(u.windows(2).all(|p| p[1] <= p[0]), "{u:?}");
    assert!(level_energies(&w, &LevelSetConfig { s0: 0.8, ..cfg }, 1.5, 1.0).is_err());
    assert!(level_energies(&w, &LevelSetConfig { m: 0.0, ..cfg }, 1.5, 1.0).is_err());
}

#[test]
fn levelset_residual_is_zero_above_the_sup() {
    let w = decaying(4);
    let v = w.clone();
    let g = w.grid();
    let zero = move |_: f64| SpectralField::zeros(g);
    let sup = zero_pad(&w.samples[0], TorusGrid::new(32).unwrap()).unwrap().to_physical().sup_abs();
    let r = levelset_inequality_check(&w, &v, &zero, 1.0, 1.5, 8.0, 3, sup * 1.01, &[(0, 5), (3, 20)]).unwrap();
    assert!(r.residuals.iter().all(|&x| x == 0.0));
    assert!(r.resolution_ok);
    assert!(!levelset_inequality_check(&w, &v, &zero, 1.0, 1.5, 64.0, 3, sup, &[(0, 5)]).unwrap().resolution_ok);
    assert!(levelset_inequality_check(&w, &v, &zero, 1.0, 1.5, 8.0, 3, sup, &[(5, 5)]).is_err());
    assert!(levelset_inequality_check(&w, &v, &zero, 1.0, 1.5, 8.0, 3, sup, &[(0, 21)]).is_err());
    assert!(levelset_inequality_check(&w, &v, &zero, 1.0, 1.5, 8.0, 3, 0.0, &[(0, 5)]).is_err());
}

#[test]
fn iteration_lemma_extremes() {
    let ip = IterationParams { a: 1.0, b: 1.0, c: 1.0, d: vec![2.0, 2.5], v0: 1.0, v1: 2.0, c0: 1.0 };
    let huge = iteration_lemma_check(&ip, 1e12, 10).unwrap();
    assert_eq!(huge.verdict, IterationVerdict::Holds);
    assert!(huge.hypothesis_met);
    let tiny = iteration_lemma_check(&ip, 1e-3, 10).unwrap();
    assert_eq!(tiny.verdict, IterationVerdict::HypothesisNotMet);
    assert!(!tiny.v1_consistent);
    assert!(iteration_lemma_check(&IterationParams { d: vec![1.4], ..ip.clone() }, 1.0, 4).is_err());
    assert!(iteration_lemma_check(&IterationParams { d: vec![], ..ip.clone() }, 1.0, 4).is_err());
    assert!(iteration_lemma_check(&ip, 0.0, 4).is_err());
}

#[test]
fn linfty_estimate_is_linear_in_the_constant() {
    let x = LinftyInputs { kappa: 1.0, mu: 64.0, gamma: 1.5, p: 8.0, f_lp: 0.5, rho0: 1.0, u0: 0.1, delta_inf: 1.0 };
    let unit = bounds::dg_bound(1.0, 1.0, 64.0, 1.5, 8.0, 0.5, 1.0, 0.1, 1.0);
    let e = linfty_bound_estimate(&x, 0.0, 3.0);
    assert!((e.estimate - 3.0 * unit).abs() < 1e-12 * unit);
    assert_eq!(e.calibration, 0.0);
    assert_eq!(e.margin, e.estimate);
    let e = linfty_bound_estimate(&x, unit / 2.0, 1.0);
    assert!((e.calibration - 0.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decomposition_recombines(seed in any::<u64>(), frac in 0.5f64..1.5) {
        let f = field(16, seed, 6.0, 2.0).to_physical();
        let lam = frac * f.sup_abs() * 0.5 + 1e-3;
        let d = lambda_decompose(&f, lam).unwrap();
        for i in 0..f.values().len() {
            let back = d.clipped.values()[i] + d.plus.values()[i] - d.minus.values()[i];
            prop_assert!((back - f.values()[i]).abs() <= 1e-15 * f.values()[i].abs());
            prop_assert!(d.clipped.values()[i].abs() <= lam);
            prop_assert!(d.plus.values()[i] * d.minus.values()[i] == 0.0);
            // exact when the level is at least half the sup
            if frac >= 1.0 {
                prop_assert_eq!(back, f.values()[i]);
            }
        }
    }

    #[test]
    fn truncation_is_monotone_and_dominates_the_indicator(x in -5.0f64..5.0, big_m in 0.1f64..10.0, n in 1i32..12) {
        let lam = |k: i32| big_m * (1.0 - 2f64.powi(-k));
        prop_assert!(excess(x, lam(n)) <= excess(x, lam(n - 1)));
        let ind = if x > lam(n) { 1.0 } else { 0.0 };
        prop_assert!(ind <= 2f64.powi(n) / big_m * excess(x, lam(n - 1)) * (1.0 + 1e-12));
    }

    #[test]
    fn alpha_solves_its_defining_relation(p in 1.0f64..4.0, q in 1.0f64..4.0, gamma in 1.05f64..1.95) {
        if let Ok(a) = interpolation_exponent(p, q, gamma) {
            let lhs = 1.0 / (p + q);
            let rhs = (1.0 - a) / 2.0 + a * (2.0 - gamma) / 4.0;
            prop_assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn lemma_never_violated_above_threshold(
        a in 0.2f64..2.0, b in 0.5f64..2.0, c in 0.5f64..2.0, d in 1.6f64..3.0, v0 in 0.1f64..10.0, over in 1.0f64..100.0,
    ) {
        let mut ip = IterationParams { a, b, c, d: vec![d], v0, v1: 0.0, c0: 1.0 };
        ip.v1 = c * 2f64.powf(a) * v0.powf(d);
        // v1 uses M = 1; its threshold is then an upper bound for any larger M
        let thr = iteration_lemma_check(&ip, 1.0, 0).unwrap().threshold;
        let r = iteration_lemma_check(&ip, thr.max(1.0) * over, 12).unwrap();
        prop_assert!(r.hypothesis_met);
        prop_assert_ne!(r.verdict, IterationVerdict::Violated);
    }

    #[test]
    fn fractional_lower_bound_holds(seed in any::<u64>(), p in prop_oneof![Just(2u32), Just(4u32)], gamma in 1.1f64..1.9) {
        let g = field(16, seed, 4.0, 1.0);
        let (lhs, rhs) = fractional_lower_bound(&g, gamma, p, TorusGrid::new(64).unwrap()).unwrap();
        prop_assert!(lhs >= rhs * (1.0 - 1e-9), "{} < {}", lhs, rhs);
    }

    #[test]
    fn positivity_pair_holds(seed in any::<u64>(), frac in 0.0f64..0.9) {
        let g = field(16, seed, 4.0, 1.0);
        let lam = frac * g.to_physical().sup_abs();
        let (lhs, rhs) = positivity_pair(&g, lam, 1.5, TorusGrid::new(128).unwrap()).unwrap();
        prop_assert!(lhs >= rhs * (1.0 - 1e-3) - 1e-12, "{} < {}", lhs, rhs);
    }
}
