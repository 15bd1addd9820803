//! Size constants for the nudged equation and the level-set argument.
//! Every absolute constant `C` is a parameter; 1 is the usual choice.

/// `2/p`, reading `p = inf` as 0.
pub fn two_over(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        2.0 / p
    }
}

/// `F_{L^p} = ||f||_{L^p} / kappa`.
pub fn f_lp(f_lp_norm: f64, kappa: f64) -> f64 {
    f_lp_norm / kappa
}

/// `F_{H^{-gamma/2}} = ||f||_{H^{-gamma/2}} / kappa`.
pub fn f_hminus(f_norm: f64, kappa: f64) -> f64 {
    f_norm / kappa
}

/// Absorbing ball for the free equation in `L^p`:
/// `(||theta_0|| - F/C) e^{-C kappa t} + F/C`.
pub fn lp_decay_bound(theta0: f64, f: f64, c: f64, kappa: f64, t: f64) -> f64 {
    (theta0 - f / c) * (-c * kappa * t).exp() + f / c
}

/// `(||theta_0||^2 - F^2) e^{-kappa t} + F^2` in `L^2`.
pub fn l2_decay_bound(theta0: f64, f: f64, kappa: f64, t: f64) -> f64 {
    (theta0 * theta0 - f * f) * (-kappa * t).exp() + f * f
}

/// `G_{L^2}^2 = C (kappa/mu F_{H^{-gamma/2}}^2 + Theta_{H^sigma}^2)`.
pub fn g_l2_sq(c: f64, kappa: f64, mu: f64, f_hminus: f64, theta_hsigma: f64) -> f64 {
    c * (kappa / mu * f_hminus.powi(2) + theta_hsigma.powi(2))
}

/// `G_{L^p} = (kappa/mu) F_{L^p} + Theta_{H^sigma}`.
pub fn g_lp(kappa: f64, mu: f64, f_lp: f64, theta_hsigma: f64) -> f64 {
    kappa / mu * f_lp + theta_hsigma
}

/// `G~_{L^p}^p = C ((kappa/mu)^p (F^p + (G_{L^2}/p)^p) + Theta^p + 2^{m(p-2)} G_{L^2}^p)`,
/// returned as the `p`-th root.
#[allow(clippy::too_many_arguments)]
pub fn g_lp_tilde(c: f64, kappa: f64, mu: f64, p: f64, f_lp: f64, g_l2: f64, theta_lp: f64, m: i32) -> f64 {
    let r = kappa / mu;
    (c * (r.powf(p) * (f_lp.powf(p) + (g_l2 / p).powf(p)) + theta_lp.powf(p) + 2f64.powf(m as f64 * (p - 2.0)) * g_l2.powf(p)))
        .powf(1.0 / p)
}

/// `Xi_{r, alpha} = C (sup ||w||_{L^r} / kappa)^{2 alpha / (gamma - 1 - 2/r)}`.
pub fn xi(c: f64, sup_lr: f64, kappa: f64, r: f64, alpha: f64, gamma: f64) -> f64 {
    c * (sup_lr / kappa).powf(2.0 * alpha / (gamma - 1.0 - two_over(r)))
}

/// `M_inf = C (mu/kappa)^{1/b} [((kappa/mu) F + rho0 + 1)(U0^{gamma/2} + U0^{gamma/2 - 1/p})]^{1/b}`
/// with `b = gamma - 2/p`.
#[allow(clippy::too_many_arguments)]
pub fn m_infinity(c: f64, kappa: f64, mu: f64, gamma: f64, p: f64, f_lp: f64, rho0: f64, u0: f64) -> f64 {
    let b = gamma - two_over(p);
    let u = u0.powf(gamma / 2.0) + u0.powf(gamma / 2.0 - two_over(p) / 2.0);
    c * (mu / kappa).powf(1.0 / b) * ((kappa / mu * f_lp + rho0 + 1.0) * u).powf(1.0 / b)
}

/// The sup bound after a time `delta_inf`:
/// `C (max{1/(delta kappa), (mu/kappa)((kappa/mu) F + rho0 + 1)} (U0^{gamma/2} + U0^{gamma/2 - 1/p}))^{1/b}`.
#[allow(clippy::too_many_arguments)]
pub fn dg_bound(c: f64, kappa: f64, mu: f64, gamma: f64, p: f64, f_lp: f64, rho0: f64, u0: f64, delta_inf: f64) -> f64 {
    let b = gamma - two_over(p);
    let u = u0.powf(gamma / 2.0) + u0.powf(gamma / 2.0 - two_over(p) / 2.0);
    let lead = (1.0 / (delta_inf * kappa)).max(mu / kappa * (kappa / mu * f_lp + rho0 + 1.0));
    c * (lead * u).powf(1.0 / b)
}

/// `G_{sigma,inf}^2 = C (F_{H^{sigma-gamma/2}}^2 + Theta_sigma^2 + (M_inf/kappa)^{2 sigma/(gamma-1-2/p)} G_{L^2}^2)`.
#[allow(clippy::too_many_arguments)]
pub fn g_sigma_inf_sq(c: f64, f_h: f64, theta_sigma: f64, m_inf: f64, kappa: f64, sigma: f64, gamma: f64, p: f64, g_l2: f64) -> f64 {
    c * (f_h.powi(2) + theta_sigma.powi(2) + (m_inf / kappa).powf(2.0 * sigma / (gamma - 1.0 - two_over(p))) * g_l2.powi(2))
}

/// `G_{H^sigma}^2 = C (F^2 + Theta^2 + (G_{L^p}/kappa)^{2 sigma/(gamma-1-2/p)} G_{L^2}^2)`.
#[allow(clippy::too_many_arguments)]
pub fn g_hsigma_sq(c: f64, f_h: f64, theta_sigma: f64, g_lp: f64, kappa: f64, sigma: f64, gamma: f64, p: f64, g_l2: f64) -> f64 {
    c * (f_h.powi(2) + theta_sigma.powi(2) + (g_lp / kappa).powf(2.0 * sigma / (gamma - 1.0 - two_over(p))) * g_l2.powi(2))
}

/// `G~_{H^sigma}^2 = C (kappa/mu F_{H^{sigma-gamma/2}}^2 + Theta^2 + Xi_{p,sigma} G_{L^2}^2)`.
pub fn g_hsigma_tilde_sq(c: f64, kappa: f64, mu: f64, f_h: f64, theta_sigma: f64, xi_p_sigma: f64, g_l2: f64) -> f64 {
    c * (kappa / mu * f_h.powi(2) + theta_sigma.powi(2) + xi_p_sigma * g_l2.powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_bounds_start_at_data_and_tend_to_forcing() {
        assert_eq!(lp_decay_bound(3.0, 2.0, 1.0, 1.0, 0.0), 3.0);
        assert!((lp_decay_bound(3.0, 2.0, 1.0, 1.0, 60.0) - 2.0).abs() < 1e-15);
        assert_eq!(l2_decay_bound(2.0, 1.0, 1.0, 0.0), 4.0);
    }

    #[test]
    fn m_infinity_scales_with_mu() {
        let a = m_infinity(1.0, 1.0, 64.0, 1.5, 8.0, 0.0, 0.0, 1.0);
        // (64)^{1/1.25} * (1 * 2)^{1/1.25}
        assert!((a - 128f64.powf(0.8)).abs() < 1e-12);
        assert_eq!(m_infinity(1.0, 1.0, 64.0, 1.5, 8.0, 1.0, 1.0, 0.0), 0.0);
    }
}
