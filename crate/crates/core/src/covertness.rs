//! KL-divergence budget: per-use divergence between the two observation
//! laws, its expectation over the Erlang channel gain, and the Pinsker bound.

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::quadrature::{integrate, Tolerance};
use crate::specfun::{exp_scaled_e1, ln_gamma_unchecked, Probability};

/// D(P0 ‖ P1) for one channel use: ln(1 + x) − x/(1 + x), x = ‖h‖²·P_a.
pub fn kl_per_use(p_a: f64, gain_aw: f64) -> f64 {
    kl_of_snr(p_a * gain_aw)
}

fn kl_of_snr(x: f64) -> f64 {
    if x < 1e-2 {
        // Σ_{k≥2} (−1)^k (k − 1)/k · x^k, free of the cancellation below.
        let mut sum = 0.0;
        let mut xk = -x;
        for k in 2..40 {
            xk *= -x;
            let term = xk * (k - 1) as f64 / k as f64;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x.ln_1p() - x / (1.0 + x)
    }
}

/// Pinsker lower bound on P_FA + P_MD after `L` uses: 1 − √(L·D/2).
///
/// Negative values mean the bound is vacuous and are returned unclamped.
pub fn pinsker_lower_bound(l: u64, kl_per_use: f64) -> f64 {
    1.0 - (l as f64 * kl_per_use / 2.0).sqrt()
}

/// Upper end of the gain integral: beyond it the Erlang tail mass is < 1e-14.
pub fn gain_integration_limit(m: u32, lambda: f64) -> f64 {
    let mf = m as f64;
    (mf + 40.0 * mf.sqrt()) / lambda
}

fn quadrature_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

/// g(P_a) = E[kl_per_use(P_a, ‖h‖²)] with ‖h‖² ~ Erlang(M, λ), by adaptive
/// Gauss–Kronrod quadrature of the density-weighted divergence.
pub fn expected_kl(p_a: f64, m: u32, lambda: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a.is_finite()) || m < 1 || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(
            "expected_kl",
            format!("need P_a > 0, M >= 1, lambda > 0 (P_a = {p_a}, M = {m}, lambda = {lambda})"),
        ));
    }
    let mf = m as f64;
    let ln_norm = mf * lambda.ln() - ln_gamma_unchecked(mf);
    let integrand = |h: f64| {
        if h <= 0.0 {
            return 0.0;
        }
        let ln_pdf = ln_norm + (mf - 1.0) * h.ln() - lambda * h;
        kl_of_snr(p_a * h) * ln_pdf.exp()
    };
    let upper = gain_integration_limit(m, lambda);
    // Split at the mode and at the divergence's own scale 1/P_a so that
    // both features start on an interval boundary.
    let mut knots = vec![0.0, upper];
    for k in [(mf - 1.0) / lambda, 1.0 / p_a] {
        if k > 0.0 && k < upper {
            knots.push(k);
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += integrate(integrand, w[0], w[1], quadrature_tolerance())?.value;
    }
    Ok(total)
}

/// Closed form of g for a single antenna:
/// −[1 + (1 + λ/P_a) e^{λ/P_a} Ei(−λ/P_a)] = −1 + (1 + λ/P_a)·e^{λ/P_a}E1(λ/P_a).
pub fn f_closed_form(p_a: f64, lambda: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a.is_finite()) || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(
            "f_closed_form",
            format!("need P_a > 0 and lambda > 0 (P_a = {p_a}, lambda = {lambda})"),
        ));
    }
    let x = lambda / p_a;
    Ok(-1.0 + (1.0 + x) * exp_scaled_e1(x)?)
}

/// Covertness budget at one transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovertnessBudget {
    pub epsilon: Probability,
    /// 2ε².
    pub kl_cap: f64,
    /// g(P_a).
    pub expected_kl_per_use: f64,
    /// 2ε²/g(P_a); infinite when g = 0.
    pub blocklength_cap: f64,
}

impl CovertnessBudget {
    pub fn from_expected_kl(epsilon: Probability, expected_kl_per_use: f64) -> Self {
        let kl_cap = 2.0 * epsilon.value().powi(2);
        let blocklength_cap = if expected_kl_per_use > 0.0 {
            kl_cap / expected_kl_per_use
        } else {
            f64::INFINITY
        };
        CovertnessBudget {
            epsilon,
            kl_cap,
            expected_kl_per_use,
            blocklength_cap,
        }
    }

    pub fn evaluate(p_a: f64, cfg: &SystemConfig) -> Result<Self> {
        let g = expected_kl(p_a, cfg.m, cfg.lambda)?;
        Ok(Self::from_expected_kl(cfg.epsilon, g))
    }

    /// Whether `l` uses keep the expected divergence within budget.
    pub fn admits(&self, l: u64) -> bool {
        l as f64 * self.expected_kl_per_use <= self.kl_cap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_per_use(0.0, 3.0), 0.0);
        assert_eq!(kl_per_use(2.0, 0.0), 0.0);
        assert!((kl_per_use(1.0, 1.0) - (LN_2 - 0.5)).abs() < 1e-15);
        assert!((kl_per_use(1.0, 1.0) - 0.193_147_2).abs() < 1e-7);
        // Near zero the divergence is x²/2 − 2x³/3 + O(x⁴): the quadratic
        // term alone is off by 4x/3 in relative terms, the cubic fit is tight.
        let x: f64 = 1e-4;
        let quadratic = x * x / 2.0;
        assert!(((kl_per_use(x, 1.0) - quadratic) / quadratic).abs() < 1.5e-4);
        let cubic = quadratic - 2.0 * x.powi(3) / 3.0;
        assert!(((kl_per_use(x, 1.0) - cubic) / cubic).abs() < 1e-7);
    }

    #[test]
    fn kl_series_joins_direct_form() {
        for &x in &[0.009_999_f64, 0.01, 0.010_001] {
            let direct = x.ln_1p() - x / (1.0 + x);
            assert!(((kl_per_use(x, 1.0) - direct) / direct).abs() < 1e-12);
        }
        assert!(kl_per_use(1e-200, 1.0) >= 0.0);
    }

    #[test]
    fn pinsker_examples() {
        assert_eq!(pinsker_lower_bound(37, 0.0), 1.0);
        assert!((pinsker_lower_bound(100, 2.0 * 0.01 / 100.0) - 0.9).abs() < 1e-15);
        let vacuous = pinsker_lower_bound(50, kl_per_use(1.0, 1.0));
        assert!((vacuous - (1.0 - (50.0 * (LN_2 - 0.5) / 2.0).sqrt())).abs() < 1e-15);
        assert!((vacuous + 1.197).abs() < 1e-3);
    }

    #[test]
    fn closed_form_examples() {
        // high-precision reference −1 + 2·e·E1(1)
        let f = f_closed_form(1.0, 1.0).unwrap();
        assert!((f - 0.192_694_724_646_388_1).abs() < 1e-14);
        assert!(f_closed_form(1e-3, 1.0).unwrap() < 1e-5);
        assert!(f_closed_form(1e-3, 1.0).unwrap() > 0.0);
        let a = f_closed_form(2.0, 4.0).unwrap();
        let b = f_closed_form(0.5, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(f_closed_form(0.0, 1.0).is_err());
        assert!(f_closed_form(1.0, -1.0).is_err());
    }

    #[test]
    fn expected_kl_matches_closed_form_on_log_grid() {
        for i in 0..30 {
            let p = 10f64.powf(-3.0 + 6.0 * i as f64 / 29.0);
            for &lambda in &[0.5, 1.0, 2.0] {
                let q = expected_kl(p, 1, lambda).unwrap();
                let c = f_closed_form(p, lambda).unwrap();
                assert!(((q - c) / c).abs() < 1e-8, "P_a = {p}, lambda = {lambda}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn expected_kl_small_power_limit() {
        let p = 1e-4;
        let (m, lambda) = (2u32, 1.0);
        let second_moment = (m * (m + 1)) as f64 / (lambda * lambda);
        let ratio = expected_kl(p, m, lambda).unwrap() / (p * p * second_moment / 2.0);
        assert!((ratio - 1.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn expected_kl_increasing_in_power_and_antennas() {
        for &m in &[1u32, 2, 4, 8, 16, 32] {
            let mut prev = 0.0;
            for i in 0..40 {
                let p = 10f64.powf(-3.0 + 6.0 * i as f64 / 39.0);
                let g = expected_kl(p, m, 1.0).unwrap();
                assert!(g > prev, "M = {m}, P_a = {p}");
                prev = g;
            }
        }
        for &p in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
            let mut prev = 0.0;
            for m in 1..=40 {
                let g = expected_kl(p, m, 1.0).unwrap();
                assert!(g > prev, "M = {m}, P_a = {p}");
                prev = g;
            }
        }
    }

    #[test]
    fn expected_kl_domain() {
        assert!(expected_kl(0.0, 1, 1.0).is_err());
        assert!(expected_kl(1.0, 0, 1.0).is_err());
        assert!(expected_kl(1.0, 1, 0.0).is_err());
        assert!(expected_kl(1e6, 64, 1.0).unwrap().is_finite());
        assert!(expected_kl(1e-6, 1, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn budget_invariants() {
        let eps = Probability::new(0.15).unwrap();
        let b = CovertnessBudget::from_expected_kl(eps, 0.003);
        assert_eq!(b.kl_cap, 2.0 * 0.15 * 0.15);
        assert!(((b.blocklength_cap * b.expected_kl_per_use - b.kl_cap) / b.kl_cap).abs() < 1e-12);
        assert!(b.admits(b.blocklength_cap.floor() as u64));
        assert!(!b.admits(b.blocklength_cap.floor() as u64 + 1));
        let free = CovertnessBudget::from_expected_kl(eps, 0.0);
        assert!(free.blocklength_cap.is_infinite());
    }
}
