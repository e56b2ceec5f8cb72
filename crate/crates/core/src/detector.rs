//! The adversary's likelihood-ratio detector and its error probabilities.
//!
//! Given the channel h_aw, the detector compares the maximal-ratio combined
//! energy ‖h_aw^H Y‖² with a threshold. Conditioned on the channel that
//! statistic is Gamma(L, ‖h‖²) under H0 and Gamma(L, ‖h‖²(‖h‖²P_a + 1))
//! under H1, which yields closed-form false-alarm and miss probabilities.
//!
//! Two thresholds are provided. [`optimal_threshold`] is the closed form
//! `(L/2)(1/P_a + ‖h‖²) ln(P_a‖h‖² + 1)`; its `L/2` factor follows a
//! real-Gaussian normalisation of the density. Under the complex Gaussian
//! observation model the log-likelihood ratio is
//! `‖h^H Y‖²/(1/P_a + ‖h‖²) − L ln(P_a‖h‖² + 1)`, so the minimum
//! total-error threshold is twice that value, see
//! [`likelihood_ratio_threshold`]. [`ThresholdRule`] selects between them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hypothesis, ObservationMatrix};
use crate::specfun::{reg_lower_gamma, reg_upper_gamma, Probability};

/// False-alarm and missed-detection probabilities of one detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionErrors {
    pub p_fa: Probability,
    pub p_md: Probability,
    pub total: f64,
}

impl DetectionErrors {
    pub fn new(p_fa: Probability, p_md: Probability) -> Self {
        DetectionErrors {
            p_fa,
            p_md,
            total: p_fa.value() + p_md.value(),
        }
    }
}

/// Which closed-form threshold the detector compares against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `(L/2)(1/P_a + ‖h‖²) ln(P_a‖h‖² + 1)`.
    #[default]
    Printed,
    /// `L(1/P_a + ‖h‖²) ln(P_a‖h‖² + 1)`, the exact equal-prior LRT threshold.
    LikelihoodRatio,
}

impl ThresholdRule {
    pub fn threshold(self, p_a: f64, gain_aw: f64, l: u64) -> Result<f64> {
        match self {
            ThresholdRule::Printed => optimal_threshold(p_a, gain_aw, l),
            ThresholdRule::LikelihoodRatio => likelihood_ratio_threshold(p_a, gain_aw, l),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ThresholdRule::Printed => "printed",
            ThresholdRule::LikelihoodRatio => "likelihood-ratio",
        }
    }
}

fn check_positive(func: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("{name} = {v} must be positive and finite")))
    }
}

fn check_blocklength(func: &'static str, l: u64) -> Result<()> {
    if l >= 1 {
        Ok(())
    } else {
        Err(Error::domain(func, "blocklength L must be at least 1"))
    }
}

/// Closed-form decision threshold `(L/2)(1/P_a + ‖h‖²) ln(P_a‖h‖² + 1)`.
///
/// `P_a = 0` is rejected: with no transmission there is nothing to detect.
pub fn optimal_threshold(p_a: f64, gain_aw: f64, l: u64) -> Result<f64> {
    check_positive("optimal_threshold", "P_a", p_a)?;
    check_positive("optimal_threshold", "gain_aw", gain_aw)?;
    check_blocklength("optimal_threshold", l)?;
    Ok(0.5 * l as f64 * (1.0 / p_a + gain_aw) * (p_a * gain_aw).ln_1p())
}

/// Threshold at which the likelihood ratio of the complex Gaussian
/// observation model equals one.
pub fn likelihood_ratio_threshold(p_a: f64, gain_aw: f64, l: u64) -> Result<f64> {
    Ok(2.0 * optimal_threshold(p_a, gain_aw, l)?)
}

/// Maximal-ratio combined energy ‖h_aw^H Y‖².
pub fn decision_statistic(y: &ObservationMatrix, h_aw: &[Complex64]) -> Result<f64> {
    if y.rows() != h_aw.len() {
        return Err(Error::Dimension {
            expected: h_aw.len(),
            found: y.rows(),
        });
    }
    Ok(y
        .columns()
        .map(|col| {
            h_aw.iter()
                .zip(col)
                .map(|(h, y)| h.conj() * y)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum())
}

/// Decides `H1` iff the statistic strictly exceeds `theta`.
pub fn decide_with_threshold(y: &ObservationMatrix, h_aw: &[Complex64], theta: f64) -> Result<Hypothesis> {
    let stat = decision_statistic(y, h_aw)?;
    Ok(if stat > theta { Hypothesis::H1 } else { Hypothesis::H0 })
}

/// Runs the detector with the closed-form [`optimal_threshold`].
pub fn decide(y: &ObservationMatrix, h_aw: &[Complex64], p_a: f64) -> Result<Hypothesis> {
    let gain: f64 = h_aw.iter().map(|h| h.norm_sqr()).sum();
    let theta = optimal_threshold(p_a, gain, y.cols() as u64)?;
    decide_with_threshold(y, h_aw, theta)
}

/// P[‖h^H Y‖² > θ | H0] = 1 − γ(L, θ/‖h‖²)/Γ(L).
pub fn analytic_pfa(theta: f64, gain_aw: f64, l: u64) -> Result<Probability> {
    check_positive("analytic_pfa", "theta", theta)?;
    check_positive("analytic_pfa", "gain_aw", gain_aw)?;
    check_blocklength("analytic_pfa", l)?;
    reg_upper_gamma(l as f64, theta / gain_aw).map(Probability::saturating)
}

/// P[‖h^H Y‖² ≤ θ | H1] = γ(L, θ/(‖h‖²(‖h‖²P_a + 1)))/Γ(L).
pub fn analytic_pmd(theta: f64, gain_aw: f64, p_a: f64, l: u64) -> Result<Probability> {
    check_positive("analytic_pmd", "theta", theta)?;
    check_positive("analytic_pmd", "gain_aw", gain_aw)?;
    check_positive("analytic_pmd", "P_a", p_a)?;
    check_blocklength("analytic_pmd", l)?;
    reg_lower_gamma(l as f64, theta / (gain_aw * (gain_aw * p_a + 1.0)))
}

/// Error probabilities of the detector using threshold `theta`.
pub fn errors_at_threshold(theta: f64, p_a: f64, gain_aw: f64, l: u64) -> Result<DetectionErrors> {
    Ok(DetectionErrors::new(
        analytic_pfa(theta, gain_aw, l)?,
        analytic_pmd(theta, gain_aw, p_a, l)?,
    ))
}

/// Error probabilities at the closed-form [`optimal_threshold`].
pub fn total_error_at_optimum(p_a: f64, gain_aw: f64, l: u64) -> Result<DetectionErrors> {
    total_error_with_rule(ThresholdRule::Printed, p_a, gain_aw, l)
}

pub fn total_error_with_rule(rule: ThresholdRule, p_a: f64, gain_aw: f64, l: u64) -> Result<DetectionErrors> {
    let theta = rule.threshold(p_a, gain_aw, l)?;
    errors_at_threshold(theta, p_a, gain_aw, l)
}

/// Result of scanning the analytic total error over a threshold grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdScan {
    pub best_theta: f64,
    pub best_total: f64,
}

/// Minimum of P_FA + P_MD over `points` log-spaced thresholds in
/// `[center/10, 10·center]`.
pub fn scan_thresholds(center: f64, p_a: f64, gain_aw: f64, l: u64, points: usize) -> Result<ThresholdScan> {
    check_positive("scan_thresholds", "center", center)?;
    if points < 2 {
        return Err(Error::domain("scan_thresholds", "need at least two grid points"));
    }
    let (lo, hi) = ((center / 10.0).ln(), (center * 10.0).ln());
    let mut best = ThresholdScan {
        best_theta: f64::NAN,
        best_total: f64::INFINITY,
    };
    for i in 0..points {
        let theta = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
        let total = errors_at_threshold(theta, p_a, gain_aw, l)?.total;
        if total < best.best_total {
            best = ThresholdScan {
                best_theta: theta,
                best_total: total,
            };
        }
    }
    Ok(best)
}
