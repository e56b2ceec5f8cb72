//! Finite-blocklength rate, blocklength rules and covert throughput.
//!
//! The covert design problem is: choose transmit power `P_a` and blocklength
//! `L ≤ L_max` to maximise `L·R(P_a, L)·(1 − δ)` subject to the expected
//! divergence budget `L·g(P_a) ≤ 2ε²`. For a fixed power the best
//! blocklength is the largest admissible one, which reduces the problem to a
//! one-dimensional power search ([`search`]). [`sweep`] runs the figure
//! sweeps on top of it.

pub mod search;
pub mod sweep;

use serde::Serialize;

use crate::covertness::{expected_kl, CovertnessBudget};
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::specfun::{q_inv, LN2};

pub use search::{optimize_fixed_blocklength, optimize_power, power_cap_for_blocklength, OptimizationResult, PowerSearch};
pub use sweep::{sweep_figure1, sweep_figure2, Figure1Row, Figure2Row, SweepMode};

/// A (power, blocklength) choice and what it delivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint {
    pub p_a: f64,
    pub l: u64,
    /// Bits per channel use; 0 when `l == 0`.
    pub rate: f64,
    /// Bits per slot, `L·rate·(1 − δ)` when feasible, otherwise 0.
    pub throughput: f64,
    pub feasible: bool,
}

fn check_delta(func: &'static str, delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(func, format!("delta = {delta} must lie in (0, 0.5)")))
    }
}

/// Channel dispersion 1 − (1 + γ)^{−2}, written to stay accurate as γ → 0.
fn dispersion(snr: f64) -> f64 {
    snr * (2.0 + snr) / ((1.0 + snr) * (1.0 + snr))
}

/// Rate at a real-valued blocklength, given Q^{-1}(δ).
pub(crate) fn rate_at(snr: f64, l: f64, q_inv_delta: f64) -> f64 {
    snr.ln_1p() / LN2 - (dispersion(snr) / l).sqrt() * q_inv_delta / LN2
}

/// Normal-approximation coding rate in bits per channel use:
/// log₂(1 + γ) − √(V/L)·Q^{-1}(δ)/ln 2 with γ = P_a·|h_ab|².
///
/// The result can be negative at short blocklengths.
pub fn fbl_rate(p_a: f64, gain_ab: f64, l: u64, delta: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a.is_finite()) || !(gain_ab >= 0.0 && gain_ab.is_finite()) {
        return Err(Error::domain(
            "fbl_rate",
            format!("need P_a > 0 and gain_ab >= 0 (P_a = {p_a}, gain_ab = {gain_ab})"),
        ));
    }
    if l < 1 {
        return Err(Error::domain("fbl_rate", "blocklength L must be at least 1"));
    }
    check_delta("fbl_rate", delta)?;
    Ok(rate_at(p_a * gain_ab, l as f64, q_inv(delta)?))
}

/// Real-valued blocklength at which the rate crosses zero,
/// V·(Q^{-1}(δ))² / (ln(1 + γ))².
pub fn min_blocklength_continuous(p_a: f64, gain_ab: f64, delta: f64) -> Result<f64> {
    let snr = p_a * gain_ab;
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::domain(
            "min_blocklength",
            format!("P_a·gain_ab = {snr} must be positive; the rate is never positive otherwise"),
        ));
    }
    check_delta("min_blocklength", delta)?;
    let q = q_inv(delta)?;
    Ok(dispersion(snr) * q * q / snr.ln_1p().powi(2))
}

/// Smallest integer blocklength with a nonnegative rate.
pub fn min_blocklength(p_a: f64, gain_ab: f64, delta: f64) -> Result<u64> {
    let c = min_blocklength_continuous(p_a, gain_ab, delta)?;
    if !(c < 1e15) {
        return Err(Error::domain("min_blocklength", format!("blocklength floor {c:e} is unbounded")));
    }
    let mut l = (c.ceil() as u64).max(1);
    // The closed form is exact up to rounding; settle the boundary on the rate itself.
    while fbl_rate(p_a, gain_ab, l, delta)? < 0.0 {
        l += 1;
    }
    while l > 1 && fbl_rate(p_a, gain_ab, l - 1, delta)? >= 0.0 {
        l -= 1;
    }
    Ok(l)
}

/// floor(min(L_max, cap)) for a real-valued covertness cap.
pub(crate) fn floor_blocklength(cap: f64, l_max: u64) -> u64 {
    if cap >= l_max as f64 {
        l_max
    } else if cap >= 1.0 {
        cap.floor() as u64
    } else {
        0
    }
}

/// L* = floor(min(L_max, 2ε²/g(P_a))).
pub fn optimal_blocklength(p_a: f64, cfg: &SystemConfig) -> Result<u64> {
    let budget = CovertnessBudget::evaluate(p_a, cfg)?;
    Ok(floor_blocklength(budget.blocklength_cap, cfg.l_max))
}

/// Throughput of transmitting `l` symbols at power `p_a`.
///
/// Feasible iff `1 ≤ l ≤ L_max` and the rate is nonnegative (equivalently
/// `l ≥ min_blocklength`). The covertness budget is not checked here;
/// callers pick `l` from [`optimal_blocklength`] or a power cap.
pub fn throughput(p_a: f64, l: u64, cfg: &SystemConfig) -> Result<DesignPoint> {
    if !(p_a > 0.0 && p_a.is_finite()) {
        return Err(Error::domain("throughput", format!("P_a = {p_a} must be positive")));
    }
    let delta = cfg.delta.value();
    check_delta("throughput", delta)?;
    if l == 0 {
        return Ok(DesignPoint {
            p_a,
            l,
            rate: 0.0,
            throughput: 0.0,
            feasible: false,
        });
    }
    let rate = fbl_rate(p_a, cfg.gain_ab, l, delta)?;
    let feasible = l <= cfg.l_max && rate >= 0.0 && p_a * cfg.gain_ab > 0.0;
    Ok(DesignPoint {
        p_a,
        l,
        rate,
        throughput: if feasible { l as f64 * rate * (1.0 - delta) } else { 0.0 },
        feasible,
    })
}

/// Design point at `p_a` with the largest admissible blocklength.
pub fn design_point(p_a: f64, cfg: &SystemConfig) -> Result<DesignPoint> {
    let l = optimal_blocklength(p_a, cfg)?;
    throughput(p_a, l, cfg)
}

pub(crate) fn expected_kl_for(p_a: f64, cfg: &SystemConfig) -> Result<f64> {
    expected_kl(p_a, cfg.m, cfg.lambda)
}
