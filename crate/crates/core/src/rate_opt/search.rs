//! One-dimensional transmit-power search.
//!
//! With `L` set to its largest admissible value, throughput as a function
//! of `P_a` is a staircase: on each step `L` is constant and throughput grows
//! with power, so the discrete optimum sits on the right edge of a step,
//! the power at which `L·g(P_a) = 2ε²`. The search locates the region on a
//! log grid, refines the continuous relaxation by golden section, and then
//! evaluates the step edges for the integer blocklengths around it.

use serde::Serialize;

use super::{expected_kl_for, floor_blocklength, rate_at, throughput, DesignPoint};
use crate::covertness::CovertnessBudget;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::par::{map_slice, Execution};
use crate::specfun::q_inv;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Knobs of the power search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSearch {
    pub p_lo: f64,
    pub p_hi: f64,
    pub grid_points: usize,
    /// Golden-section stop: bracket width relative to its midpoint.
    pub rel_width: f64,
    /// Relative accuracy of the power-cap root.
    pub root_rel_tol: f64,
    pub exec: Execution,
}

impl Default for PowerSearch {
    fn default() -> Self {
        PowerSearch {
            p_lo: 1e-3,
            p_hi: 1e3,
            grid_points: 200,
            rel_width: 1e-6,
            root_rel_tol: 1e-10,
            exec: Execution::default(),
        }
    }
}

impl PowerSearch {
    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.p_lo, self.p_hi, self.grid_points)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p_lo > 0.0 && self.p_lo < self.p_hi && self.p_hi.is_finite()) || self.grid_points < 3 {
            return Err(Error::domain("PowerSearch", format!("bad bracket or grid: {self:?}")));
        }
        Ok(())
    }
}

/// `n` points spaced evenly in log between `lo` and `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Outcome of a power optimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best: DesignPoint,
    /// `(P_a, throughput)` at every grid point.
    pub power_grid_trace: Vec<(f64, f64)>,
    /// Whether the covertness cap, not `L_max`, limits `L` at the optimum.
    pub covertness_binding: bool,
}

/// Continuous relaxation: real-valued `L = min(L_max, 2ε²/g)`, no flooring.
fn relaxed_throughput(p_a: f64, g: f64, cfg: &SystemConfig, q_inv_delta: f64) -> f64 {
    let cap = CovertnessBudget::from_expected_kl(cfg.epsilon, g).blocklength_cap;
    let l = cap.min(cfg.l_max as f64);
    if l < 1.0 {
        return 0.0;
    }
    let rate = rate_at(p_a * cfg.gain_ab, l, q_inv_delta);
    if rate < 0.0 {
        0.0
    } else {
        l * rate * (1.0 - cfg.delta.value())
    }
}

fn discrete_point(p_a: f64, g: f64, cfg: &SystemConfig) -> Result<DesignPoint> {
    let cap = CovertnessBudget::from_expected_kl(cfg.epsilon, g).blocklength_cap;
    throughput(p_a, floor_blocklength(cap, cfg.l_max), cfg)
}

fn better(candidate: &DesignPoint, incumbent: &DesignPoint) -> bool {
    candidate.throughput > incumbent.throughput
}

/// Largest power in `[lo, hi]` at which `l` uses stay within the budget,
/// i.e. the root of `g(P_a) = 2ε²/l`, or `None` if even `lo` violates it.
///
/// The returned power always satisfies `l·g(P) ≤ 2ε²`.
pub fn power_cap_for_blocklength(cfg: &SystemConfig, l: u64, lo: f64, hi: f64, rel_tol: f64) -> Result<Option<f64>> {
    if l == 0 || !(lo > 0.0 && lo < hi) {
        return Err(Error::domain("power_cap_for_blocklength", "need L >= 1 and 0 < lo < hi"));
    }
    let cap = cfg.kl_cap();
    let admits = |p: f64| -> Result<bool> { Ok(l as f64 * expected_kl_for(p, cfg)? <= cap) };
    if !admits(lo)? {
        return Ok(None);
    }
    if admits(hi)? {
        return Ok(Some(hi));
    }
    // g is strictly increasing in P_a: bisect in log space.
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        if (b - a).exp() - 1.0 <= rel_tol {
            return Ok(Some(a.exp()));
        }
        let mid = 0.5 * (a + b);
        if admits(mid.exp())? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::RootSearch(format!("power cap for L = {l} did not converge")))
}

/// Maximises `L*(P_a)·R·(1 − δ)` over the default power bracket.
pub fn optimize_power(cfg: &SystemConfig) -> Result<OptimizationResult> {
    optimize_power_with(cfg, &PowerSearch::default())
}

pub fn optimize_power_with(cfg: &SystemConfig, search: &PowerSearch) -> Result<OptimizationResult> {
    cfg.validate()?;
    search.validate()?;
    let q = q_inv(cfg.delta.value())?;
    let grid = search.grid();

    let evaluated = map_slice(search.exec, &grid, |&p| -> Result<(DesignPoint, f64)> {
        let g = expected_kl_for(p, cfg)?;
        Ok((discrete_point(p, g, cfg)?, relaxed_throughput(p, g, cfg, q)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let power_grid_trace: Vec<(f64, f64)> = evaluated.iter().map(|(dp, _)| (dp.p_a, dp.throughput)).collect();
    let mut best = evaluated[0].0;
    for (dp, _) in &evaluated {
        if better(dp, &best) {
            best = *dp;
        }
    }

    let (i_star, relaxed_best) = evaluated
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, (_, j))| if *j > acc.1 { (i, *j) } else { acc });

    if relaxed_best > 0.0 {
        let a = grid[i_star.saturating_sub(1)];
        let b = grid[(i_star + 1).min(grid.len() - 1)];
        let objective = |p: f64| -> Result<f64> { Ok(relaxed_throughput(p, expected_kl_for(p, cfg)?, cfg, q)) };
        let p_golden = golden_section_max(objective, a, b, search.rel_width)?;
        let g_golden = expected_kl_for(p_golden, cfg)?;
        let at_golden = discrete_point(p_golden, g_golden, cfg)?;
        if better(&at_golden, &best) {
            best = at_golden;
        }

        // Step edges of the integer blocklengths around the relaxed optimum.
        let cap = CovertnessBudget::from_expected_kl(cfg.epsilon, g_golden).blocklength_cap;
        let l0 = floor_blocklength(cap, cfg.l_max).max(1);
        let corners: Vec<u64> = (l0.saturating_sub(1)..=l0 + 2).filter(|&l| l >= 1 && l <= cfg.l_max).collect();
        let corner_points = map_slice(search.exec, &corners, |&l| -> Result<Option<DesignPoint>> {
            match power_cap_for_blocklength(cfg, l, search.p_lo, search.p_hi, search.root_rel_tol)? {
                Some(p) => {
                    let g = expected_kl_for(p, cfg)?;
                    Ok(Some(discrete_point(p, g, cfg)?))
                }
                None => Ok(None),
            }
        });
        for dp in corner_points {
            if let Some(dp) = dp? {
                if better(&dp, &best) {
                    best = dp;
                }
            }
        }
    }

    let budget = CovertnessBudget::evaluate(best.p_a, cfg)?;
    Ok(OptimizationResult {
        best,
        power_grid_trace,
        covertness_binding: budget.blocklength_cap < cfg.l_max as f64,
    })
}

/// Golden-section maximisation of `f` over `[a, b]` in log-power.
fn golden_section_max<F>(f: F, a: f64, b: f64, rel_width: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (a.ln(), b.ln());
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1.exp())?;
    let mut f2 = f(x2.exp())?;
    while (hi - lo).exp() - 1.0 > rel_width {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1.exp())?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2.exp())?;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Maximises throughput over `P_a` with the blocklength pinned to `l_fixed`.
///
/// Throughput grows with power, so the optimum is the largest power the
/// budget admits for `l_fixed`, capped at the top of the search bracket.
pub fn optimize_fixed_blocklength(cfg: &SystemConfig, l_fixed: u64) -> Result<OptimizationResult> {
    optimize_fixed_blocklength_with(cfg, l_fixed, &PowerSearch::default())
}

pub fn optimize_fixed_blocklength_with(cfg: &SystemConfig, l_fixed: u64, search: &PowerSearch) -> Result<OptimizationResult> {
    cfg.validate()?;
    search.validate()?;
    if l_fixed < 1 || l_fixed > cfg.l_max {
        return Err(Error::domain(
            "optimize_fixed_blocklength",
            format!("fixed blocklength {l_fixed} must lie in [1, L_max = {}]", cfg.l_max),
        ));
    }
    let p_cap = power_cap_for_blocklength(cfg, l_fixed, search.p_lo, search.p_hi, search.root_rel_tol)?;
    let grid = search.grid();
    let power_grid_trace = map_slice(search.exec, &grid, |&p| -> Result<(f64, f64)> {
        let admissible = p_cap.is_some_and(|cap| p <= cap);
        let t = if admissible { throughput(p, l_fixed, cfg)?.throughput } else { 0.0 };
        Ok((p, t))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut best = match p_cap {
        Some(p) => throughput(p, l_fixed, cfg)?,
        None => throughput(search.p_lo, l_fixed, cfg).map(|dp| DesignPoint {
            throughput: 0.0,
            feasible: false,
            ..dp
        })?,
    };
    for &(p, t) in &power_grid_trace {
        if t > best.throughput {
            best = throughput(p, l_fixed, cfg)?;
        }
    }
    let budget = CovertnessBudget::evaluate(best.p_a, cfg)?;
    Ok(OptimizationResult {
        best,
        power_grid_trace,
        covertness_binding: budget.blocklength_cap < cfg.l_max as f64,
    })
}
