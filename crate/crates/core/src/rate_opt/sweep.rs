//! Figure sweeps and their CSV encoding.

use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

use super::search::{optimize_fixed_blocklength_with, optimize_power_with, PowerSearch};
use super::{expected_kl_for, floor_blocklength};
use crate::covertness::CovertnessBudget;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::par::{map_slice, Execution};
use crate::specfun::Probability;

pub const FIGURE1_HEADER: &str = "P_a,L_max,epsilon,L_star";
pub const FIGURE2_HEADER: &str = "M,epsilon,mode,P_a_star,L_star,throughput";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure1Row {
    pub p_a: f64,
    pub l_max: u64,
    pub epsilon: f64,
    pub l_star: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepMode {
    OptimalL,
    FixedL,
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMode::OptimalL => "optimal-L",
            SweepMode::FixedL => "fixed-L",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure2Row {
    pub m: u32,
    pub epsilon: f64,
    pub mode: SweepMode,
    pub p_a_star: f64,
    pub l_star: u64,
    pub throughput: f64,
}

/// L*(P_a) for every `(L_max, ε)` variant over `p_grid`.
///
/// Rows are ordered variant by variant, each in grid order.
pub fn sweep_figure1(cfg_base: &SystemConfig, p_grid: &[f64], variants: &[(u64, f64)]) -> Result<Vec<Figure1Row>> {
    sweep_figure1_with(cfg_base, p_grid, variants, Execution::default())
}

pub fn sweep_figure1_with(
    cfg_base: &SystemConfig,
    p_grid: &[f64],
    variants: &[(u64, f64)],
    exec: Execution,
) -> Result<Vec<Figure1Row>> {
    if p_grid.is_empty() || variants.is_empty() {
        return Err(Error::Config("figure 1 sweep needs a nonempty power grid and variant list".into()));
    }
    let configs = variants
        .iter()
        .map(|&(l_max, eps)| cfg_base.with_l_max(l_max)?.with_epsilon(eps))
        .collect::<Result<Vec<_>>>()?;
    // g(P_a) depends only on (M, λ), so it is shared by all variants.
    let g_values = map_slice(exec, p_grid, |&p| expected_kl_for(p, cfg_base))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(p_grid.len() * variants.len());
    for cfg in &configs {
        for (&p_a, &g) in p_grid.iter().zip(&g_values) {
            let cap = CovertnessBudget::from_expected_kl(cfg.epsilon, g).blocklength_cap;
            rows.push(Figure1Row {
                p_a,
                l_max: cfg.l_max,
                epsilon: cfg.epsilon.value(),
                l_star: floor_blocklength(cap, cfg.l_max),
            });
        }
    }
    Ok(rows)
}

/// Optimal covert throughput against the antenna count, for each ε, with
/// the blocklength optimized and, if `l_fixed` is given, pinned.
///
/// Rows are ordered by ε, then M, then mode.
pub fn sweep_figure2(
    cfg_base: &SystemConfig,
    m_list: &[u32],
    epsilon_list: &[f64],
    l_fixed: Option<u64>,
) -> Result<Vec<Figure2Row>> {
    sweep_figure2_with(cfg_base, m_list, epsilon_list, l_fixed, Execution::default())
}

pub fn sweep_figure2_with(
    cfg_base: &SystemConfig,
    m_list: &[u32],
    epsilon_list: &[f64],
    l_fixed: Option<u64>,
    exec: Execution,
) -> Result<Vec<Figure2Row>> {
    if m_list.is_empty() || epsilon_list.is_empty() {
        return Err(Error::Config("figure 2 sweep needs nonempty M and epsilon lists".into()));
    }
    let mut jobs = Vec::new();
    for &eps in epsilon_list {
        Probability::new(eps)?;
        for &m in m_list {
            jobs.push((eps, m, SweepMode::OptimalL));
            if l_fixed.is_some() {
                jobs.push((eps, m, SweepMode::FixedL));
            }
        }
    }
    // Each job's inner search runs sequentially; parallelism is across jobs.
    let search = PowerSearch {
        exec: Execution::Sequential,
        ..PowerSearch::default()
    };
    map_slice(exec, &jobs, |&(eps, m, mode)| -> Result<Figure2Row> {
        let cfg = cfg_base.with_antennas(m)?.with_epsilon(eps)?;
        let result = match (mode, l_fixed) {
            (SweepMode::FixedL, Some(l)) => optimize_fixed_blocklength_with(&cfg, l, &search)?,
            _ => optimize_power_with(&cfg, &search)?,
        };
        Ok(Figure2Row {
            m,
            epsilon: eps,
            mode,
            p_a_star: result.best.p_a,
            l_star: result.best.l,
            throughput: result.best.throughput,
        })
    })
    .into_iter()
    .collect()
}

/// Formats `x` with 12 significant digits, in the shortest of fixed or
/// exponent notation (like C's `%.12g`).
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}", trim_fraction(mantissa), exp)
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_figure1_csv<W: Write>(mut out: W, rows: &[Figure1Row]) -> io::Result<()> {
    writeln!(out, "{FIGURE1_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", format_sig12(r.p_a), r.l_max, format_sig12(r.epsilon), r.l_star)?;
    }
    Ok(())
}

pub fn write_figure2_csv<W: Write>(mut out: W, rows: &[Figure2Row]) -> io::Result<()> {
    writeln!(out, "{FIGURE2_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m,
            format_sig12(r.epsilon),
            r.mode,
            format_sig12(r.p_a_star),
            r.l_star,
            format_sig12(r.throughput)
        )?;
    }
    Ok(())
}
