//! Scenario configuration, Rayleigh channel draws and the adversary's
//! observation model.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::Probability;

/// All scenario parameters. Field names on the wire match the JSON config
/// format (`M`, `lambda`, `L_max`, `delta`, `epsilon`, `gain_ab`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of detector antennas.
    #[serde(rename = "M")]
    pub m: u32,
    /// Inverse mean of each |h_aw|² entry.
    pub lambda: f64,
    /// Maximum symbols per slot.
    #[serde(rename = "L_max")]
    pub l_max: u64,
    /// Target decoding error probability at the receiver.
    pub delta: Probability,
    /// Covertness level.
    pub epsilon: Probability,
    /// Receiver channel power gain |h_ab|².
    pub gain_ab: f64,
}

impl SystemConfig {
    /// Baseline used in the numerical results: δ = 0.1, λ = 1, |h_ab|² = 1.
    pub fn baseline(m: u32, l_max: u64, epsilon: f64) -> Result<Self> {
        let cfg = SystemConfig {
            m,
            lambda: 1.0,
            l_max,
            delta: Probability::new(0.1)?,
            epsilon: Probability::new(epsilon)?,
            gain_ab: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m < 1 {
            return fail(format!("M must be at least 1, got {}", self.m));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive and finite, got {}", self.lambda));
        }
        if self.l_max < 1 {
            return fail("L_max must be at least 1".into());
        }
        let delta = self.delta.value();
        if !(delta > 0.0 && delta < 0.5) {
            return fail(format!("delta must lie in (0, 0.5), got {delta}"));
        }
        let eps = self.epsilon.value();
        if !(eps > 0.0 && eps < 1.0) {
            return fail(format!("epsilon must lie in (0, 1), got {eps}"));
        }
        if !(self.gain_ab >= 0.0 && self.gain_ab.is_finite()) {
            return fail(format!("gain_ab must be nonnegative and finite, got {}", self.gain_ab));
        }
        Ok(())
    }

    /// Parses and validates a JSON document; unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config is always serializable")
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let cfg = SystemConfig {
            epsilon: Probability::new(epsilon)?,
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_antennas(&self, m: u32) -> Result<Self> {
        let cfg = SystemConfig { m, ..self.clone() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_l_max(&self, l_max: u64) -> Result<Self> {
        let cfg = SystemConfig { l_max, ..self.clone() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Covertness KL budget 2ε².
    pub fn kl_cap(&self) -> f64 {
        2.0 * self.epsilon.value().powi(2)
    }
}

/// The detector's two hypotheses: silence (`H0`) or transmission (`H1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// One realization of the transmitter-to-detector channel vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    h_aw: Vec<Complex64>,
    gain_aw: f64,
}

impl ChannelDraw {
    pub fn new(h_aw: Vec<Complex64>) -> Result<Self> {
        if h_aw.is_empty() {
            return Err(Error::domain("ChannelDraw::new", "channel vector must be nonempty"));
        }
        let gain_aw = h_aw.iter().map(|h| h.norm_sqr()).sum();
        Ok(ChannelDraw { h_aw, gain_aw })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.h_aw
    }

    /// ‖h_aw‖².
    pub fn gain(&self) -> f64 {
        self.gain_aw
    }

    pub fn antennas(&self) -> usize {
        self.h_aw.len()
    }
}

/// Willie's M × L matrix of received samples, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    truth: Hypothesis,
}

impl ObservationMatrix {
    pub fn from_columns(rows: usize, columns: Vec<Vec<Complex64>>, truth: Hypothesis) -> Result<Self> {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for col in columns {
            if col.len() != rows {
                return Err(Error::Dimension {
                    expected: rows,
                    found: col.len(),
                });
            }
            data.extend(col);
        }
        Ok(ObservationMatrix { rows, cols, data, truth })
    }

    pub fn zeros(rows: usize, cols: usize, truth: Hypothesis) -> Self {
        ObservationMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
            truth,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Blocklength used to generate the matrix.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, l: usize) -> &[Complex64] {
        &self.data[l * self.rows..(l + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    pub fn hypothesis_truth(&self) -> Hypothesis {
        self.truth
    }
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
#[inline]
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws an M-entry Rayleigh channel with per-entry mean power 1/λ.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, m: u32, lambda: f64) -> Result<ChannelDraw> {
    if m < 1 || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(
            "sample_channel",
            format!("need M >= 1 and lambda > 0 (M = {m}, lambda = {lambda})"),
        ));
    }
    let variance = 1.0 / lambda;
    let h = (0..m).map(|_| complex_normal(rng, variance)).collect();
    ChannelDraw::new(h)
}

fn check_observation_args(p_a: f64, l: u64) -> Result<()> {
    if l < 1 || !(p_a >= 0.0 && p_a.is_finite()) {
        return Err(Error::domain(
            "generate_observations",
            format!("need L >= 1 and P_a >= 0 (L = {l}, P_a = {p_a})"),
        ));
    }
    Ok(())
}

/// Fills `column` with one received sample vector and returns the
/// matched-filter output h^H y for it.
#[inline]
fn draw_column<R: Rng + ?Sized>(
    rng: &mut R,
    h: &[Complex64],
    p_a: f64,
    hypothesis: Hypothesis,
    column: &mut [Complex64],
) -> Complex64 {
    let symbol = match hypothesis {
        Hypothesis::H0 => None,
        Hypothesis::H1 => Some(complex_normal(rng, p_a)),
    };
    let mut combined = Complex64::new(0.0, 0.0);
    for (y, hm) in column.iter_mut().zip(h) {
        let noise = complex_normal(rng, 1.0);
        *y = match symbol {
            Some(x) => hm * x + noise,
            None => noise,
        };
        combined += hm.conj() * *y;
    }
    combined
}

/// Generates Willie's observation matrix for `L` channel uses.
///
/// Under `H0` each column is CN(0, I_M); under `H1` column l is
/// h_aw·x_l + n_l with x_l ~ CN(0, P_a) and n_l ~ CN(0, I_M).
pub fn generate_observations<R: Rng + ?Sized>(
    rng: &mut R,
    channel: &ChannelDraw,
    p_a: f64,
    l: u64,
    hypothesis: Hypothesis,
) -> Result<ObservationMatrix> {
    check_observation_args(p_a, l)?;
    let rows = channel.antennas();
    let mut y = ObservationMatrix::zeros(rows, l as usize, hypothesis);
    for column in y.data.chunks_exact_mut(rows) {
        draw_column(rng, &channel.h_aw, p_a, hypothesis, column);
    }
    Ok(y)
}

/// Draws the same samples as [`generate_observations`] but only keeps the
/// running value of ‖h_aw^H Y‖², avoiding the M × L allocation.
pub(crate) fn simulate_statistic<R: Rng + ?Sized>(
    rng: &mut R,
    channel: &ChannelDraw,
    p_a: f64,
    l: u64,
    hypothesis: Hypothesis,
    scratch: &mut Vec<Complex64>,
) -> f64 {
    scratch.resize(channel.antennas(), Complex64::new(0.0, 0.0));
    let mut stat = 0.0;
    for _ in 0..l {
        stat += draw_column(rng, &channel.h_aw, p_a, hypothesis, scratch).norm_sqr();
    }
    stat
}
