//! Seeded simulation oracles for the analytic pipeline.
//!
//! Every trial draws from its own sub-stream keyed by `(seed, hypothesis,
//! trial index)`, so estimates are identical for any worker count or
//! partition of the trial range. Trials are grouped into fixed-size chunks
//! and partial results are merged in chunk order.

use std::ops::Range;

use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::covertness::{expected_kl, kl_per_use};
use crate::detector::{optimal_threshold, ThresholdRule};
use crate::error::{Error, Result};
use crate::model::{sample_channel, simulate_statistic, ChannelDraw, Hypothesis, SystemConfig};
use crate::par::{map_chunks, Execution};
use crate::rng::{derive_seed, substream, StreamDomain};

const CHUNK: u64 = 512;

/// A Monte Carlo estimate with its standard error and the seed that
/// replays it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialReport {
    pub trials: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl TrialReport {
    /// Proportion `hits/trials` with binomial standard error √(p̂(1 − p̂)/n).
    pub fn binomial(hits: u64, trials: u64, seed: u64) -> Self {
        let p = hits as f64 / trials as f64;
        TrialReport {
            trials,
            estimate: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            seed,
        }
    }

    /// Number of standard errors separating the estimate from `value`.
    /// A zero standard error with an exact match counts as zero.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.estimate - value).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    pub fn within(&self, value: f64, sigmas: f64) -> bool {
        self.z_score(value) <= sigmas
    }

    /// Binomial agreement with a hypothesized probability `p`, using the
    /// standard error √(p(1 − p)/n) implied by `p` itself. Unlike
    /// [`TrialReport::within`] this stays meaningful when no hits were seen.
    pub fn agrees_with_probability(&self, p: f64, sigmas: f64) -> bool {
        let se = (p * (1.0 - p) / self.trials as f64).sqrt();
        (self.estimate - p).abs() <= sigmas * se
    }
}

/// How the detection statistic is produced in each trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StatisticModel {
    /// Synthesize all M × L observations and combine them.
    #[default]
    Observations,
    /// Draw ‖h^H Y‖² directly from its conditional Gamma law. Much cheaper
    /// at long blocklengths; only valid once the Gamma law itself has been
    /// checked against [`StatisticModel::Observations`].
    GammaLaw,
}

/// Scheduling and fidelity options for the simulations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Simulation {
    pub model: StatisticModel,
    pub exec: Execution,
}

/// Raw error counts, mergeable across disjoint trial ranges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub trials: u64,
    pub false_alarms: u64,
    pub missed_detections: u64,
}

impl ErrorCounts {
    pub fn merge(self, other: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            trials: self.trials + other.trials,
            false_alarms: self.false_alarms + other.false_alarms,
            missed_detections: self.missed_detections + other.missed_detections,
        }
    }

    /// `(P_FA, P_MD)` reports.
    pub fn reports(&self, seed: u64) -> (TrialReport, TrialReport) {
        (
            TrialReport::binomial(self.false_alarms, self.trials, seed),
            TrialReport::binomial(self.missed_detections, self.trials, seed),
        )
    }

    pub fn total_error_rate(&self) -> f64 {
        (self.false_alarms + self.missed_detections) as f64 / self.trials as f64
    }
}

struct TrialRunner<'a> {
    channel: &'a ChannelDraw,
    p_a: f64,
    l: u64,
    theta: f64,
    seed: u64,
    null_law: Option<Gamma<f64>>,
    alt_law: Option<Gamma<f64>>,
}

impl<'a> TrialRunner<'a> {
    fn new(channel: &'a ChannelDraw, p_a: f64, l: u64, theta: f64, seed: u64, model: StatisticModel) -> Result<Self> {
        let (null_law, alt_law) = match model {
            StatisticModel::Observations => (None, None),
            StatisticModel::GammaLaw => {
                let g = channel.gain();
                let law = |scale: f64| {
                    Gamma::new(l as f64, scale).map_err(|e| Error::domain("GammaLaw", e.to_string()))
                };
                (Some(law(g)?), Some(law(g * (g * p_a + 1.0))?))
            }
        };
        Ok(TrialRunner {
            channel,
            p_a,
            l,
            theta,
            seed,
            null_law,
            alt_law,
        })
    }

    fn statistic(&self, hypothesis: Hypothesis, index: u64, scratch: &mut Vec<num_complex::Complex64>) -> f64 {
        let domain = match hypothesis {
            Hypothesis::H0 => StreamDomain::NullHypothesis,
            Hypothesis::H1 => StreamDomain::AltHypothesis,
        };
        let mut rng = substream(self.seed, domain, index);
        let law = match hypothesis {
            Hypothesis::H0 => &self.null_law,
            Hypothesis::H1 => &self.alt_law,
        };
        match law {
            Some(law) => law.sample(&mut rng),
            None => simulate_statistic(&mut rng, self.channel, self.p_a, self.l, hypothesis, scratch),
        }
    }

    fn run(&self, range: Range<u64>) -> ErrorCounts {
        let mut scratch = Vec::new();
        let mut counts = ErrorCounts::default();
        for i in range {
            counts.trials += 1;
            if self.statistic(Hypothesis::H0, i, &mut scratch) > self.theta {
                counts.false_alarms += 1;
            }
            if self.statistic(Hypothesis::H1, i, &mut scratch) <= self.theta {
                counts.missed_detections += 1;
            }
        }
        counts
    }
}

/// Counts detector errors over the trial indices in `trials`, one H0 and
/// one H1 realization per index, deciding `H1` iff the statistic exceeds
/// `theta`.
pub fn count_detection_errors(
    channel: &ChannelDraw,
    p_a: f64,
    l: u64,
    theta: f64,
    seed: u64,
    trials: Range<u64>,
    sim: Simulation,
) -> Result<ErrorCounts> {
    if l < 1 || !(p_a >= 0.0) {
        return Err(Error::domain("count_detection_errors", "need L >= 1 and P_a >= 0"));
    }
    let runner = TrialRunner::new(channel, p_a, l, theta, seed, sim.model)?;
    Ok(map_chunks(sim.exec, trials.start, trials.end, CHUNK, |r| runner.run(r))
        .into_iter()
        .fold(ErrorCounts::default(), ErrorCounts::merge))
}

/// Empirical `(P_FA, P_MD)` of the detector with threshold `theta`.
pub fn empirical_error_probs_at(
    channel: &ChannelDraw,
    p_a: f64,
    l: u64,
    theta: f64,
    trials: u64,
    seed: u64,
    sim: Simulation,
) -> Result<(TrialReport, TrialReport)> {
    if trials < 1000 {
        return Err(Error::Precondition(format!("at least 1000 trials required, got {trials}")));
    }
    Ok(count_detection_errors(channel, p_a, l, theta, seed, 0..trials, sim)?.reports(seed))
}

/// Empirical `(P_FA, P_MD)` of the closed-form-threshold detector.
pub fn empirical_error_probs(
    channel: &ChannelDraw,
    p_a: f64,
    l: u64,
    trials: u64,
    seed: u64,
) -> Result<(TrialReport, TrialReport)> {
    let theta = optimal_threshold(p_a, channel.gain(), l)?;
    empirical_error_probs_at(channel, p_a, l, theta, trials, seed, Simulation::default())
}

/// Running mean and centered second moment (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    /// Standard error of the mean from the sample variance.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }

    fn report(&self, seed: u64) -> TrialReport {
        TrialReport {
            trials: self.n,
            estimate: self.mean,
            std_error: self.std_error(),
            seed,
        }
    }
}

/// Sample mean of the per-use divergence over `draws` Rayleigh channels.
pub fn empirical_expected_kl(p_a: f64, m: u32, lambda: f64, draws: u64, seed: u64) -> Result<TrialReport> {
    empirical_expected_kl_with(p_a, m, lambda, draws, seed, Execution::default())
}

pub fn empirical_expected_kl_with(
    p_a: f64,
    m: u32,
    lambda: f64,
    draws: u64,
    seed: u64,
    exec: Execution,
) -> Result<TrialReport> {
    if draws < 10_000 {
        return Err(Error::Precondition(format!("at least 10^4 draws required, got {draws}")));
    }
    if !(p_a >= 0.0) {
        return Err(Error::domain("empirical_expected_kl", format!("P_a = {p_a} must be nonnegative")));
    }
    let partials = map_chunks(exec, 0, draws, CHUNK * 8, |range| -> Result<Moments> {
        let mut acc = Moments::default();
        for i in range {
            let channel = sample_channel(&mut substream(seed, StreamDomain::Channel, i), m, lambda)?;
            acc.push(kl_per_use(p_a, channel.gain()));
        }
        Ok(acc)
    });
    let mut total = Moments::default();
    for part in partials {
        total = total.merge(part?);
    }
    Ok(total.report(seed))
}

/// Options for [`verify_covertness_with`].
///
/// The default pits the design against the exact likelihood-ratio
/// threshold, the strongest detector of this family, so a pass is
/// meaningful for the halved threshold as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovertnessCheck {
    pub rule: ThresholdRule,
    pub sim: Simulation,
}

impl Default for CovertnessCheck {
    fn default() -> Self {
        CovertnessCheck {
            rule: ThresholdRule::LikelihoodRatio,
            sim: Simulation::default(),
        }
    }
}

/// Mean over random channels of the detector's empirical P_FA + P_MD.
///
/// Only defined inside the covertness budget `L·g(P_a) ≤ 2ε²`, where the
/// result should satisfy `mean ≥ 1 − ε − 3·std_error`. The report's
/// `trials` is the number of channel draws and `std_error` the standard
/// error of the across-channel mean.
pub fn verify_covertness(
    cfg: &SystemConfig,
    p_a: f64,
    l: u64,
    channel_draws: u64,
    trials_per_draw: u64,
    seed: u64,
) -> Result<TrialReport> {
    verify_covertness_with(cfg, p_a, l, channel_draws, trials_per_draw, seed, CovertnessCheck::default())
}

pub fn verify_covertness_with(
    cfg: &SystemConfig,
    p_a: f64,
    l: u64,
    channel_draws: u64,
    trials_per_draw: u64,
    seed: u64,
    check: CovertnessCheck,
) -> Result<TrialReport> {
    cfg.validate()?;
    if l < 1 || channel_draws < 2 || trials_per_draw < 1 {
        return Err(Error::Precondition("need L >= 1, at least 2 channel draws and 1 trial per draw".into()));
    }
    let g = expected_kl(p_a, cfg.m, cfg.lambda)?;
    if l as f64 * g > cfg.kl_cap() * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "L·g(P_a) = {:e} exceeds the budget 2ε² = {:e}",
            l as f64 * g,
            cfg.kl_cap()
        )));
    }
    let inner = Simulation {
        exec: Execution::Sequential,
        ..check.sim
    };
    let partials = map_chunks(check.sim.exec, 0, channel_draws, 16, |range| -> Result<Moments> {
        let mut acc = Moments::default();
        for c in range {
            let channel = sample_channel(&mut substream(seed, StreamDomain::Channel, c), cfg.m, cfg.lambda)?;
            let theta = check.rule.threshold(p_a, channel.gain(), l)?;
            let draw_seed = derive_seed(seed, StreamDomain::Parameters, c);
            let counts = count_detection_errors(&channel, p_a, l, theta, draw_seed, 0..trials_per_draw, inner)?;
            acc.push(counts.total_error_rate());
        }
        Ok(acc)
    });
    let mut total = Moments::default();
    for part in partials {
        total = total.merge(part?);
    }
    Ok(total.report(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn binomial_report() {
        let r = TrialReport::binomial(250, 1000, 7);
        assert_eq!(r.estimate, 0.25);
        assert!((r.std_error - (0.25f64 * 0.75 / 1000.0).sqrt()).abs() < 1e-15);
        let four = TrialReport::binomial(1000, 4000, 7);
        assert!((four.std_error * 2.0 - r.std_error).abs() < 1e-15);
        assert!(r.within(0.25, 0.0));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert!((merged.mean - whole.mean).abs() < 1e-14);
        assert!((merged.m2 - whole.m2).abs() < 1e-9);
    }

    #[test]
    fn zero_power_gives_zero_divergence() {
        let r = empirical_expected_kl(0.0, 3, 1.0, 10_000, 1).unwrap();
        assert_eq!((r.estimate, r.std_error), (0.0, 0.0));
        assert!(empirical_expected_kl(1.0, 3, 1.0, 100, 1).is_err());
    }

    #[test]
    fn split_runs_merge_exactly() {
        let ch = ChannelDraw::new(vec![Complex64::new(0.8, -0.4), Complex64::new(0.1, 0.9)]).unwrap();
        let theta = optimal_threshold(0.7, ch.gain(), 12).unwrap();
        let sim = Simulation::default();
        let whole = count_detection_errors(&ch, 0.7, 12, theta, 42, 0..3000, sim).unwrap();
        let parts = [0..700u64, 700..1901, 1901..3000]
            .into_iter()
            .map(|r| count_detection_errors(&ch, 0.7, 12, theta, 42, r, sim).unwrap())
            .fold(ErrorCounts::default(), ErrorCounts::merge);
        assert_eq!(whole, parts);
    }

    #[test]
    fn too_few_trials_rejected() {
        let ch = ChannelDraw::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(
            empirical_error_probs(&ch, 1.0, 10, 999, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn covertness_precondition_enforced() {
        let cfg = SystemConfig::baseline(1, 1000, 0.1).unwrap();
        // g(1) ≈ 0.193 so even L = 1 breaks 2ε² = 0.02.
        assert!(matches!(
            verify_covertness(&cfg, 1.0, 1, 100, 10, 0),
            Err(Error::Precondition(_))
        ));
    }
}
