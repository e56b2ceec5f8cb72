//! Closed-form detector and divergence results against simulation.

use covert_fbl::covertness::{expected_kl, f_closed_form};
use covert_fbl::detector::{
    analytic_pfa, analytic_pmd, decide, decision_statistic, optimal_threshold, ThresholdRule,
};
use covert_fbl::model::{generate_observations, sample_channel};
use covert_fbl::montecarlo::{
    count_detection_errors, empirical_error_probs, empirical_expected_kl, verify_covertness, verify_covertness_with,
    CovertnessCheck, Simulation, StatisticModel, TrialReport,
};
use covert_fbl::rate_opt::optimize_power;
use covert_fbl::rng::{substream, StreamDomain};
use covert_fbl::{ChannelDraw, Hypothesis, SystemConfig};
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Gamma};

fn channel_with_gain(gain: f64, m: usize) -> ChannelDraw {
    let amp = (gain / m as f64).sqrt();
    ChannelDraw::new(vec![Complex64::new(amp, 0.0); m]).unwrap()
}

#[test]
fn error_probabilities_match_closed_forms() {
    let (p_a, l) = (1.0, 50);
    let ch = channel_with_gain(2.0, 2);
    let theta = optimal_threshold(p_a, 2.0, l).unwrap();
    let (fa, md) = empirical_error_probs(&ch, p_a, l, 100_000, 2024).unwrap();
    let pfa = analytic_pfa(theta, 2.0, l).unwrap().value();
    let pmd = analytic_pmd(theta, 2.0, p_a, l).unwrap().value();
    assert!(fa.agrees_with_probability(pfa, 4.0), "P_FA {} vs {pfa}", fa.estimate);
    assert!(md.agrees_with_probability(pmd, 4.0), "P_MD {} vs {pmd}", md.estimate);
}

#[test]
fn detector_is_nearly_perfect_at_high_snr() {
    let ch = channel_with_gain(1.0, 1);
    let (p_a, l, n) = (100.0, 100, 100_000u64);
    let hits = (0..n)
        .filter(|&i| {
            let y = generate_observations(&mut substream(6, StreamDomain::AltHypothesis, i), &ch, p_a, l, Hypothesis::H1)
                .unwrap();
            decide(&y, ch.coefficients(), p_a).unwrap() == Hypothesis::H1
        })
        .count();
    assert!(hits as f64 / n as f64 >= 0.999, "{hits}");
}

#[test]
fn statistic_follows_gamma_law() {
    // The cheap Gamma-law simulation path relies on this distribution.
    let ch = ChannelDraw::new(vec![Complex64::new(0.5, 0.2), Complex64::new(-0.4, 0.9), Complex64::new(0.1, -0.3)]).unwrap();
    let (g, p_a, l, n) = (ch.gain(), 0.8, 20u64, 20_000u64);
    let critical = 1.6276 / (n as f64).sqrt();
    for (hyp, scale) in [(Hypothesis::H0, g), (Hypothesis::H1, g * (g * p_a + 1.0))] {
        let mut xs: Vec<f64> = (0..n)
            .map(|i| {
                let y = generate_observations(&mut substream(31, StreamDomain::Parameters, i), &ch, p_a, l, hyp).unwrap();
                decision_statistic(&y, ch.coefficients()).unwrap()
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        let law = Gamma::new(l as f64, 1.0 / scale).unwrap();
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = law.cdf(x);
                (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
            })
            .fold(0.0, f64::max);
        assert!(d < critical, "{hyp:?}: D = {d}");
    }
}

#[test]
fn gamma_law_and_full_synthesis_agree() {
    let ch = channel_with_gain(1.3, 2);
    let theta = ThresholdRule::LikelihoodRatio.threshold(0.5, 1.3, 30).unwrap();
    let run = |model| {
        let sim = Simulation { model, ..Simulation::default() };
        count_detection_errors(&ch, 0.5, 30, theta, 77, 0..50_000, sim).unwrap().reports(77)
    };
    let (fa_obs, md_obs) = run(StatisticModel::Observations);
    let (fa_gam, md_gam) = run(StatisticModel::GammaLaw);
    let two_sample = |a: TrialReport, b: TrialReport| (a.estimate - b.estimate).abs() / a.std_error.hypot(b.std_error);
    assert!(two_sample(fa_obs, fa_gam) < 4.0);
    assert!(two_sample(md_obs, md_gam) < 4.0);
}

#[test]
fn indistinguishable_hypotheses_give_unit_total_error() {
    let ch = channel_with_gain(1.0, 1);
    let (fa, md) = empirical_error_probs(&ch, 1e-9, 10, 100_000, 5).unwrap();
    let total = fa.estimate + md.estimate;
    let se = fa.std_error.hypot(md.std_error);
    assert!((total - 1.0).abs() <= 4.0 * se, "{total} ± {se}");
}

#[test]
fn reports_are_reproducible() {
    let ch = channel_with_gain(0.9, 3);
    let a = empirical_error_probs(&ch, 0.4, 25, 5_000, 99).unwrap();
    let b = empirical_error_probs(&ch, 0.4, 25, 5_000, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.0.seed, 99);
}

#[test]
fn expected_kl_matches_simulation() {
    let closed = f_closed_form(1.0, 1.0).unwrap();
    let mc = empirical_expected_kl(1.0, 1, 1.0, 10_000_000, 13).unwrap();
    assert!(mc.within(closed, 4.0), "{} ± {} vs {closed}", mc.estimate, mc.std_error);
    assert!((mc.estimate - 0.19269).abs() < 4.0 * mc.std_error + 1e-5);

    let quad = expected_kl(0.5, 4, 1.0).unwrap();
    let mc = empirical_expected_kl(0.5, 4, 1.0, 1_000_000, 14).unwrap();
    assert!(mc.within(quad, 4.0), "{} ± {} vs {quad}", mc.estimate, mc.std_error);
}

#[test]
fn standard_error_scales_with_trials() {
    let ch = channel_with_gain(1.0, 2);
    let a = empirical_error_probs(&ch, 0.3, 40, 10_000, 1).unwrap().0;
    let b = empirical_error_probs(&ch, 0.3, 40, 40_000, 1).unwrap().0;
    // Deterministic formula: same proportion, four times the trials.
    let same_p = TrialReport::binomial((a.estimate * 40_000.0).round() as u64, 40_000, 1);
    assert!((same_p.std_error * 2.0 - a.std_error).abs() < 1e-15);
    assert!(b.std_error < a.std_error);

    // Empirical scatter across ten disjoint seeds roughly halves.
    let scatter = |trials: u64| {
        let xs: Vec<f64> = (0..10)
            .map(|s| empirical_error_probs(&ch, 0.3, 40, trials, 1000 + s).unwrap().0.estimate)
            .collect();
        let mu = xs.iter().sum::<f64>() / 10.0;
        (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / 9.0).sqrt()
    };
    let ratio = scatter(4_000) / scatter(16_000);
    assert!(ratio > 1.0 && ratio < 4.0, "scatter ratio {ratio}");
}

#[test]
fn covertness_holds_at_the_optimized_design() {
    let cfg = SystemConfig::baseline(2, 1000, 0.2).unwrap();
    let best = optimize_power(&cfg).unwrap().best;
    assert!(best.l > 0);
    let check = CovertnessCheck {
        sim: Simulation {
            model: StatisticModel::GammaLaw,
            ..Simulation::default()
        },
        ..CovertnessCheck::default()
    };
    let r = verify_covertness_with(&cfg, best.p_a, best.l, 10_000, 200, 3, check).unwrap();
    assert!(r.estimate >= 0.8 - 3.0 * r.std_error, "{} ± {}", r.estimate, r.std_error);
}

#[test]
fn vanishing_power_is_undetectable() {
    let cfg = SystemConfig::baseline(2, 1000, 0.2).unwrap();
    let r = verify_covertness(&cfg, 1e-9, 1, 200, 200, 8).unwrap();
    assert!((r.estimate - 1.0).abs() <= 4.0 * r.std_error + 1e-12, "{} ± {}", r.estimate, r.std_error);
}

#[test]
fn fewer_uses_help_covertness() {
    let cfg = SystemConfig::baseline(1, 1000, 0.3).unwrap();
    let best = optimize_power(&cfg).unwrap().best;
    let check = CovertnessCheck {
        sim: Simulation {
            model: StatisticModel::GammaLaw,
            ..Simulation::default()
        },
        ..CovertnessCheck::default()
    };
    let full = verify_covertness_with(&cfg, best.p_a, best.l, 2_000, 500, 4, check).unwrap();
    let half = verify_covertness_with(&cfg, best.p_a, best.l / 2, 2_000, 500, 4, check).unwrap();
    assert!(
        half.estimate >= full.estimate - 3.0 * full.std_error.hypot(half.std_error),
        "{} vs {}",
        half.estimate,
        full.estimate
    );
}

#[test]
fn covertness_outside_budget_is_refused() {
    let cfg = SystemConfig::baseline(1, 1000, 0.1).unwrap();
    assert!(verify_covertness(&cfg, 10.0, 1000, 100, 100, 1).is_err());
    let ch = sample_channel(&mut substream(1, StreamDomain::Channel, 0), 2, 1.0).unwrap();
    assert!(empirical_error_probs(&ch, 1.0, 10, 999, 1).is_err());
}
