//! Statistical properties of the channel model and the combiners.

use std::f64::consts::{PI, TAU};

use statrs::distribution::{ChiSquared, ContinuousCDF};
use switchmimo::channel::{entry_angle, iid_matrix, simulate_transmission, stream_id};
use switchmimo::combining::{phase_shifter_combiner, PhaseBank};
use switchmimo::experiments::{
    interference_samples, run_snr_ratio_convergence, ExperimentConfig, ExperimentKind,
};
use switchmimo::metrics::snr_ratio;
use switchmimo::stats::{mean, variance};

#[test]
fn entry_variance_is_one() {
    let h = iid_matrix(100_000, 1, 3, 0);
    let xs: Vec<f64> = h.matrix().iter().map(|z| z.norm_sqr()).collect();
    let m = mean(&xs);
    assert!((0.98..=1.02).contains(&m), "{m}");
    let re: Vec<f64> = h.matrix().iter().map(|z| z.re).collect();
    assert!(mean(&re).abs() < 0.01);
    assert!((variance(&re) - 0.5).abs() < 0.01);
}

#[test]
fn entry_phases_are_uniform() {
    let h = iid_matrix(100_000, 1, 4, 0);
    const BINS: usize = 36;
    let mut counts = [0usize; BINS];
    for z in h.matrix().iter() {
        let b = ((entry_angle(*z) / TAU) * BINS as f64) as usize;
        counts[b.min(BINS - 1)] += 1;
    }
    let expected = 100_000.0 / BINS as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((BINS - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn magnitudes_are_rayleigh() {
    let h = iid_matrix(1_000_000, 1, 5, 0);
    let mags: Vec<f64> = h.matrix().iter().map(|z| z.norm()).collect();
    let m = mean(&mags);
    assert!((m / (PI.sqrt() / 2.0) - 1.0).abs() < 0.01, "{m}");
}

#[test]
fn symbols_have_unit_power() {
    let h = iid_matrix(4, 3, 1, 0);
    let samples = simulate_transmission(&h, 1.0, 1.0, 50_000, 8).unwrap();
    let mut acc = [0.0; 3];
    for s in samples {
        for (a, z) in acc.iter_mut().zip(s.symbols.iter()) {
            *a += z.norm_sqr();
        }
    }
    for a in acc {
        assert!((a / 50_000.0 - 1.0).abs() < 0.03);
    }
}

#[test]
fn equal_gain_combining_keeps_quarter_pi() {
    let ratios: Vec<f64> = (0..20)
        .map(|t| {
            let h = iid_matrix(10_000, 1, 6, stream_id(&[9, t]));
            let w = phase_shifter_combiner(&h).composite_vector(0);
            snr_ratio(&h.column(0).into_owned(), &w).unwrap()
        })
        .collect();
    let r = mean(&ratios);
    assert!((r / (PI / 4.0) - 1.0).abs() < 0.02, "{r}");
}

#[test]
fn interference_power_moments() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::InterferenceDistribution);
    cfg.n_antennas = 32;
    cfg.samples = 100_000;
    cfg.seed = 17;
    let xs = interference_samples(&cfg).unwrap();
    let m = mean(&xs);
    let v = variance(&xs);
    assert!((m / 32.0 - 1.0).abs() < 0.03, "{m}");
    assert!((v / (32.0 * 32.0) - 1.0).abs() < 0.10, "{v}");
}

#[test]
fn snr_ratio_trend_toward_gamma() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::SnrRatioConvergence);
    cfg.nq_list = vec![4];
    cfg.trials = 100;
    cfg.seed = 21;
    let res = run_snr_ratio_convergence(&cfg).unwrap();
    let gamma = 2.0 / PI;
    let rows = res.metric("snr_ratio");
    assert_eq!(rows.len(), 9);
    let errs: Vec<f64> = rows.iter().map(|r| (r.mean - gamma).abs()).collect();
    for r in &rows {
        assert!((r.mean - gamma).abs() < 3.0 * r.ci95 + 1.0 / r.n_antennas as f64, "{r:?}");
    }
    assert!(rows.windows(2).all(|w| w[1].ci95 < w[0].ci95));
    assert!(mean(&errs[5..]) < mean(&errs[..4]));
    assert!((rows[8].mean / gamma - 1.0).abs() < 0.02);
}

#[test]
fn quantization_trend_against_phase_shifters() {
    // finer switch banks approach the continuous phase-shifter SNR on average
    let gaps: Vec<f64> = [2usize, 4, 8]
        .iter()
        .map(|&nq| {
            let bank = PhaseBank::new(nq).unwrap();
            let diffs: Vec<f64> = (0..50)
                .map(|t| {
                    let h = iid_matrix(256, 1, 31, stream_id(&[nq as u64, t]));
                    let col = h.column(0).into_owned();
                    let sw = switchmimo::combining::quasi_coherent_switch_combiner(&h, &bank).1;
                    let ps = phase_shifter_combiner(&h);
                    snr_ratio(&col, &ps.composite_vector(0)).unwrap()
                        - snr_ratio(&col, &sw.composite_vector(0)).unwrap()
                })
                .collect();
            mean(&diffs)
        })
        .collect();
    assert!(gaps.iter().all(|&g| g > 0.0));
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}
