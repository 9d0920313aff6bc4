//! Large-array limits of the switch receiver and checks of the derivation
//! behind them.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::channel::{complex_gaussian, entry_angle, substream_rng};
use crate::error::{Error, Result};

/// Fewest draws accepted by [`sector_expectation_check`].
pub const MIN_SECTOR_SAMPLES: usize = 10_000;

/// Asymptotic fraction of the MRC SNR kept by quasi-coherent switch combining
/// with `n_quant` constant shifters: `N_Q^2 / (4π) · sin^2(π / N_Q)`.
pub fn gamma_factor(n_quant: usize) -> Result<f64> {
    match n_quant {
        0 => Err(Error::invalid("n_quant_phases", "must be at least 1")),
        // sin(π) is not exactly zero in floating point
        1 => Ok(0.0),
        _ => {
            let nq = n_quant as f64;
            Ok(nq * nq / (4.0 * PI) * (PI / nq).sin().powi(2))
        }
    }
}

fn check_dims(n_antennas: usize, n_users: usize) -> Result<()> {
    if n_users == 0 || n_antennas < n_users {
        return Err(Error::invalid(
            "dimensions",
            format!("need N >= U >= 1, got N={n_antennas}, U={n_users}"),
        ));
    }
    Ok(())
}

/// Limit of the per-user SINR, `(N/U) · γ(N_Q)`.
pub fn sinr_limit(n_antennas: usize, n_users: usize, n_quant: usize) -> Result<f64> {
    check_dims(n_antennas, n_users)?;
    Ok(n_antennas as f64 / n_users as f64 * gamma_factor(n_quant)?)
}

/// Limit of the per-user rate, `log2(1 + sinr_limit)`.
pub fn rate_limit(n_antennas: usize, n_users: usize, n_quant: usize) -> Result<f64> {
    Ok(sinr_limit(n_antennas, n_users, n_quant)?.ln_1p() / std::f64::consts::LN_2)
}

/// All three limits for one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_quant: usize,
    pub snr_linear: f64,
    pub gamma: f64,
    pub sinr_limit: f64,
    pub rate_limit: f64,
}

impl AsymptoticPrediction {
    pub fn new(n_antennas: usize, n_users: usize, n_quant: usize, snr_linear: f64) -> Result<Self> {
        Ok(Self {
            n_antennas,
            n_users,
            n_quant,
            snr_linear,
            gamma: gamma_factor(n_quant)?,
            sinr_limit: sinr_limit(n_antennas, n_users, n_quant)?,
            rate_limit: rate_limit(n_antennas, n_users, n_quant)?,
        })
    }
}

/// Both sides of the trigonometric step that turns the sector moments into
/// the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

/// `N_Q^2/(16π) · (sin^2(2π/N_Q) + (1 - cos(2π/N_Q))^2)` against
/// `N_Q^2/(4π) · sin^2(π/N_Q)`, both evaluated literally.
pub fn appendix_identity_check(n_quant: usize) -> Result<IdentityCheck> {
    if n_quant == 0 {
        return Err(Error::invalid("n_quant_phases", "must be at least 1"));
    }
    let nq = n_quant as f64;
    let width = TAU / nq;
    let lhs = nq * nq / (16.0 * PI) * (width.sin().powi(2) + (1.0 - width.cos()).powi(2));
    let rhs = nq * nq / (4.0 * PI) * (PI / nq).sin().powi(2);
    Ok(IdentityCheck {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).abs(),
    })
}

/// One Monte Carlo moment against its closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub name: &'static str,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub z_score: f64,
}

impl MomentCheck {
    fn new(name: &'static str, estimate: f64, target: f64, std_error: f64) -> Self {
        let z_score = if std_error > 0.0 {
            (estimate - target) / std_error
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            name,
            estimate,
            target,
            std_error,
            z_score,
        }
    }
}

/// Monte Carlo check of the per-sector moments used in the SNR limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorExpectationReport {
    pub n_quant: usize,
    pub n_samples: usize,
    pub checks: Vec<MomentCheck>,
}

impl SectorExpectationReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z_score.abs()).fold(0.0, f64::max)
    }

    pub fn passes(&self, z_limit: f64) -> bool {
        self.max_abs_z() <= z_limit
    }

    pub fn get(&self, name: &str) -> Option<&MomentCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self, n: f64) -> f64 {
        self.sum / n
    }

    fn std_error(&self, n: f64) -> f64 {
        let m = self.sum / n;
        ((self.sum_sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
    }
}

/// Draws CN(0,1) entries, rotates each into the first sector as the switch
/// combiner does, and compares the conditional moments with their closed
/// forms. Also checks that magnitude and in-sector phase are uncorrelated.
pub fn sector_expectation_check(n_quant: usize, n_samples: usize, seed: u64) -> Result<SectorExpectationReport> {
    if n_quant == 0 {
        return Err(Error::invalid("n_quant_phases", "must be at least 1"));
    }
    if n_samples < MIN_SECTOR_SAMPLES {
        return Err(Error::InsufficientData {
            got: n_samples,
            needed: MIN_SECTOR_SAMPLES,
        });
    }
    let width = TAU / n_quant as f64;
    let mut rng = substream_rng(seed, 0);
    let (mut mag, mut cos, mut sin, mut mag_cos, mut mag_sin) = Default::default();
    let (mut cov_cos, mut cov_sin): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut draws = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let h = complex_gaussian(&mut rng, 1.0);
        let r = h.norm();
        let theta = entry_angle(h) % width;
        let (s, c) = theta.sin_cos();
        Moments::push(&mut mag, r);
        Moments::push(&mut cos, c);
        Moments::push(&mut sin, s);
        Moments::push(&mut mag_cos, r * c);
        Moments::push(&mut mag_sin, r * s);
        draws.push((r, c, s));
    }
    let n = n_samples as f64;
    let (m_r, m_c, m_s) = (mag.mean(n), cos.mean(n), sin.mean(n));
    for &(r, c, s) in &draws {
        cov_cos.push((r - m_r) * (c - m_c));
        cov_sin.push((r - m_r) * (s - m_s));
    }
    let product_check = |name: &'static str, v: &[f64]| {
        let mut m = Moments::default();
        v.iter().for_each(|&x| m.push(x));
        MomentCheck::new(name, m.mean(n), 0.0, m.std_error(n))
    };

    let rayleigh_mean = PI.sqrt() / 2.0;
    let cos_target = width.sin() / width;
    let sin_target = (1.0 - width.cos()) / width;
    let checks = vec![
        MomentCheck::new("E|h|", m_r, rayleigh_mean, mag.std_error(n)),
        MomentCheck::new("E[cos]", m_c, cos_target, cos.std_error(n)),
        MomentCheck::new("E[sin]", m_s, sin_target, sin.std_error(n)),
        MomentCheck::new("E[|h|cos]", mag_cos.mean(n), rayleigh_mean * cos_target, mag_cos.std_error(n)),
        MomentCheck::new("E[|h|sin]", mag_sin.mean(n), rayleigh_mean * sin_target, mag_sin.std_error(n)),
        product_check("cov(|h|,cos)", &cov_cos),
        product_check("cov(|h|,sin)", &cov_sin),
    ];
    Ok(SectorExpectationReport {
        n_quant,
        n_samples,
        checks,
    })
}
