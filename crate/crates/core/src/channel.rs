//! Narrowband multi-user uplink channel and transmission samples.
//!
//! Entries of the channel matrix are IID circularly-symmetric complex
//! Gaussians with unit variance. Large-scale fading is assumed to be removed
//! by power control, so every user arrives with the same average power.
//!
//! Randomness is drawn from ChaCha8 substreams keyed by `(seed, stream)`.
//! Any trial can be regenerated in isolation, which keeps parallel Monte
//! Carlo runs bit-identical to serial ones.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, DVectorView};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions and operating point of one uplink link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_quant_phases: usize,
    pub n_rf_chains: usize,
    /// Linear SNR `P / sigma^2`.
    pub snr_linear: f64,
    pub rng_seed: u64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::invalid("n_users", "must be at least 1"));
        }
        if self.n_antennas < self.n_users {
            return Err(Error::invalid(
                "n_antennas",
                format!(
                    "must be >= n_users ({} < {})",
                    self.n_antennas, self.n_users
                ),
            ));
        }
        if self.n_quant_phases == 0 {
            return Err(Error::invalid("n_quant_phases", "must be at least 1"));
        }
        if self.n_rf_chains < self.n_users {
            return Err(Error::invalid(
                "n_rf_chains",
                format!(
                    "must be >= n_users ({} < {})",
                    self.n_rf_chains, self.n_users
                ),
            ));
        }
        if !(self.snr_linear >= 0.0) || !self.snr_linear.is_finite() {
            return Err(Error::invalid(
                "snr_linear",
                "must be a finite nonnegative number",
            ));
        }
        Ok(())
    }
}

/// Deterministic RNG for substream `stream` of `seed`.
pub fn substream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Folds a tuple of indices (cell, trial, attempt, ...) into one stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243f_6a88_85a3_08d3, |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One draw from CN(0, variance).
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Principal argument of `h` mapped into `[0, 2π)`. Zero maps to 0.
pub fn entry_angle(h: Complex64) -> f64 {
    if h.re == 0.0 && h.im == 0.0 {
        return 0.0;
    }
    let a = h.im.atan2(h.re);
    if a < 0.0 {
        let wrapped = a + TAU;
        // a tiny negative angle rounds up to exactly 2π
        if wrapped >= TAU {
            0.0
        } else {
            wrapped
        }
    } else {
        a
    }
}

/// N×U channel matrix, column `u` holds the channel of user `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
}

impl ChannelMatrix {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::invalid("channel", "matrix must be nonempty"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("channel", "entries must be finite"));
        }
        Ok(Self { entries })
    }

    /// Builds a matrix from per-user columns.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let n_users = columns.len();
        let n_antennas = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_antennas) {
            return Err(Error::invalid("channel", "columns differ in length"));
        }
        Self::from_matrix(DMatrix::from_fn(n_antennas, n_users, |n, u| {
            columns[u][n]
        }))
    }

    pub fn n_antennas(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn column(&self, user: usize) -> DVectorView<'_, Complex64> {
        self.entries.column(user)
    }

    pub fn entry(&self, antenna: usize, user: usize) -> Complex64 {
        self.entries[(antenna, user)]
    }

    pub fn angle(&self, antenna: usize, user: usize) -> f64 {
        entry_angle(self.entry(antenna, user))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// Draws an IID CN(0,1) channel for `config`, deterministic in
/// `(config.rng_seed, stream_index)`.
pub fn generate_iid(config: &SystemConfig, stream_index: u64) -> ChannelMatrix {
    iid_matrix(
        config.n_antennas,
        config.n_users,
        config.rng_seed,
        stream_index,
    )
}

/// Same as [`generate_iid`] without a full config.
pub fn iid_matrix(n_antennas: usize, n_users: usize, seed: u64, stream: u64) -> ChannelMatrix {
    let mut rng = substream_rng(seed, stream);
    // column-major fill, so user u's entries are consecutive in the stream
    let entries = DMatrix::from_iterator(
        n_antennas,
        n_users,
        (0..n_antennas * n_users).map(|_| complex_gaussian(&mut rng, 1.0)),
    );
    ChannelMatrix { entries }
}

/// One use of the uplink: symbols, noise and the received vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSample {
    pub symbols: DVector<Complex64>,
    pub noise: DVector<Complex64>,
    pub received: DVector<Complex64>,
}

/// Lazy generator of transmission samples `r = sqrt(P) H s + n`.
pub struct Transmissions<'a> {
    channel: &'a ChannelMatrix,
    amplitude: f64,
    noise_var: f64,
    remaining: usize,
    rng: ChaCha8Rng,
}

impl Iterator for Transmissions<'_> {
    type Item = TransmissionSample;

    fn next(&mut self) -> Option<TransmissionSample> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let h = self.channel.matrix();
        let symbols = DVector::from_iterator(
            h.ncols(),
            (0..h.ncols()).map(|_| complex_gaussian(&mut self.rng, 1.0)),
        );
        let noise = DVector::from_iterator(
            h.nrows(),
            (0..h.nrows()).map(|_| complex_gaussian(&mut self.rng, self.noise_var)),
        );
        let received = h * &symbols * Complex64::from(self.amplitude) + &noise;
        Some(TransmissionSample {
            symbols,
            noise,
            received,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Transmissions<'_> {}

/// Streams `n_samples` transmissions over `channel` with Gaussian unit-power
/// symbols and CN(0, `noise_var`) noise.
pub fn simulate_transmission(
    channel: &ChannelMatrix,
    signal_power: f64,
    noise_var: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Transmissions<'_>> {
    if !(signal_power >= 0.0) || !signal_power.is_finite() {
        return Err(Error::invalid("signal_power", "must be finite and >= 0"));
    }
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::invalid("noise_var", "must be finite and > 0"));
    }
    Ok(Transmissions {
        channel,
        amplitude: signal_power.sqrt(),
        noise_var,
        remaining: n_samples,
        rng: substream_rng(seed, 0),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn cfg(n: usize, u: usize, seed: u64) -> SystemConfig {
        SystemConfig {
            n_antennas: n,
            n_users: u,
            n_quant_phases: 4,
            n_rf_chains: u,
            snr_linear: 1.0,
            rng_seed: seed,
        }
    }

    #[test]
    fn angles_of_axis_points() {
        assert_eq!(entry_angle(Complex64::new(1.0, 0.0)), 0.0);
        assert!((entry_angle(Complex64::new(-1.0, 0.0)) - PI).abs() < 1e-15);
        assert!((entry_angle(Complex64::new(0.0, -1.0)) - 1.5 * PI).abs() < 1e-15);
        assert_eq!(entry_angle(Complex64::new(0.0, 0.0)), 0.0);
        let tiny = entry_angle(Complex64::new(1.0, -1e-300));
        assert!((0.0..TAU).contains(&tiny));
    }

    #[test]
    fn generation_is_deterministic() {
        let c = cfg(16, 3, 7);
        assert_eq!(generate_iid(&c, 0), generate_iid(&c, 0));
        assert_ne!(generate_iid(&c, 0), generate_iid(&c, 1));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(4, 2, 0).validate().is_ok());
        assert!(cfg(1, 2, 0).validate().is_err());
        let mut c = cfg(4, 2, 0);
        c.n_rf_chains = 1;
        assert!(c.validate().is_err());
        c = cfg(4, 2, 0);
        c.n_quant_phases = 0;
        assert!(c.validate().is_err());
        c = cfg(4, 2, 0);
        c.snr_linear = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_power_receives_pure_noise() {
        let h = iid_matrix(8, 2, 1, 0);
        for s in simulate_transmission(&h, 0.0, 0.5, 20, 3).unwrap() {
            assert_eq!(s.received, s.noise);
        }
    }

    #[test]
    fn received_matches_model() {
        let h = iid_matrix(8, 2, 1, 0);
        for s in simulate_transmission(&h, 2.5, 0.1, 50, 3).unwrap() {
            let rebuilt = h.matrix() * &s.symbols * Complex64::from(2.5f64.sqrt()) + &s.noise;
            assert!((rebuilt - &s.received).norm() < 1e-14);
        }
    }

    #[test]
    fn noiseless_limit_recovers_channel_output() {
        let h = iid_matrix(6, 1, 4, 0);
        let p = 3.0;
        for s in simulate_transmission(&h, p, 1e-30, 10, 9).unwrap() {
            let scaled = &s.received / Complex64::from(p.sqrt());
            let expected = h.matrix() * &s.symbols;
            assert!((scaled - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_noise() {
        let h = iid_matrix(4, 1, 0, 0);
        assert!(simulate_transmission(&h, 1.0, 0.0, 1, 0).is_err());
        assert!(simulate_transmission(&h, -1.0, 1.0, 1, 0).is_err());
    }
}
