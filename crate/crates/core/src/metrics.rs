//! SINR and achievable-rate evaluation.
//!
//! [`sinr`] evaluates the closed-form per-user SINR
//! `ρ|w_u^H h_u|^2 / (ρ Σ_{l≠u} |w_u^H h_l|^2 + ‖w_u‖^2)` on the composite
//! combiners. [`empirical_sinr`] estimates the same quantity from simulated
//! transmissions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{ChannelMatrix, TransmissionSample};
use crate::combining::CombinerSet;
use crate::error::{Error, Result};

/// Fewest samples [`empirical_sinr`] accepts.
pub const MIN_EMPIRICAL_SAMPLES: usize = 100;

/// Below this ratio of (interference + noise) to desired power the SINR is
/// reported as `f64::INFINITY`.
const INFINITE_SINR_RATIO: f64 = 1e-12;

/// Per-user SINRs and rates of one link realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkMetrics {
    pub per_user_sinr: Vec<f64>,
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
}

impl LinkMetrics {
    pub fn from_sinr(per_user_sinr: Vec<f64>) -> Self {
        let per_user_rate: Vec<f64> = per_user_sinr.iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).collect();
        let sum_rate = per_user_rate.iter().sum();
        Self {
            per_user_sinr,
            per_user_rate,
            sum_rate,
        }
    }

    pub fn n_users(&self) -> usize {
        self.per_user_sinr.len()
    }

    /// Sum rate divided by the number of users.
    pub fn rate_per_user(&self) -> f64 {
        self.sum_rate / self.n_users() as f64
    }
}

/// Analytic SINR of every user for linear SNR `snr = P/σ²`.
pub fn sinr(channel: &ChannelMatrix, combiners: &CombinerSet, snr: f64) -> Result<LinkMetrics> {
    if combiners.n_antennas() != channel.n_antennas() || combiners.n_users() != channel.n_users() {
        return Err(Error::invalid(
            "combiners",
            format!(
                "shape {}x{} does not match channel {}x{}",
                combiners.n_antennas(),
                combiners.n_users(),
                channel.n_antennas(),
                channel.n_users()
            ),
        ));
    }
    if !(snr >= 0.0) {
        return Err(Error::invalid("snr", "must be >= 0"));
    }
    let w = combiners.composite();
    let cross = w.adjoint() * channel.matrix();
    let per_user = (0..channel.n_users())
        .map(|u| {
            let norm = w.column(u).norm_squared();
            if norm == 0.0 {
                return Err(Error::ZeroCombiner { user: u });
            }
            let desired = cross[(u, u)].norm_sqr();
            let interference: f64 = (0..channel.n_users())
                .filter(|&l| l != u)
                .map(|l| cross[(u, l)].norm_sqr())
                .sum();
            Ok(snr * desired / (snr * interference + norm))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinkMetrics::from_sinr(per_user))
}

/// Genie-aided SINR estimate from transmissions.
///
/// The combiner output `y_u = w_u^H r` is regressed on the known symbol
/// vectors. The fitted coefficients give desired and interference powers,
/// and the residual power estimates the noise.
pub fn empirical_sinr<I>(samples: I, combiners: &CombinerSet) -> Result<LinkMetrics>
where
    I: IntoIterator<Item = TransmissionSample>,
{
    let w = combiners.composite();
    let users = combiners.n_users();
    let mut count = 0usize;
    let mut gram: Option<DMatrix<Complex64>> = None;
    // cross[(l, u)] = Σ_t conj(s_l) y_u
    let mut cross: Option<DMatrix<Complex64>> = None;
    let mut energy = vec![0.0; users];
    for sample in samples {
        let s = &sample.symbols;
        if sample.received.len() != w.nrows() {
            return Err(Error::invalid("samples", "received length does not match combiners"));
        }
        let k = s.len();
        let g = gram.get_or_insert_with(|| DMatrix::zeros(k, k));
        let c = cross.get_or_insert_with(|| DMatrix::zeros(k, users));
        if g.nrows() != k {
            return Err(Error::invalid("samples", "symbol length changes between samples"));
        }
        let y: DVector<Complex64> = w.adjoint() * &sample.received;
        let s_conj = s.map(|z| z.conj());
        *g += &s_conj * s.transpose();
        *c += &s_conj * y.transpose();
        for (e, yu) in energy.iter_mut().zip(y.iter()) {
            *e += yu.norm_sqr();
        }
        count += 1;
    }
    if count < MIN_EMPIRICAL_SAMPLES {
        return Err(Error::InsufficientData {
            got: count,
            needed: MIN_EMPIRICAL_SAMPLES,
        });
    }
    let gram = gram.expect("at least one sample");
    let cross = cross.expect("at least one sample");
    let k = gram.nrows();
    if k != users {
        return Err(Error::invalid(
            "samples",
            format!("{k} transmitted streams but {users} combiners"),
        ));
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("samples", "symbol sequences are linearly dependent"))?;
    // coeffs[(l, u)] ≈ sqrt(P) w_u^H h_l
    let coeffs = chol.solve(&cross);
    let dof = (count - k) as f64;
    let per_user = (0..users)
        .map(|u| {
            let desired = coeffs[(u, u)].norm_sqr();
            let interference: f64 = (0..k).filter(|&l| l != u).map(|l| coeffs[(l, u)].norm_sqr()).sum();
            let explained = coeffs.column(u).dotc(&cross.column(u)).re;
            let noise = ((energy[u] - explained) / dof).max(0.0);
            let impairment = interference + noise;
            if impairment <= INFINITE_SINR_RATIO * desired {
                f64::INFINITY
            } else {
                desired / impairment
            }
        })
        .collect();
    Ok(LinkMetrics::from_sinr(per_user))
}

/// Single-user SNR of combiner `w` relative to maximum ratio combining:
/// `(|w^H h|^2 / ‖w‖^2) / ‖h‖^2`.
pub fn snr_ratio(h: &DVector<Complex64>, w: &DVector<Complex64>) -> Result<f64> {
    let h_energy = h.norm_squared();
    if h_energy == 0.0 {
        return Err(Error::invalid("h", "channel vector is zero"));
    }
    let w_energy = w.norm_squared();
    if w_energy == 0.0 {
        return Err(Error::ZeroCombiner { user: 0 });
    }
    if h.len() != w.len() {
        return Err(Error::invalid("w", "length differs from channel"));
    }
    Ok(w.dotc(h).norm_sqr() / w_energy / h_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{iid_matrix, simulate_transmission};
    use crate::combining::{
        identity_rf, mrc_combiner, quasi_coherent_switch_combiner, zf_baseband, PhaseBank,
    };

    fn ones(n: usize) -> ChannelMatrix {
        ChannelMatrix::from_columns(&[vec![Complex64::new(1.0, 0.0); n]]).unwrap()
    }

    #[test]
    fn coherent_single_user() {
        let h = ones(4);
        let m = sinr(&h, &mrc_combiner(&h), 1.0).unwrap();
        assert!((m.per_user_sinr[0] - 4.0).abs() < 1e-12);
        assert!((m.per_user_rate[0] - 5f64.log2()).abs() < 1e-12);
        assert_eq!(m.sum_rate, m.per_user_rate[0]);
    }

    #[test]
    fn scaling_combiner_leaves_sinr_unchanged() {
        let h = iid_matrix(10, 3, 2, 0);
        let set = mrc_combiner(&h);
        let scaled = CombinerSet::analog(set.rf() * Complex64::new(-2.5, 0.7));
        let a = sinr(&h, &set, 3.0).unwrap();
        let b = sinr(&h, &scaled, 3.0).unwrap();
        for (x, y) in a.per_user_sinr.iter().zip(&b.per_user_sinr) {
            assert!((x - y).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn zero_combiner_rejected() {
        let h = ones(3);
        let zero = CombinerSet::analog(DMatrix::zeros(3, 1));
        assert!(matches!(sinr(&h, &zero, 1.0), Err(Error::ZeroCombiner { user: 0 })));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let h = iid_matrix(4, 2, 0, 0);
        let set = mrc_combiner(&iid_matrix(5, 2, 0, 0));
        assert!(sinr(&h, &set, 1.0).is_err());
    }

    #[test]
    fn zf_has_no_interference() {
        let h = iid_matrix(8, 2, 9, 1);
        let zf = zf_baseband(&h, &identity_rf(8), 1e10).unwrap();
        let m = sinr(&h, &zf, 1e12).unwrap();
        for u in 0..2 {
            let expect = 1e12 / zf.composite_vector(u).norm_squared();
            assert!((m.per_user_sinr[u] / expect - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ratio_bounds() {
        let h = DVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1)]);
        assert!((snr_ratio(&h, &h).unwrap() - 1.0).abs() < 1e-15);
        let w = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let r = snr_ratio(&h, &w).unwrap();
        assert!((0.0..=1.0).contains(&r));
        assert!(snr_ratio(&DVector::zeros(2), &w).is_err());
    }

    #[test]
    fn empirical_requires_enough_samples() {
        let h = iid_matrix(4, 1, 0, 0);
        let set = mrc_combiner(&h);
        let samples = simulate_transmission(&h, 1.0, 1.0, 50, 0).unwrap();
        assert!(matches!(
            empirical_sinr(samples, &set),
            Err(Error::InsufficientData { got: 50, .. })
        ));
    }

    #[test]
    fn empirical_noiseless_single_user_is_infinite() {
        let h = iid_matrix(6, 1, 1, 0);
        let set = mrc_combiner(&h);
        let samples = simulate_transmission(&h, 1.0, 1e-300, 500, 4).unwrap();
        let m = empirical_sinr(samples, &set).unwrap();
        assert_eq!(m.per_user_sinr[0], f64::INFINITY);
    }

    #[test]
    fn empirical_zero_power_is_near_zero() {
        let h = iid_matrix(6, 2, 1, 0);
        let set = mrc_combiner(&h);
        let samples = simulate_transmission(&h, 0.0, 1.0, 2000, 4).unwrap();
        let m = empirical_sinr(samples, &set).unwrap();
        assert!(m.per_user_sinr.iter().all(|&s| s < 0.01), "{:?}", m.per_user_sinr);
    }

    #[test]
    fn empirical_tracks_analytic() {
        let h = iid_matrix(32, 2, 17, 0);
        let bank = PhaseBank::new(4).unwrap();
        let (_, set) = quasi_coherent_switch_combiner(&h, &bank);
        let analytic = sinr(&h, &set, 10.0).unwrap();
        let samples = simulate_transmission(&h, 10.0, 1.0, 100_000, 5).unwrap();
        let emp = empirical_sinr(samples, &set).unwrap();
        for u in 0..2 {
            let rel = emp.per_user_sinr[u] / analytic.per_user_sinr[u] - 1.0;
            assert!(rel.abs() < 0.03, "user {u}: {rel}");
        }
    }
}
