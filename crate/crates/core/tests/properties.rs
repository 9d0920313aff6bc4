//! Property tests for the combiner invariants.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use switchmimo::asymptotics::gamma_factor;
use switchmimo::channel::{iid_matrix, ChannelMatrix};
use switchmimo::combining::{
    antenna_selection_combiner, assign_sector, check_switch_feasible, exhaustive_switch_combiner,
    mrc_combiner, phase_shifter_combiner, quasi_coherent_switch_combiner, CombinerSet, PhaseBank,
    SelectionMode,
};
use switchmimo::metrics::{sinr, snr_ratio};

fn channel() -> impl Strategy<Value = ChannelMatrix> {
    (1usize..24, 1usize..4, any::<u64>()).prop_map(|(n, u, seed)| iid_matrix(n.max(u), u, seed, 0))
}

proptest! {
    #[test]
    fn switch_combiner_is_quasi_coherent(h in channel(), nq in 1usize..9) {
        let bank = PhaseBank::new(nq).unwrap();
        let (sw, set) = quasi_coherent_switch_combiner(&h, &bank);
        let n = h.n_antennas() as f64;
        for u in 0..h.n_users() {
            let w = set.composite_vector(u);
            prop_assert!((w.norm_squared() - n).abs() < 1e-9);
            for a in 0..h.n_antennas() {
                let rotated = w[a].conj() * h.entry(a, u);
                let phase = rotated.im.atan2(rotated.re).rem_euclid(TAU);
                // within the first sector, allowing rounding at its edges
                prop_assert!(phase < bank.sector_width() + 1e-9 || phase > TAU - 1e-9,
                    "phase {} width {}", phase, bank.sector_width());
            }
        }
        prop_assert_eq!(check_switch_feasible(&set, &bank).unwrap(), sw);
    }

    #[test]
    fn snr_ratio_is_a_fraction(h in channel(), nq in 1usize..9) {
        let bank = PhaseBank::new(nq).unwrap();
        let (_, set) = quasi_coherent_switch_combiner(&h, &bank);
        let eg = phase_shifter_combiner(&h);
        for u in 0..h.n_users() {
            let col = h.column(u).into_owned();
            for w in [set.composite_vector(u), eg.composite_vector(u)] {
                let r = snr_ratio(&col, &w).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
            }
            prop_assert!((snr_ratio(&col, &col).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sinr_is_scale_invariant(h in channel(), re in -3.0f64..3.0, im in -3.0f64..3.0, snr in 0.0f64..100.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let set = mrc_combiner(&h);
        let scaled = CombinerSet::analog(set.rf() * Complex64::new(re, im));
        let a = sinr(&h, &set, snr).unwrap();
        let b = sinr(&h, &scaled, snr).unwrap();
        for (x, y) in a.per_user_sinr.iter().zip(&b.per_user_sinr) {
            prop_assert!((x - y).abs() <= 1e-9 * x.max(1e-300));
        }
        for (s, r) in a.per_user_sinr.iter().zip(&a.per_user_rate) {
            prop_assert!(*s >= 0.0);
            prop_assert!((r - (1.0 + s).log2()).abs() < 1e-12);
        }
        prop_assert!((a.sum_rate - a.per_user_rate.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn oracle_dominates_greedy(n in 1usize..7, u in 1usize..3, nq in 2usize..4, seed in any::<u64>(), snr in 0.1f64..100.0) {
        let digits = n * u;
        prop_assume!((nq as f64).powi(digits as i32) <= 1e5);
        let h = iid_matrix(n.max(u), u, seed, 1);
        let bank = PhaseBank::new(nq).unwrap();
        let oracle = exhaustive_switch_combiner(&h, &bank, snr, 1e7).unwrap();
        let (_, greedy) = quasi_coherent_switch_combiner(&h, &bank);
        let g = sinr(&h, &greedy, snr).unwrap().sum_rate;
        prop_assert!(oracle.sum_rate >= g - 1e-12);
        check_switch_feasible(&oracle.combiner, &bank).unwrap();
    }

    #[test]
    fn mrc_and_selection_bounds(n in 1usize..10, seed in any::<u64>(), snr in 0.1f64..100.0) {
        let h = iid_matrix(n, 1, seed, 2);
        let mrc = sinr(&h, &mrc_combiner(&h), snr).unwrap().per_user_sinr[0];
        let eg = sinr(&h, &phase_shifter_combiner(&h), snr).unwrap().per_user_sinr[0];
        let sel = antenna_selection_combiner(&h, snr, SelectionMode::Mf, 1e6).unwrap();
        let sel_sinr = sinr(&h, &sel.combiner, snr).unwrap().per_user_sinr[0];
        prop_assert!(eg <= mrc * (1.0 + 1e-12));
        prop_assert!(sel_sinr <= mrc * (1.0 + 1e-12));
        let random = CombinerSet::analog(iid_matrix(n, 1, seed ^ 1, 3).matrix().clone());
        prop_assert!(sinr(&h, &random, snr).unwrap().per_user_sinr[0] <= mrc * (1.0 + 1e-12));
    }

    #[test]
    fn sector_matches_floor_rule(angle in 0.0f64..TAU, nq in 1usize..33) {
        prop_assume!(angle < TAU);
        let bank = PhaseBank::new(nq).unwrap();
        let q = assign_sector(angle, &bank).unwrap();
        prop_assert!(q < nq);
        let lo = q as f64 * bank.sector_width();
        prop_assert!(angle >= lo - 1e-12 && angle < lo + bank.sector_width() + 1e-12);
    }

    #[test]
    fn zero_entries_go_to_first_sector(n in 1usize..8, nq in 1usize..6) {
        let h = ChannelMatrix::from_matrix(DMatrix::zeros(n, 1)).unwrap();
        let bank = PhaseBank::new(nq).unwrap();
        let (sw, _) = quasi_coherent_switch_combiner(&h, &bank);
        prop_assert!(sw[0].sectors().iter().all(|&q| q == 0));
    }
}

#[test]
fn gamma_monotone_in_nq() {
    let g: Vec<f64> = (1..200).map(|q| gamma_factor(q).unwrap()).collect();
    assert!(g.windows(2).all(|w| w[0] <= w[1]));
}
