//! RF combiner construction under the switch network constraints, plus the
//! fully-digital, phase-shifter and antenna-selection baselines.
//!
//! Sector and shifter indices are 0-based. Sector `q` covers the half-open
//! arc `[q·2π/N_Q, (q+1)·2π/N_Q)`. The bank holds `p_k = e^{-j k 2π/N_Q}`.
//! Combiner entries are applied conjugated (`y = w^H r`), so an antenna in
//! sector `q` is wired to the shifter whose conjugate rotates it by
//! `e^{-j q 2π/N_Q}` back into sector 0.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{entry_angle, ChannelMatrix};
use crate::error::{Error, Result};

/// Default evaluation budget of the exhaustive switch search.
pub const DEFAULT_SWITCH_SEARCH_BUDGET: f64 = 1e7;
/// Default number of subsets the antenna-selection search may visit.
pub const DEFAULT_SELECTION_BUDGET: f64 = 1e6;
/// Default condition-number limit for the zero-forcing stage.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e10;

/// The constant phase shifters shared by every RF chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBank {
    values: Vec<Complex64>,
    midpoints: Vec<f64>,
}

impl PhaseBank {
    pub fn new(n_quant: usize) -> Result<Self> {
        if n_quant == 0 {
            return Err(Error::invalid("n_quant_phases", "must be at least 1"));
        }
        let step = TAU / n_quant as f64;
        let values = (0..n_quant)
            .map(|k| Complex64::from_polar(1.0, -(k as f64) * step))
            .collect();
        let midpoints = (0..n_quant).map(|k| (k as f64 + 0.5) * step).collect();
        Ok(Self { values, midpoints })
    }

    pub fn n_quant(&self) -> usize {
        self.values.len()
    }

    /// Shifter values `p_k = e^{-j k 2π/N_Q}`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Sector centers `(2k+1)π/N_Q`.
    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn sector_width(&self) -> f64 {
        TAU / self.n_quant() as f64
    }

    /// Shifter an antenna in `sector` is switched to.
    pub fn shifter_for_sector(&self, sector: usize) -> usize {
        (self.n_quant() - sector) % self.n_quant()
    }

    /// Inverse of [`PhaseBank::shifter_for_sector`].
    pub fn sector_for_shifter(&self, shifter: usize) -> usize {
        (self.n_quant() - shifter) % self.n_quant()
    }

    /// Combiner entry realized for an antenna in `sector`.
    pub fn combiner_entry(&self, sector: usize) -> Complex64 {
        self.values[self.shifter_for_sector(sector)]
    }
}

/// Sector of `angle` (in `[0, 2π)`): `floor(angle / (2π/N_Q))`.
///
/// Identical to picking the nearest sector midpoint, with angles on a
/// boundary going to the upper sector.
pub fn assign_sector(angle: f64, bank: &PhaseBank) -> Result<usize> {
    if !(0.0..TAU).contains(&angle) {
        return Err(Error::invalid(
            "angle",
            format!("{angle} is outside [0, 2π)"),
        ));
    }
    Ok(sector_of(angle, bank))
}

fn sector_of(angle: f64, bank: &PhaseBank) -> usize {
    let q = (angle / bank.sector_width()).floor() as usize;
    q.min(bank.n_quant() - 1)
}

/// Per-user switch settings: the sector each antenna was sorted into.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwitchingMatrix {
    n_quant: usize,
    sectors: Vec<usize>,
}

impl SwitchingMatrix {
    pub fn new(n_quant: usize, sectors: Vec<usize>) -> Result<Self> {
        if n_quant == 0 {
            return Err(Error::invalid("n_quant_phases", "must be at least 1"));
        }
        if let Some(bad) = sectors.iter().find(|&&q| q >= n_quant) {
            return Err(Error::invalid(
                "sectors",
                format!("sector {bad} out of range for {n_quant} phases"),
            ));
        }
        Ok(Self { n_quant, sectors })
    }

    pub fn sectors(&self) -> &[usize] {
        &self.sectors
    }

    pub fn n_antennas(&self) -> usize {
        self.sectors.len()
    }

    /// The partition sets: antennas grouped by sector.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.n_quant];
        for (n, &q) in self.sectors.iter().enumerate() {
            sets[q].push(n);
        }
        sets
    }

    /// N×N_Q one-hot switch matrix `S` with `w = S p`.
    pub fn dense(&self, bank: &PhaseBank) -> DMatrix<u8> {
        let mut s = DMatrix::zeros(self.sectors.len(), self.n_quant);
        for (n, &q) in self.sectors.iter().enumerate() {
            s[(n, bank.shifter_for_sector(q))] = 1;
        }
        s
    }

    /// The realized RF combining vector.
    pub fn combiner(&self, bank: &PhaseBank) -> DVector<Complex64> {
        DVector::from_iterator(
            self.sectors.len(),
            self.sectors.iter().map(|&q| bank.combiner_entry(q)),
        )
    }

    /// Recovers the switch settings from a combining vector, failing if any
    /// entry is not one of the bank's shifter values.
    pub fn from_combiner(w: &[Complex64], bank: &PhaseBank) -> Result<Self> {
        const TOL: f64 = 1e-9;
        let sectors = w
            .iter()
            .enumerate()
            .map(|(n, z)| {
                bank.values()
                    .iter()
                    .position(|p| (p - z).norm() < TOL)
                    .map(|k| bank.sector_for_shifter(k))
                    .ok_or_else(|| {
                        Error::Infeasible(format!(
                            "entry {n} ({z}) is not a shifter value"
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bank.n_quant(), sectors)
    }
}

/// Per-user composite combiners, optionally split into RF and baseband parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSet {
    rf: DMatrix<Complex64>,
    baseband: Option<DMatrix<Complex64>>,
    composite: DMatrix<Complex64>,
}

impl CombinerSet {
    /// Purely analog combining: one RF vector per user.
    pub fn analog(rf: DMatrix<Complex64>) -> Self {
        Self {
            composite: rf.clone(),
            rf,
            baseband: None,
        }
    }

    /// RF matrix (N×K) followed by a K×U baseband matrix.
    pub fn with_baseband(rf: DMatrix<Complex64>, baseband: DMatrix<Complex64>) -> Result<Self> {
        if rf.ncols() != baseband.nrows() {
            return Err(Error::invalid(
                "baseband",
                format!(
                    "{} RF outputs but baseband expects {}",
                    rf.ncols(),
                    baseband.nrows()
                ),
            ));
        }
        let composite = &rf * &baseband;
        Ok(Self {
            rf,
            baseband: Some(baseband),
            composite,
        })
    }

    pub fn rf(&self) -> &DMatrix<Complex64> {
        &self.rf
    }

    pub fn baseband(&self) -> Option<&DMatrix<Complex64>> {
        self.baseband.as_ref()
    }

    /// N×U matrix of composite vectors; column `u` combines user `u`.
    pub fn composite(&self) -> &DMatrix<Complex64> {
        &self.composite
    }

    pub fn composite_vector(&self, user: usize) -> DVector<Complex64> {
        self.composite.column(user).into_owned()
    }

    pub fn n_users(&self) -> usize {
        self.composite.ncols()
    }

    pub fn n_antennas(&self) -> usize {
        self.composite.nrows()
    }
}

/// Checks that every RF vector of `set` is realizable by the switch network
/// and returns the per-vector switch settings.
pub fn check_switch_feasible(set: &CombinerSet, bank: &PhaseBank) -> Result<Vec<SwitchingMatrix>> {
    set.rf()
        .column_iter()
        .map(|col| {
            let w: Vec<Complex64> = col.iter().copied().collect();
            SwitchingMatrix::from_combiner(&w, bank)
        })
        .collect()
}

/// Quasi-coherent switch combining: every antenna is wired to the shifter
/// that rotates its channel entry into the first sector.
pub fn quasi_coherent_switch_combiner(
    channel: &ChannelMatrix,
    bank: &PhaseBank,
) -> (Vec<SwitchingMatrix>, CombinerSet) {
    let n = channel.n_antennas();
    let switching: Vec<SwitchingMatrix> = (0..channel.n_users())
        .map(|u| SwitchingMatrix {
            n_quant: bank.n_quant(),
            sectors: (0..n)
                .map(|a| sector_of(channel.angle(a, u), bank))
                .collect(),
        })
        .collect();
    let rf = DMatrix::from_fn(n, channel.n_users(), |a, u| {
        bank.combiner_entry(switching[u].sectors[a])
    });
    (switching, CombinerSet::analog(rf))
}

/// Outcome of the exhaustive switch search.
#[derive(Debug, Clone)]
pub struct ExhaustiveSwitchResult {
    pub switching: Vec<SwitchingMatrix>,
    pub combiner: CombinerSet,
    pub sum_rate: f64,
}

fn switch_search_size(n_quant: usize, digits: usize, budget: f64) -> Result<f64> {
    let required = (n_quant as f64).powi(digits as i32);
    if required > budget {
        return Err(Error::SearchTooLarge { required, budget });
    }
    Ok(required)
}

/// Jointly searches every switch setting of every user for the maximum sum
/// rate. Ties go to the lexicographically smallest sector vector (user 0's
/// antennas first).
pub fn exhaustive_switch_combiner(
    channel: &ChannelMatrix,
    bank: &PhaseBank,
    snr: f64,
    budget: f64,
) -> Result<ExhaustiveSwitchResult> {
    let n = channel.n_antennas();
    let users = channel.n_users();
    let nq = bank.n_quant();
    switch_search_size(nq, n * users, budget)?;

    let h = channel.matrix();
    // conj of the combiner entry for each sector
    let rot: Vec<Complex64> = (0..nq).map(|q| bank.combiner_entry(q).conj()).collect();
    let mut digits = vec![0usize; n * users];
    // gains[u * users + l] = w_u^H h_l
    let mut gains = vec![Complex64::new(0.0, 0.0); users * users];
    let refresh = |digits: &[usize], gains: &mut [Complex64]| {
        for u in 0..users {
            for l in 0..users {
                gains[u * users + l] = (0..n).map(|a| rot[digits[u * n + a]] * h[(a, l)]).sum();
            }
        }
    };
    refresh(&digits, &mut gains);

    let noise = n as f64;
    let score = |gains: &[Complex64]| -> f64 {
        (0..users)
            .map(|u| {
                let row = &gains[u * users..(u + 1) * users];
                let desired = row[u].norm_sqr();
                let interference: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(l, _)| l != u)
                    .map(|(_, g)| g.norm_sqr())
                    .sum();
                (snr * desired / (snr * interference + noise)).ln_1p()
            })
            .sum()
    };

    let mut best_score = score(&gains);
    let mut best = digits.clone();
    let mut steps: u64 = 0;
    'search: loop {
        // odometer step, last antenna of the last user fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                break 'search;
            }
            pos -= 1;
            let old = digits[pos];
            let new = (old + 1) % nq;
            digits[pos] = new;
            let (u, a) = (pos / n, pos % n);
            let delta = rot[new] - rot[old];
            for l in 0..users {
                gains[u * users + l] += delta * h[(a, l)];
            }
            if new != 0 {
                break;
            }
        }
        steps += 1;
        if steps % 65_536 == 0 {
            refresh(&digits, &mut gains);
        }
        let s = score(&gains);
        if s > best_score + 1e-12 * best_score.abs().max(1e-300) {
            best_score = s;
            best.copy_from_slice(&digits);
        }
    }

    let switching: Vec<SwitchingMatrix> = best
        .chunks(n)
        .map(|c| SwitchingMatrix {
            n_quant: nq,
            sectors: c.to_vec(),
        })
        .collect();
    let rf = DMatrix::from_fn(n, users, |a, u| bank.combiner_entry(switching[u].sectors[a]));
    let combiner = CombinerSet::analog(rf);
    let sum_rate = crate::metrics::sinr(channel, &combiner, snr)?.sum_rate;
    Ok(ExhaustiveSwitchResult {
        switching,
        combiner,
        sum_rate,
    })
}

/// Single-user fast path: maximizes `|w^H h|^2` over all switch settings.
/// Returns the settings and the achieved `|w^H h|^2`.
pub fn exhaustive_switch_single_user(
    h: &[Complex64],
    bank: &PhaseBank,
    budget: f64,
) -> Result<(SwitchingMatrix, f64)> {
    let nq = bank.n_quant();
    switch_search_size(nq, h.len(), budget)?;
    let rot: Vec<Complex64> = (0..nq).map(|q| bank.combiner_entry(q).conj()).collect();
    let mut digits = vec![0usize; h.len()];
    let mut gain: Complex64 = h.iter().map(|x| rot[0] * x).sum();
    let mut best_val = gain.norm_sqr();
    let mut best = digits.clone();
    let mut steps: u64 = 0;
    'search: loop {
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                break 'search;
            }
            pos -= 1;
            let old = digits[pos];
            let new = (old + 1) % nq;
            digits[pos] = new;
            gain += (rot[new] - rot[old]) * h[pos];
            if new != 0 {
                break;
            }
        }
        steps += 1;
        if steps % 65_536 == 0 {
            gain = digits.iter().zip(h).map(|(&q, x)| rot[q] * x).sum();
        }
        let v = gain.norm_sqr();
        if v > best_val * (1.0 + 1e-12) {
            best_val = v;
            best.copy_from_slice(&digits);
        }
    }
    let best_gain: Complex64 = best.iter().zip(h).map(|(&q, x)| rot[q] * x).sum();
    Ok((
        SwitchingMatrix {
            n_quant: nq,
            sectors: best,
        },
        best_gain.norm_sqr(),
    ))
}

/// Fully-digital matched filter, `w_u = h_u`.
pub fn mrc_combiner(channel: &ChannelMatrix) -> CombinerSet {
    CombinerSet::analog(channel.matrix().clone())
}

/// Identity RF stage; feeding it to [`zf_baseband`] gives fully-digital ZF.
pub fn identity_rf(n_antennas: usize) -> CombinerSet {
    CombinerSet::analog(DMatrix::identity(n_antennas, n_antennas))
}

/// Zero-forcing on the effective channel `G = W_RF^H H`.
///
/// The baseband matrix is `F = G (G^H G)^{-1}`, evaluated through the SVD of
/// `G`, so that `F^H G = I`.
pub fn zf_baseband(
    channel: &ChannelMatrix,
    rf: &CombinerSet,
    condition_limit: f64,
) -> Result<CombinerSet> {
    let w_rf = rf.rf();
    if w_rf.nrows() != channel.n_antennas() {
        return Err(Error::invalid(
            "rf",
            format!(
                "RF stage has {} rows, channel has {} antennas",
                w_rf.nrows(),
                channel.n_antennas()
            ),
        ));
    }
    if w_rf.ncols() < channel.n_users() {
        return Err(Error::invalid(
            "rf",
            "fewer RF outputs than users; zero forcing is impossible",
        ));
    }
    let g = w_rf.adjoint() * channel.matrix();
    let svd = g.svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let min = sv.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= condition_limit) {
        return Err(Error::RankDeficient {
            condition,
            threshold: condition_limit,
        });
    }
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let inv_sigma = DMatrix::from_diagonal(&sv.map(|s| Complex64::from(1.0 / s)));
    let f = u * inv_sigma * v_t;
    CombinerSet::with_baseband(w_rf.clone(), f)
}

/// Infinite-resolution phase shifters (equal-gain combining):
/// `w_{u,n} = e^{j θ_{u,n}}`.
pub fn phase_shifter_combiner(channel: &ChannelMatrix) -> CombinerSet {
    CombinerSet::analog(channel.matrix().map(|h| {
        if h.re == 0.0 && h.im == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, entry_angle(h))
        }
    }))
}

/// Per-subset combining used by antenna selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SelectionMode {
    /// Matched filter on the selected antennas.
    Mf,
    /// Zero forcing on the selected square subchannel.
    Zf,
}

/// Best antenna subset for one mode and SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetChoice {
    pub subset: Vec<usize>,
    pub sum_rate: f64,
}

/// Result of [`antenna_selection_combiner`].
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub subset: Vec<usize>,
    pub combiner: CombinerSet,
    pub sum_rate: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Scratch space for per-subset statistics.
struct SubsetStats {
    users: usize,
    gram: Vec<Complex64>,
    chol: Vec<Complex64>,
    inv_l: Vec<Complex64>,
    /// `[G^{-1}]_{uu}` for ZF.
    zf_inv_diag: Vec<f64>,
    /// `Σ_{l≠u} |G_{ul}|^2` for MF.
    mf_interference: Vec<f64>,
}

impl SubsetStats {
    fn new(users: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            users,
            gram: vec![z; users * users],
            chol: vec![z; users * users],
            inv_l: vec![z; users * users],
            zf_inv_diag: vec![0.0; users],
            mf_interference: vec![0.0; users],
        }
    }

    /// Fills the Gram matrix of the rows `subset` of `h`, the MF interference
    /// sums and, when `need_zf`, the diagonal of the inverse Gram. Returns
    /// false when the subchannel is numerically singular.
    fn load(&mut self, h: &DMatrix<Complex64>, subset: &[usize], need_zf: bool) -> bool {
        let k = self.users;
        for i in 0..k {
            for j in i..k {
                let v: Complex64 = subset.iter().map(|&a| h[(a, i)].conj() * h[(a, j)]).sum();
                self.gram[i * k + j] = v;
                self.gram[j * k + i] = v.conj();
            }
        }
        for u in 0..k {
            self.mf_interference[u] = (0..k)
                .filter(|&l| l != u)
                .map(|l| self.gram[u * k + l].norm_sqr())
                .sum();
        }
        if !need_zf {
            return true;
        }
        // Cholesky G = L L^H
        let max_diag = (0..k).map(|i| self.gram[i * k + i].re).fold(0.0, f64::max);
        let z = Complex64::new(0.0, 0.0);
        self.chol.fill(z);
        for j in 0..k {
            let mut d = self.gram[j * k + j].re;
            for p in 0..j {
                d -= self.chol[j * k + p].norm_sqr();
            }
            // pivot ratio below 1e-20 means cond(H_S) beyond ~1e10
            if !(d > 1e-20 * max_diag) {
                return false;
            }
            let ljj = d.sqrt();
            self.chol[j * k + j] = Complex64::from(ljj);
            for i in j + 1..k {
                let mut s = self.gram[i * k + j];
                for p in 0..j {
                    s -= self.chol[i * k + p] * self.chol[j * k + p].conj();
                }
                self.chol[i * k + j] = s / ljj;
            }
        }
        // L^{-1} by forward substitution, column by column
        self.inv_l.fill(z);
        for c in 0..k {
            for i in c..k {
                let mut s = if i == c { Complex64::new(1.0, 0.0) } else { z };
                for p in c..i {
                    s -= self.chol[i * k + p] * self.inv_l[p * k + c];
                }
                self.inv_l[i * k + c] = s / self.chol[i * k + i];
            }
        }
        // G^{-1} = L^{-H} L^{-1}
        for u in 0..k {
            self.zf_inv_diag[u] = (u..k).map(|i| self.inv_l[i * k + u].norm_sqr()).sum();
        }
        true
    }

    /// `Π_u (1 + SINR_u)`; the sum rate is its base-2 logarithm.
    fn rate_product(&self, mode: SelectionMode, snr: f64) -> f64 {
        let k = self.users;
        (0..k)
            .map(|u| {
                let sinr = match mode {
                    SelectionMode::Mf => {
                        let g = self.gram[u * k + u].re;
                        if g == 0.0 {
                            0.0
                        } else {
                            snr * g * g / (snr * self.mf_interference[u] + g)
                        }
                    }
                    SelectionMode::Zf => snr / self.zf_inv_diag[u],
                };
                1.0 + sinr
            })
            .product()
    }
}

/// Visits every U-subset of antennas once and returns the best subset for
/// each `(mode, snr)` pair, indexed `[mode][snr]`. Ties keep the
/// lexicographically smallest subset. Subsets whose square subchannel is
/// numerically singular are skipped for ZF.
pub fn antenna_selection_search(
    channel: &ChannelMatrix,
    snrs: &[f64],
    modes: &[SelectionMode],
    budget: f64,
) -> Result<Vec<Vec<SubsetChoice>>> {
    let n = channel.n_antennas();
    let users = channel.n_users();
    let required = binomial(n, users);
    if required > budget {
        return Err(Error::SearchTooLarge { required, budget });
    }
    let h = channel.matrix();
    let need_zf = modes.contains(&SelectionMode::Zf);
    let mut stats = SubsetStats::new(users);
    let mut best: Vec<Vec<(f64, Option<Vec<usize>>)>> =
        vec![vec![(f64::NEG_INFINITY, None); snrs.len()]; modes.len()];
    let mut subset: Vec<usize> = (0..users).collect();
    loop {
        let zf_ok = stats.load(h, &subset, need_zf);
        for (m, &mode) in modes.iter().enumerate() {
            if mode == SelectionMode::Zf && !zf_ok {
                continue;
            }
            for (s, &snr) in snrs.iter().enumerate() {
                let p = stats.rate_product(mode, snr);
                let slot = &mut best[m][s];
                if p > slot.0 {
                    slot.0 = p;
                    match &mut slot.1 {
                        Some(v) => v.copy_from_slice(&subset),
                        None => slot.1 = Some(subset.clone()),
                    }
                }
            }
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    best.into_iter()
        .map(|per_snr| {
            per_snr
                .into_iter()
                .map(|(p, s)| match s {
                    Some(subset) => Ok(SubsetChoice {
                        subset,
                        sum_rate: p.log2(),
                    }),
                    None => Err(Error::RankDeficient {
                        condition: f64::INFINITY,
                        threshold: DEFAULT_CONDITION_LIMIT,
                    }),
                })
                .collect()
        })
        .collect()
}

/// Selection matrix whose columns pick the antennas in `subset`.
pub fn selection_rf(n_antennas: usize, subset: &[usize]) -> DMatrix<Complex64> {
    let mut s = DMatrix::zeros(n_antennas, subset.len());
    for (i, &a) in subset.iter().enumerate() {
        s[(a, i)] = Complex64::new(1.0, 0.0);
    }
    s
}

/// Exhaustive antenna selection: the best U antennas for the sum rate under
/// MF or ZF combining on the selected subchannel.
pub fn antenna_selection_combiner(
    channel: &ChannelMatrix,
    snr: f64,
    mode: SelectionMode,
    budget: f64,
) -> Result<SelectionResult> {
    let choice = antenna_selection_search(channel, &[snr], &[mode], budget)?
        .remove(0)
        .remove(0);
    let rf = selection_rf(channel.n_antennas(), &choice.subset);
    let combiner = match mode {
        SelectionMode::Mf => {
            let sub = rf.adjoint() * channel.matrix();
            CombinerSet::with_baseband(rf, sub)?
        }
        SelectionMode::Zf => zf_baseband(channel, &CombinerSet::analog(rf), DEFAULT_CONDITION_LIMIT)?,
    };
    Ok(SelectionResult {
        subset: choice.subset,
        combiner,
        sum_rate: choice.sum_rate,
    })
}
