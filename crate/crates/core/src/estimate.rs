//! Reconstructing the transfer matrix from heralded heterodyne moments.
//!
//! Column `i` of `L` is read off from Alice's outcomes in the runs where Bob
//! saw nothing in output mode `i`. Sums are kept in a fixed number of blocks
//! so that jackknife error bars come for free and accumulators merge exactly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen_desc, CMatrix, C64};
use crate::network::{loss_measure, MatrixFile};
use crate::simulate::{RunKind, RunRecord};
use crate::squeezing::{ConditionalGaussian, SqueezeParam};

pub const MIN_CONDITIONED_RUNS: u64 = 100;
pub const DIAGONAL_FLOOR: f64 = 0.05;
pub const JACKKNIFE_BLOCKS: usize = 20;
/// Top eigenvalue must beat the runner-up (or the noise floor) by this factor.
pub const EIGEN_SEPARATION: f64 = 3.0;

/// Running sums for one target mode over runs with no count there.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSums {
    pub target: usize,
    pub count: u64,
    /// `sum alpha_j alpha_i*`
    pub cross: Vec<C64>,
    /// `sum |alpha_j|^2`
    pub abs: Vec<f64>,
    /// `sum alpha_j alpha_k*`, if tracked.
    pub outer: Option<CMatrix>,
}

impl ColumnSums {
    fn new(modes: usize, target: usize, full: bool) -> Self {
        Self {
            target,
            count: 0,
            cross: vec![c(0.0, 0.0); modes],
            abs: vec![0.0; modes],
            outer: full.then(|| CMatrix::zeros(modes, modes)),
        }
    }

    fn add(&mut self, alpha: &[C64]) {
        let ai = alpha[self.target].conj();
        self.count += 1;
        for (j, a) in alpha.iter().enumerate() {
            self.cross[j] += a * ai;
            self.abs[j] += a.norm_sqr();
        }
        if let Some(o) = &mut self.outer {
            for (k, ak) in alpha.iter().enumerate() {
                let akc = ak.conj();
                for (j, aj) in alpha.iter().enumerate() {
                    o[(j, k)] += aj * akc;
                }
            }
        }
    }

    fn combine(&mut self, other: &Self, sign: f64) {
        if sign > 0.0 {
            self.count += other.count;
        } else {
            self.count -= other.count;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b * sign;
        }
        for (a, b) in self.abs.iter_mut().zip(&other.abs) {
            *a += b * sign;
        }
        if let (Some(a), Some(b)) = (&mut self.outer, &other.outer) {
            *a += b * c(sign, 0.0);
        }
    }

    pub fn moments(&self) -> ColumnMoments {
        let n = self.count as f64;
        ColumnMoments {
            target: self.target,
            count: Some(self.count),
            cross: self.cross.iter().map(|z| z / n).collect(),
            abs: self.abs.iter().map(|x| x / n).collect(),
            covariance: self.outer.as_ref().map(|o| o / c(n, 0.0)),
        }
    }
}

/// Running sums over runs with no counts on both modes of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSums {
    pub pair: (usize, usize),
    pub count: u64,
    pub abs: Vec<f64>,
    /// `sum |alpha_j|^2 |alpha_k|^2`
    pub abs_products: DMatrix<f64>,
}

impl PairSums {
    fn new(modes: usize, pair: (usize, usize)) -> Self {
        Self {
            pair,
            count: 0,
            abs: vec![0.0; modes],
            abs_products: DMatrix::zeros(modes, modes),
        }
    }

    fn add(&mut self, alpha: &[C64]) {
        self.count += 1;
        let a2: Vec<f64> = alpha.iter().map(|a| a.norm_sqr()).collect();
        for (j, x) in a2.iter().enumerate() {
            self.abs[j] += x;
            for (k, y) in a2.iter().enumerate() {
                self.abs_products[(j, k)] += x * y;
            }
        }
    }

    fn combine(&mut self, other: &Self, sign: f64) {
        if sign > 0.0 {
            self.count += other.count;
        } else {
            self.count -= other.count;
        }
        for (a, b) in self.abs.iter_mut().zip(&other.abs) {
            *a += b * sign;
        }
        self.abs_products += &other.abs_products * sign;
    }

    pub fn moments(&self) -> PairMoments {
        let n = self.count as f64;
        PairMoments {
            pair: self.pair,
            count: Some(self.count),
            abs: self.abs.iter().map(|x| x / n).collect(),
            abs_products: &self.abs_products / n,
        }
    }
}

/// Everything summed over one block of characterization runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSums {
    pub runs: u64,
    pub columns: Vec<ColumnSums>,
    pub pairs: Vec<PairSums>,
    /// `sum n_i` and `sum n_i^2` of Bob's counts.
    pub bob_counts: Vec<f64>,
    pub bob_counts_sq: Vec<f64>,
}

impl MomentSums {
    fn new(modes: usize, opts: &AccumulatorOptions) -> Self {
        Self {
            runs: 0,
            columns: (0..modes).map(|i| ColumnSums::new(modes, i, opts.full_covariance)).collect(),
            pairs: opts.pairs.iter().map(|&p| PairSums::new(modes, p)).collect(),
            bob_counts: vec![0.0; modes],
            bob_counts_sq: vec![0.0; modes],
        }
    }

    fn add(&mut self, alpha: &[C64], bob: &[u32]) {
        self.runs += 1;
        for (i, &n) in bob.iter().enumerate() {
            self.bob_counts[i] += n as f64;
            self.bob_counts_sq[i] += (n as f64).powi(2);
        }
        for col in &mut self.columns {
            if bob[col.target] == 0 {
                col.add(alpha);
            }
        }
        for p in &mut self.pairs {
            if bob[p.pair.0] == 0 && bob[p.pair.1] == 0 {
                p.add(alpha);
            }
        }
    }

    fn combine(&mut self, other: &Self, sign: f64) {
        if sign > 0.0 {
            self.runs += other.runs;
        } else {
            self.runs -= other.runs;
        }
        for (a, b) in self.columns.iter_mut().zip(&other.columns) {
            a.combine(b, sign);
        }
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            a.combine(b, sign);
        }
        for (a, b) in self.bob_counts.iter_mut().zip(&other.bob_counts) {
            *a += b * sign;
        }
        for (a, b) in self.bob_counts_sq.iter_mut().zip(&other.bob_counts_sq) {
            *a += b * sign;
        }
    }

    pub fn column_moments(&self) -> Vec<ColumnMoments> {
        self.columns.iter().map(ColumnSums::moments).collect()
    }

    pub fn pair_moments(&self) -> Vec<PairMoments> {
        self.pairs.iter().map(PairSums::moments).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulatorOptions {
    /// Track the full `M x M` covariance for every target (needed by the exact estimator).
    pub full_covariance: bool,
    /// Pairs `(r, i)` whose joint no-count fourth moments are tracked.
    pub pairs: Vec<(usize, usize)>,
    pub blocks: usize,
}

impl Default for AccumulatorOptions {
    fn default() -> Self {
        Self {
            full_covariance: true,
            pairs: Vec::new(),
            blocks: JACKKNIFE_BLOCKS,
        }
    }
}

/// Heralded moment sums for every target mode, split into jackknife blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    modes: usize,
    options: AccumulatorOptions,
    blocks: Vec<MomentSums>,
    next_block: usize,
    ignored_rbs: u64,
}

impl MomentAccumulator {
    pub fn new(modes: usize, options: AccumulatorOptions) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidDimension("zero modes".into()));
        }
        if options.blocks == 0 {
            return Err(Error::Config("need at least one block".into()));
        }
        if let Some(p) = options.pairs.iter().find(|p| p.0 >= modes || p.1 >= modes || p.0 == p.1) {
            return Err(Error::InvalidConditionSet(format!("pair {p:?}")));
        }
        Ok(Self {
            modes,
            blocks: (0..options.blocks).map(|_| MomentSums::new(modes, &options)).collect(),
            options,
            next_block: 0,
            ignored_rbs: 0,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn ignored_rbs(&self) -> u64 {
        self.ignored_rbs
    }

    pub fn characterization_runs(&self) -> u64 {
        self.blocks.iter().map(|b| b.runs).sum()
    }

    pub fn add_characterization(&mut self, alpha: &[C64], bob: &[u32]) -> Result<()> {
        if alpha.len() != self.modes {
            return Err(Error::LengthMismatch(alpha.len(), self.modes));
        }
        if bob.len() != self.modes {
            return Err(Error::LengthMismatch(bob.len(), self.modes));
        }
        self.blocks[self.next_block].add(alpha, bob);
        self.next_block = (self.next_block + 1) % self.blocks.len();
        Ok(())
    }

    /// Feed one run; RBS runs carry no heterodyne data and are only counted.
    pub fn accumulate(&mut self, run: &RunRecord) -> Result<()> {
        match run.kind {
            RunKind::Rbs => {
                self.ignored_rbs += 1;
                Ok(())
            }
            RunKind::Characterization => {
                if run.alice_re.len() != run.alice_im.len() {
                    return Err(Error::Format("alice_re and alice_im differ in length".into()));
                }
                let alpha: Vec<C64> = run.alice_amplitudes().collect();
                self.add_characterization(&alpha, &run.bob_counts)
            }
        }
    }

    /// Blockwise sum with another accumulator built with the same options.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.modes != self.modes || other.options != self.options {
            return Err(Error::Config("cannot merge accumulators with different layouts".into()));
        }
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.combine(b, 1.0);
        }
        self.ignored_rbs += other.ignored_rbs;
        Ok(())
    }

    pub fn total(&self) -> MomentSums {
        let mut t = self.blocks[0].clone();
        for b in &self.blocks[1..] {
            t.combine(b, 1.0);
        }
        t
    }

    /// Totals with each block left out in turn.
    pub fn leave_one_out(&self) -> Vec<MomentSums> {
        let total = self.total();
        self.blocks
            .iter()
            .map(|b| {
                let mut t = total.clone();
                t.combine(b, -1.0);
                t
            })
            .collect()
    }

    pub fn options(&self) -> &AccumulatorOptions {
        &self.options
    }
}

/// Heralded moments for one target mode; `count = None` marks exact values.
#[derive(Debug, Clone)]
pub struct ColumnMoments {
    pub target: usize,
    pub count: Option<u64>,
    /// `<alpha_j alpha_i*>`
    pub cross: Vec<C64>,
    /// `<|alpha_j|^2>`
    pub abs: Vec<f64>,
    pub covariance: Option<CMatrix>,
}

impl ColumnMoments {
    /// Exact moments from the analytic conditional law for a single target.
    pub fn exact(g: &ConditionalGaussian) -> Result<Self> {
        let [target] = g.condition_set[..] else {
            return Err(Error::InvalidConditionSet("expected a single target mode".into()));
        };
        let m = g.covariance.nrows();
        Ok(Self {
            target,
            count: None,
            cross: (0..m).map(|j| g.covariance[(j, target)]).collect(),
            abs: (0..m).map(|j| g.covariance[(j, j)].re).collect(),
            covariance: Some(g.covariance.clone()),
        })
    }

    /// With uniform random phases on each mode only the diagonal survives.
    pub fn exact_dephased(g: &ConditionalGaussian) -> Result<Self> {
        let mut m = Self::exact(g)?;
        for (j, z) in m.cross.iter_mut().enumerate() {
            if j != m.target {
                *z = c(0.0, 0.0);
            }
        }
        m.covariance = m.covariance.map(|cv| CMatrix::from_diagonal(&cv.diagonal()));
        Ok(m)
    }
}

/// Heralded fourth moments for a pair of no-count modes.
#[derive(Debug, Clone)]
pub struct PairMoments {
    pub pair: (usize, usize),
    pub count: Option<u64>,
    pub abs: Vec<f64>,
    pub abs_products: DMatrix<f64>,
}

impl PairMoments {
    /// `<|alpha_j|^2 |alpha_k|^2> = A_jj A_kk + |A_jk|^2` from the analytic law.
    pub fn exact(g: &ConditionalGaussian) -> Result<Self> {
        let [r, i] = g.condition_set[..] else {
            return Err(Error::InvalidConditionSet("expected two modes".into()));
        };
        let a = &g.covariance;
        let m = a.nrows();
        Ok(Self {
            pair: (r, i),
            count: None,
            abs: (0..m).map(|j| a[(j, j)].re).collect(),
            abs_products: DMatrix::from_fn(m, m, |j, k| a[(j, j)].re * a[(k, k)].re + a[(j, k)].norm_sqr()),
        })
    }

    /// `<|alpha_j|^2 |alpha_k|^2> - <|alpha_j|^2><|alpha_k|^2>`
    pub fn intensity_covariance(&self, j: usize, k: usize) -> f64 {
        self.abs_products[(j, k)] - self.abs[j] * self.abs[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FirstOrder,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "flag", content = "mode", rename_all = "snake_case")]
pub enum Flag {
    /// `|L_ii|` below the floor; off-diagonal entries divided by the floor instead.
    LowDiagonal(usize),
    /// Negative radicand for `|L_ii|^2` clamped to zero.
    ClampedRadicand(usize),
    /// Rank-one structure not resolved above the noise.
    Degenerate(usize),
    /// Diagonal entry too small to fix the column phase.
    PhaseUndefined(usize),
    /// Amplitude product too small to extract a phase.
    Unresolved(usize),
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub estimate: CMatrix,
    /// Entrywise `1 / (chi^2 sqrt(T_i))` scale, inflated where the diagonal is small.
    pub per_entry_sigma: DMatrix<f64>,
    pub jackknife_sigma: Option<DMatrix<f64>>,
    pub conditioned_counts: Vec<u64>,
    pub method: Method,
    pub flags: Vec<Flag>,
}

impl ReconstructionResult {
    pub fn average_loss(&self) -> f64 {
        loss_measure(&self.estimate)
    }
}

fn require_squeezing(sq: SqueezeParam) -> Result<f64> {
    if sq.chi_sq() <= 0.0 {
        return Err(Error::InsufficientData("chi^2 = 0 carries no information about L".into()));
    }
    Ok(sq.chi_sq())
}

fn check_count(m: &ColumnMoments) -> Result<()> {
    if let Some(t) = m.count {
        if t < MIN_CONDITIONED_RUNS {
            return Err(Error::InsufficientData(format!(
                "only {t} runs with no count in mode {} (need {MIN_CONDITIONED_RUNS})",
                m.target
            )));
        }
    }
    Ok(())
}

fn base_sigma(x: f64, count: Option<u64>) -> f64 {
    count.map_or(0.0, |t| 1.0 / (x * (t as f64).sqrt()))
}

fn assemble(modes: usize, columns: &[ColumnMoments]) -> Result<()> {
    if columns.len() != modes {
        return Err(Error::LengthMismatch(columns.len(), modes));
    }
    for (i, m) in columns.iter().enumerate() {
        if m.target != i || m.cross.len() != modes || m.abs.len() != modes {
            return Err(Error::Format(format!("moments for column {i} are malformed")));
        }
    }
    Ok(())
}

/// Leading-order inversion:
/// `L_ii = sqrt(1 - (<|alpha_i|^2>_i - 1)/chi^2)`, `L_ji = -<alpha_j alpha_i*>_i / (chi^2 L_ii)`.
pub fn reconstruct_first_order(sq: SqueezeParam, columns: &[ColumnMoments]) -> Result<ReconstructionResult> {
    let x = require_squeezing(sq)?;
    let m = columns.len();
    assemble(m, columns)?;
    let mut est = CMatrix::zeros(m, m);
    let mut sigma = DMatrix::zeros(m, m);
    let mut flags = Vec::new();
    for col in columns {
        check_count(col)?;
        let i = col.target;
        let mut radicand = 1.0 - (col.cross[i].re - 1.0) / x;
        if radicand < 0.0 {
            flags.push(Flag::ClampedRadicand(i));
            radicand = 0.0;
        }
        let lii = radicand.sqrt();
        let s0 = base_sigma(x, col.count);
        let div = if lii < DIAGONAL_FLOOR {
            flags.push(Flag::LowDiagonal(i));
            DIAGONAL_FLOOR
        } else {
            lii
        };
        for j in 0..m {
            if j == i {
                est[(i, i)] = c(lii, 0.0);
                sigma[(i, i)] = s0;
            } else {
                est[(j, i)] = -col.cross[j] / (x * div);
                sigma[(j, i)] = s0 / div;
            }
        }
    }
    Ok(ReconstructionResult {
        estimate: est,
        per_entry_sigma: sigma,
        jackknife_sigma: None,
        conditioned_counts: columns.iter().map(|c| c.count.unwrap_or(0)).collect(),
        method: Method::FirstOrder,
        flags,
    })
}

/// Exact inversion: `(C_i^-1 - (1 - chi^2) I) / chi^2 = L_i L_i†`, whose top
/// eigenpair gives the column up to a phase fixed by `L_ii >= 0`.
pub fn reconstruct_exact(sq: SqueezeParam, columns: &[ColumnMoments]) -> Result<ReconstructionResult> {
    let x = require_squeezing(sq)?;
    let m = columns.len();
    assemble(m, columns)?;
    let mut est = CMatrix::zeros(m, m);
    let mut sigma = DMatrix::zeros(m, m);
    let mut flags = Vec::new();
    for col in columns {
        check_count(col)?;
        let i = col.target;
        let cov = col
            .covariance
            .as_ref()
            .ok_or_else(|| Error::InsufficientData("exact method needs the full covariance".into()))?;
        let cov = (cov + cov.adjoint()) * c(0.5, 0.0);
        let prec = cov
            .try_inverse()
            .ok_or_else(|| Error::InsufficientData(format!("covariance for mode {i} is singular")))?;
        let d = (prec - CMatrix::identity(m, m) * c(1.0 - x, 0.0)) / c(x, 0.0);
        let (vals, vecs) = hermitian_eigen_desc(&d)?;
        let s0 = base_sigma(x, col.count);
        let runner_up = vals.get(1).map_or(0.0, |v| v.abs()).max(s0);
        if vals[0] < EIGEN_SEPARATION * runner_up || vals[0] <= 0.0 {
            flags.push(Flag::Degenerate(i));
        }
        let scale = vals[0].max(0.0).sqrt();
        let v = vecs.column(0);
        let phase = if v[i].norm() > 1e-12 {
            v[i].conj() / v[i].norm()
        } else {
            flags.push(Flag::PhaseUndefined(i));
            c(1.0, 0.0)
        };
        for j in 0..m {
            est[(j, i)] = v[j] * phase * scale;
        }
        est[(i, i)] = c(est[(i, i)].norm(), 0.0);
        // fixing L_ii real turns its phase noise into a rotation of the whole column
        let lii = est[(i, i)].re.max(s0);
        for j in 0..m {
            let gauge = if j == i { 0.0 } else { est[(j, i)].norm_sqr() / (2.0 * lii * lii) };
            sigma[(j, i)] = s0 * (1.0 + gauge).sqrt();
        }
    }
    Ok(ReconstructionResult {
        estimate: est,
        per_entry_sigma: sigma,
        jackknife_sigma: None,
        conditioned_counts: columns.iter().map(|c| c.count.unwrap_or(0)).collect(),
        method: Method::Exact,
        flags,
    })
}

pub fn reconstruct(sq: SqueezeParam, columns: &[ColumnMoments], method: Method) -> Result<ReconstructionResult> {
    match method {
        Method::FirstOrder => reconstruct_first_order(sq, columns),
        Method::Exact => reconstruct_exact(sq, columns),
    }
}

/// Entrywise jackknife spread of `f` over the leave-one-block-out totals.
/// Blocks where `f` fails are skipped; `None` if fewer than two remain.
pub fn jackknife<F>(acc: &MomentAccumulator, f: F) -> Option<Vec<f64>>
where
    F: Fn(&MomentSums) -> Result<Vec<C64>>,
{
    let samples: Vec<Vec<C64>> = acc.leave_one_out().iter().filter_map(|s| f(s).ok()).collect();
    let b = samples.len();
    if b < 2 {
        return None;
    }
    let n = samples[0].len();
    let mean: Vec<C64> = (0..n).map(|k| samples.iter().map(|s| s[k]).sum::<C64>() / b as f64).collect();
    Some(
        (0..n)
            .map(|k| {
                let ss: f64 = samples.iter().map(|s| (s[k] - mean[k]).norm_sqr()).sum();
                ((b as f64 - 1.0) / b as f64 * ss).sqrt()
            })
            .collect(),
    )
}

/// Reconstruct from accumulated runs, with jackknife error bars.
pub fn reconstruct_from(sq: SqueezeParam, acc: &MomentAccumulator, method: Method) -> Result<ReconstructionResult> {
    if acc.characterization_runs() == 0 {
        return Err(Error::InsufficientData("no characterization runs".into()));
    }
    if method == Method::Exact && !acc.options().full_covariance {
        return Err(Error::Config("exact method needs full covariance tracking".into()));
    }
    let mut result = reconstruct(sq, &acc.total().column_moments(), method)?;
    let m = acc.modes();
    result.jackknife_sigma = jackknife(acc, |s| {
        Ok(reconstruct(sq, &s.column_moments(), method)?.estimate.iter().copied().collect())
    })
    .map(|v| DMatrix::from_vec(m, m, v));
    Ok(result)
}

/// Per-mode `ell_i^2 = <n_i> / nbar` and the implied average loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeLosses {
    pub ell_sq: Vec<f64>,
    pub sigma: Vec<f64>,
    pub average_loss: f64,
    pub runs: u64,
}

/// Streaming sums of Bob's counts, for [`estimate_mode_losses`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountSums {
    pub runs: u64,
    pub sums: Vec<f64>,
    pub sq_sums: Vec<f64>,
}

impl CountSums {
    pub fn add(&mut self, n: &[u32]) -> Result<()> {
        if self.runs == 0 {
            self.sums = vec![0.0; n.len()];
            self.sq_sums = vec![0.0; n.len()];
        } else if n.len() != self.sums.len() {
            return Err(Error::LengthMismatch(n.len(), self.sums.len()));
        }
        for (k, &v) in n.iter().enumerate() {
            self.sums[k] += v as f64;
            self.sq_sums[k] += (v as f64).powi(2);
        }
        self.runs += 1;
        Ok(())
    }

    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.runs.max(1) as f64).collect()
    }

    pub fn mode_losses(&self, sq: SqueezeParam) -> Result<ModeLosses> {
        let nbar = sq.mean_photon();
        if nbar <= 0.0 {
            return Err(Error::InsufficientData("chi^2 = 0 produces no photons".into()));
        }
        if self.runs == 0 {
            return Err(Error::InsufficientData("no count records".into()));
        }
        Ok(losses_from_sums(nbar, self.runs, &self.sums, &self.sq_sums))
    }
}

pub fn estimate_mode_losses<'a, I>(sq: SqueezeParam, counts: I) -> Result<ModeLosses>
where
    I: IntoIterator<Item = &'a [u32]>,
{
    let mut sums = CountSums::default();
    for n in counts {
        sums.add(n)?;
    }
    sums.mode_losses(sq)
}

fn losses_from_sums(nbar: f64, runs: u64, sums: &[f64], sq_sums: &[f64]) -> ModeLosses {
    let t = runs as f64;
    let ell_sq: Vec<f64> = sums.iter().map(|s| s / t / nbar).collect();
    let sigma = sums
        .iter()
        .zip(sq_sums)
        .map(|(s, q)| {
            let mu = s / t;
            ((q / t - mu * mu).max(0.0) / t).sqrt() / nbar
        })
        .collect();
    let average_loss = 1.0 - ell_sq.iter().sum::<f64>() / ell_sq.len() as f64;
    ModeLosses {
        ell_sq,
        sigma,
        average_loss,
        runs,
    }
}

/// Mode losses from Bob's counts in the accumulated characterization runs.
pub fn mode_losses_from(sq: SqueezeParam, acc: &MomentAccumulator) -> Result<ModeLosses> {
    let nbar = sq.mean_photon();
    let t = acc.total();
    if t.runs == 0 || nbar <= 0.0 {
        return Err(Error::InsufficientData("no characterization runs".into()));
    }
    Ok(losses_from_sums(nbar, t.runs, &t.bob_counts, &t.bob_counts_sq))
}

/// Serialized reconstruction: the matrix file plus error bars and flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionReport {
    #[serde(flatten)]
    pub matrix: MatrixFile,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jackknife_sigma: Option<Vec<Vec<f64>>>,
    pub flags: Vec<Flag>,
    pub method: Method,
    pub conditioned_counts: Vec<u64>,
    pub average_loss: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl From<&ReconstructionResult> for ReconstructionReport {
    fn from(r: &ReconstructionResult) -> Self {
        Self {
            matrix: MatrixFile::from_matrix(&r.estimate),
            sigma: rows(&r.per_entry_sigma),
            jackknife_sigma: r.jackknife_sigma.as_ref().map(rows),
            flags: r.flags.clone(),
            method: r.method,
            conditioned_counts: r.conditioned_counts.clone(),
            average_loss: r.average_loss(),
        }
    }
}
