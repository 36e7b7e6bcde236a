//! Brute-force Fock-space reference for small networks.
//!
//! Photon-number amplitudes are permanents of repeated-row/column submatrices.
//! Loss is handled by sending photons through the unitary dilation and summing
//! over everything that lands in the auxiliary modes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ln_factorial, CMatrix, C64};
use crate::network::{unitary_dilation, TransferMatrix};
use crate::permanent::{ryser, MAX_PERMANENT_DIM};
use crate::squeezing::{count_record_probability, ln_thermal_count_probability, SqueezeParam};

pub const ORACLE_MAX_MODES: usize = 8;
pub const ORACLE_MAX_PHOTONS: u32 = 8;

pub type Counts = Vec<u32>;

/// All count vectors over `modes` modes with exactly `total` photons,
/// in reverse lexicographic order (`[total, 0, ..]` first).
pub fn sector_states(modes: usize, total: u32) -> Vec<Counts> {
    fn rec(modes: usize, left: u32, prefix: &mut Counts, out: &mut Vec<Counts>) {
        if prefix.len() + 1 == modes {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(modes, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modes == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(modes, total, &mut Vec::with_capacity(modes), &mut out);
    out
}

/// Count vectors with total photon number at most `max_total`, ordered by total.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    max_total: u32,
    states: Vec<Counts>,
    index: HashMap<Counts, usize>,
}

impl FockBasis {
    pub fn new(modes: usize, max_total: u32) -> Self {
        let states: Vec<Counts> = (0..=max_total).flat_map(|n| sector_states(modes, n)).collect();
        let index = states.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        Self {
            modes,
            max_total,
            states,
            index,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn max_total(&self) -> u32 {
        self.max_total
    }

    pub fn states(&self) -> &[Counts] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, n: &[u32]) -> Option<usize> {
        self.index.get(n).copied()
    }
}

/// A probability table over count vectors plus the mass that was not enumerated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockDistribution {
    #[serde(rename = "basis")]
    outcomes: Vec<Counts>,
    probs: Vec<f64>,
    #[serde(rename = "residual")]
    residual_mass: f64,
    #[serde(skip)]
    index: HashMap<Counts, usize>,
}

impl FockDistribution {
    pub fn new(outcomes: Vec<Counts>, probs: Vec<f64>, residual_mass: f64) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::LengthMismatch(outcomes.len(), probs.len()));
        }
        let index = outcomes.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        Ok(Self {
            outcomes,
            probs,
            residual_mass,
            index,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FockDistribution = serde_json::from_str(text)?;
        Self::new(raw.outcomes, raw.probs, raw.residual_mass)
    }

    pub fn outcomes(&self) -> &[Counts] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn residual_mass(&self) -> f64 {
        self.residual_mass
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn prob(&self, n: &[u32]) -> f64 {
        self.index.get(n).map_or(0.0, |&k| self.probs[k])
    }

    pub fn enumerated_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal over the count-vector coordinates `range`.
    pub fn marginal(&self, range: std::ops::Range<usize>) -> Result<FockDistribution> {
        let mut order = Vec::new();
        let mut acc: HashMap<Counts, f64> = HashMap::new();
        for (n, &p) in self.outcomes.iter().zip(&self.probs) {
            let key = n[range.clone()].to_vec();
            let slot = acc.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                0.0
            });
            *slot += p;
        }
        let probs = order.iter().map(|k| acc[k]).collect();
        FockDistribution::new(order, probs, self.residual_mass)
    }

    /// Both tables on the union of their outcomes, in a common order.
    pub fn aligned(&self, other: &FockDistribution) -> (Vec<f64>, Vec<f64>) {
        let mut keys: Vec<&Counts> = self.outcomes.iter().collect();
        keys.extend(other.outcomes.iter().filter(|n| !self.index.contains_key(*n)));
        (
            keys.iter().map(|n| self.prob(n)).collect(),
            keys.iter().map(|n| other.prob(n)).collect(),
        )
    }

    /// Inverse-CDF draw with `u` uniform on `[0, 1)`; `None` lands in the residual mass.
    pub fn sample_with(&self, u: f64) -> Option<&Counts> {
        let target = u * (self.enumerated_mass() + self.residual_mass);
        let mut acc = 0.0;
        for (n, &p) in self.outcomes.iter().zip(&self.probs) {
            acc += p;
            if target < acc {
                return Some(n);
            }
        }
        if self.residual_mass > 0.0 {
            None
        } else {
            // rounding left target just past the last cell
            self.outcomes.iter().zip(&self.probs).rev().find(|(_, &p)| p > 0.0).map(|(n, _)| n)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn repeated_modes(n: &[u32]) -> Vec<usize> {
    n.iter()
        .enumerate()
        .flat_map(|(j, &k)| std::iter::repeat_n(j, k as usize))
        .collect()
}

fn ln_fact_product(n: &[u32]) -> f64 {
    n.iter().map(|&k| ln_factorial(k as u64)).sum()
}

/// `<n_out| U |n_in>` for the linear map that sends input mode `j` to
/// `sum_k U_jk` of output mode `k`. Zero when photon numbers differ.
pub fn unitary_amplitude(u: &CMatrix, n_in: &[u32], n_out: &[u32]) -> Result<C64> {
    if n_in.len() != u.nrows() {
        return Err(Error::LengthMismatch(n_in.len(), u.nrows()));
    }
    if n_out.len() != u.ncols() {
        return Err(Error::LengthMismatch(n_out.len(), u.ncols()));
    }
    let total_in: u32 = n_in.iter().sum();
    let total_out: u32 = n_out.iter().sum();
    if total_in != total_out {
        return Ok(c(0.0, 0.0));
    }
    if total_in as usize > MAX_PERMANENT_DIM {
        return Err(Error::UnsupportedScale(format!("{total_in} photons")));
    }
    let rows = repeated_modes(n_in);
    let cols = repeated_modes(n_out);
    let per = ryser(rows.len(), |s, t| u[(rows[s], cols[t])]);
    let norm = (-0.5 * (ln_fact_product(n_in) + ln_fact_product(n_out))).exp();
    Ok(per * norm)
}

/// `<n_B| K_0 |n_A>`: the loss-free Kraus element, i.e. the same permanent formula applied to `L`.
pub fn no_loss_amplitude(l: &TransferMatrix, n_in: &[u32], n_out: &[u32]) -> Result<C64> {
    unitary_amplitude(l.matrix(), n_in, n_out)
}

fn check_caps(modes: usize, photons: u32) -> Result<()> {
    if modes > ORACLE_MAX_MODES {
        return Err(Error::UnsupportedScale(format!(
            "{modes} modes exceeds the oracle limit of {ORACLE_MAX_MODES}"
        )));
    }
    if photons > ORACLE_MAX_PHOTONS {
        return Err(Error::UnsupportedScale(format!(
            "{photons} photons exceeds the oracle limit of {ORACLE_MAX_PHOTONS}"
        )));
    }
    Ok(())
}

/// Exact output count distribution when Fock state `n_in` enters the lossy network.
/// Every outcome with at most `|n_in|` photons is enumerated, so the residual is zero.
pub fn lossy_conditional_distribution(l: &TransferMatrix, n_in: &[u32]) -> Result<FockDistribution> {
    let m = l.dim();
    if n_in.len() != m {
        return Err(Error::LengthMismatch(n_in.len(), m));
    }
    let total: u32 = n_in.iter().sum();
    check_caps(m, total)?;
    let top = unitary_dilation(l)?.top_rows();
    let basis = FockBasis::new(m, total);
    let rows = repeated_modes(n_in);
    let ln_in = ln_fact_product(n_in);
    let mut probs = vec![0.0; basis.len()];
    for out in sector_states(2 * m, total) {
        let cols = repeated_modes(&out);
        let per = ryser(rows.len(), |s, t| top[(rows[s], cols[t])]);
        let w = per.norm_sqr() * (-(ln_in + ln_fact_product(&out))).exp();
        let k = basis.index_of(&out[..m]).expect("bob pattern within basis");
        probs[k] += w;
    }
    FockDistribution::new(basis.states, probs, 0.0)
}

fn thermal_tail(sq: SqueezeParam, modes: usize, n_max: u32) -> f64 {
    let mut tail = 0.0;
    let mut n = n_max as u64 + 1;
    loop {
        let term = ln_thermal_count_probability(sq, modes, n).exp();
        tail += term;
        if term <= tail * 1e-17 || term == 0.0 || n > n_max as u64 + 100_000 {
            break;
        }
        n += 1;
    }
    tail
}

/// `P_Q(n_A, n_B | L)` for every heralding record with `|n_A| <= n_max`.
/// Outcomes are `n_A` followed by `n_B`; the residual is `P_Q(N > n_max)`.
pub fn joint_distribution(sq: SqueezeParam, l: &TransferMatrix, n_max: u32) -> Result<FockDistribution> {
    let m = l.dim();
    check_caps(m, n_max)?;
    let mut outcomes = Vec::new();
    let mut probs = Vec::new();
    for n in 0..=n_max {
        let weight = count_record_probability(sq, m, n as u64);
        for n_a in sector_states(m, n) {
            if weight == 0.0 {
                continue;
            }
            let cond = lossy_conditional_distribution(l, &n_a)?;
            for (n_b, &p) in cond.outcomes().iter().zip(cond.probs()) {
                let mut key = n_a.clone();
                key.extend_from_slice(n_b);
                outcomes.push(key);
                probs.push(weight * p);
            }
        }
    }
    FockDistribution::new(outcomes, probs, thermal_tail(sq, m, n_max))
}

/// Rising-factorial moments of Alice's photocounts given that Bob saw no counts
/// on `condition_set`: `E[prod_j (n_j + 1)(n_j + 2)...(n_j + k_j)]` for each
/// power vector `k`, computed from the truncated joint table.
#[derive(Debug, Clone)]
pub struct HeraldedMoments {
    pub moments: Vec<f64>,
    /// Enumerated part of `P(no counts on the set)`.
    pub heralding_probability: f64,
    /// Mass of heralding records beyond the enumeration.
    pub truncated_mass: f64,
}

pub fn conditional_a_state_moments(
    sq: SqueezeParam,
    l: &TransferMatrix,
    condition_set: &[usize],
    powers: &[Vec<u32>],
    n_max: u32,
) -> Result<HeraldedMoments> {
    let m = l.dim();
    if condition_set.iter().any(|&s| s >= m) {
        return Err(Error::InvalidConditionSet("mode out of range".into()));
    }
    if let Some(k) = powers.iter().find(|k| k.len() != m) {
        return Err(Error::LengthMismatch(k.len(), m));
    }
    let joint = joint_distribution(sq, l, n_max)?;
    let mut heralded = 0.0;
    let mut sums = vec![0.0; powers.len()];
    for (n, &p) in joint.outcomes().iter().zip(joint.probs()) {
        let (n_a, n_b) = n.split_at(m);
        if condition_set.iter().any(|&s| n_b[s] != 0) {
            continue;
        }
        heralded += p;
        for (acc, k) in sums.iter_mut().zip(powers) {
            let w: f64 = n_a
                .iter()
                .zip(k)
                .map(|(&nj, &kj)| (1..=kj).map(|r| (nj + r) as f64).product::<f64>())
                .product();
            *acc += p * w;
        }
    }
    Ok(HeraldedMoments {
        moments: sums.iter().map(|s| s / heralded).collect(),
        heralding_probability: heralded,
        truncated_mass: joint.residual_mass(),
    })
}

/// `Tr[rho_{B|N} U† K_0]` summed term by term over the `N`-photon sector:
/// `(1/G(N,M)) sum_{n,m} conj(<m|U|n>) <m|K_0|n>`.
pub fn sector_overlap_bruteforce(u: &CMatrix, l: &TransferMatrix, n: u32) -> Result<C64> {
    let m = l.dim();
    check_caps(m, n)?;
    let states = sector_states(m, n);
    let mut acc = c(0.0, 0.0);
    for n_in in &states {
        for n_out in &states {
            acc += unitary_amplitude(u, n_in, n_out)?.conj() * no_loss_amplitude(l, n_in, n_out)?;
        }
    }
    Ok(acc / states.len() as f64)
}
