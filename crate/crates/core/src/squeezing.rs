//! Closed-form statistics of two-mode squeezed vacuum sent through a network:
//! thermal photon-number laws, no-count probabilities and the Gaussian
//! heterodyne distribution Alice sees once Bob reports no counts on a set of modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ln_multiset, CMatrix};
use crate::network::{column_norms_sq, TransferMatrix};
use crate::permanent::ryser;

/// Largest number of `alpha` (and `alpha*`) factors accepted by [`gaussian_moment`].
pub const MAX_MOMENT_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParam {
    chi_sq: f64,
}

impl SqueezeParam {
    pub fn new(chi_sq: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&chi_sq) {
            return Err(Error::InvalidSqueezing(chi_sq));
        }
        Ok(Self { chi_sq })
    }

    /// `chi^2 = 1/sqrt(M)`.
    pub fn inverse_sqrt_modes(modes: usize) -> Result<Self> {
        Self::new(1.0 / (modes as f64).sqrt())
    }

    /// `chi^2 = 1/(sqrt(M) + 1)`, which makes about `sqrt(M)` photon pairs likely.
    pub fn inverse_sqrt_modes_plus_one(modes: usize) -> Result<Self> {
        Self::new(1.0 / ((modes as f64).sqrt() + 1.0))
    }

    pub fn chi_sq(&self) -> f64 {
        self.chi_sq
    }

    /// Mean photon number per mode, `chi^2 / (1 - chi^2)`.
    pub fn mean_photon(&self) -> f64 {
        self.chi_sq / (1.0 - self.chi_sq)
    }

    /// Variance of each real quadrature component of Alice's heterodyne outcome is half of this.
    pub fn heterodyne_variance(&self) -> f64 {
        1.0 / (1.0 - self.chi_sq)
    }
}

/// How `chi^2` is chosen for an `M`-mode experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiSqRule {
    Fixed(f64),
    /// `1/sqrt(M)`
    InverseSqrtModes,
    /// `1/(sqrt(M) + 1)`
    InverseSqrtModesPlusOne,
}

impl ChiSqRule {
    pub fn resolve(&self, modes: usize) -> Result<SqueezeParam> {
        match *self {
            ChiSqRule::Fixed(x) => SqueezeParam::new(x),
            ChiSqRule::InverseSqrtModes => SqueezeParam::inverse_sqrt_modes(modes),
            ChiSqRule::InverseSqrtModesPlusOne => SqueezeParam::inverse_sqrt_modes_plus_one(modes),
        }
    }
}

fn ln_vacuum_weight(sq: SqueezeParam, modes: usize) -> f64 {
    modes as f64 * (1.0 - sq.chi_sq).ln()
}

fn ln_chi_power(sq: SqueezeParam, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * sq.chi_sq.ln()
    }
}

/// `ln P_Q(N) = ln[C(N+M-1, N) (1-chi^2)^M chi^(2N)]`.
pub fn ln_thermal_count_probability(sq: SqueezeParam, modes: usize, n: u64) -> f64 {
    ln_multiset(n, modes as u64) + ln_vacuum_weight(sq, modes) + ln_chi_power(sq, n)
}

/// Total photon-number law `P_Q(N)` on the `M` heralding modes for `N = 0..=n_max`.
pub fn thermal_count_distribution(sq: SqueezeParam, modes: usize, n_max: u64) -> Vec<f64> {
    (0..=n_max)
        .map(|n| ln_thermal_count_probability(sq, modes, n).exp())
        .collect()
}

/// Probability of one particular count vector with `total` photons.
pub fn count_record_probability(sq: SqueezeParam, modes: usize, total: u64) -> f64 {
    (ln_vacuum_weight(sq, modes) + ln_chi_power(sq, total)).exp()
}

/// Probability that `N` photons arrive with no mode holding more than one,
/// `C(M, N) (1-chi^2)^M chi^(2N)`.
pub fn single_count_distribution(sq: SqueezeParam, modes: usize, n_max: u64) -> Vec<f64> {
    (0..=n_max)
        .map(|n| {
            if n as usize > modes {
                return 0.0;
            }
            let ln_binom: f64 = (1..=n)
                .map(|j| ((modes as u64 - n + j) as f64 / j as f64).ln())
                .sum();
            (ln_binom + ln_vacuum_weight(sq, modes) + ln_chi_power(sq, n)).exp()
        })
        .collect()
}

fn check_mode(l: &TransferMatrix, i: usize) -> Result<()> {
    if i >= l.dim() {
        return Err(Error::InvalidConditionSet(format!(
            "mode {i} out of range for {} modes",
            l.dim()
        )));
    }
    Ok(())
}

/// `P(n_i | L)`: thermal with mean `nbar * ell_i^2`, written so that `n = 0`
/// is literally [`no_count_probability`].
pub fn per_mode_count_distribution(sq: SqueezeParam, l: &TransferMatrix, i: usize, n: u32) -> Result<f64> {
    check_mode(l, i)?;
    let ell_sq = column_norms_sq(l.matrix())[i];
    Ok(per_mode_from_ell(sq, ell_sq, n))
}

fn per_mode_from_ell(sq: SqueezeParam, ell_sq: f64, n: u32) -> f64 {
    let x = sq.chi_sq;
    let den = 1.0 - x * (1.0 - ell_sq);
    let p0 = (1.0 - x) / den;
    if n == 0 {
        p0
    } else {
        p0 * (x * ell_sq / den).powi(n as i32)
    }
}

/// `P(0_i | L) = (1 - chi^2) / (1 - chi^2 (1 - ell_i^2))`.
pub fn no_count_probability(sq: SqueezeParam, l: &TransferMatrix, i: usize) -> Result<f64> {
    per_mode_count_distribution(sq, l, i, 0)
}

/// Gaussian law of Alice's heterodyne outcome given no counts on `condition_set`:
/// density proportional to `exp(-alpha* S alpha^T)` with `covariance = S^-1`,
/// i.e. `<alpha_j alpha_k*> = covariance[(j, k)]`.
#[derive(Debug, Clone)]
pub struct ConditionalGaussian {
    pub precision: CMatrix,
    pub covariance: CMatrix,
    pub condition_set: Vec<usize>,
    /// `P(no counts on the set | L) = (1 - chi^2)^M / det S`.
    pub probability: f64,
}

fn validate_condition_set(modes: usize, set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidConditionSet("empty condition set".into()));
    }
    let mut seen = vec![false; modes];
    for &s in set {
        if s >= modes {
            return Err(Error::InvalidConditionSet(format!("mode {s} out of range")));
        }
        if seen[s] {
            return Err(Error::InvalidConditionSet(format!("mode {s} repeated")));
        }
        seen[s] = true;
    }
    Ok(())
}

/// `S = (1-chi^2) I + chi^2 sum_s L_s L_s†` and its inverse through the
/// Woodbury identity on the rank-`|set|` update.
pub fn conditional_covariance(
    sq: SqueezeParam,
    l: &TransferMatrix,
    condition_set: &[usize],
) -> Result<ConditionalGaussian> {
    let m = l.dim();
    validate_condition_set(m, condition_set)?;
    let a = 1.0 - sq.chi_sq;
    let chi = sq.chi_sq.sqrt();
    let r = condition_set.len();
    let b = CMatrix::from_fn(m, r, |j, s| l.matrix()[(j, condition_set[s])] * chi);
    let precision = CMatrix::identity(m, m) * c(a, 0.0) + &b * b.adjoint();
    let small = CMatrix::identity(r, r) * c(a, 0.0) + b.adjoint() * &b;
    let chol = small
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidDimension("Woodbury core is not positive definite".into()))?;
    let inner = chol.inverse();
    let covariance = (CMatrix::identity(m, m) - &b * inner * b.adjoint()) * c(1.0 / a, 0.0);
    // det S = a^(M - r) det(a I_r + B†B)
    let ln_det_small: f64 = chol.l().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum();
    let ln_det_s = (m - r) as f64 * a.ln() + ln_det_small;
    let probability = (m as f64 * a.ln() - ln_det_s).exp();
    Ok(ConditionalGaussian {
        precision,
        covariance,
        condition_set: condition_set.to_vec(),
        probability,
    })
}

/// `<alpha_j1 .. alpha_jn alpha*_k1 .. alpha*_kn>` for a zero-mean circular
/// Gaussian with `<alpha_j alpha_k*> = a[(j, k)]`: the permanent of
/// the submatrix `a[j_s, k_t]`.
pub fn gaussian_moment(a: &CMatrix, upper: &[usize], lower: &[usize]) -> Result<num_complex::Complex64> {
    if upper.len() != lower.len() {
        return Err(Error::LengthMismatch(upper.len(), lower.len()));
    }
    if upper.len() > MAX_MOMENT_ORDER {
        return Err(Error::MomentOrderTooHigh {
            order: upper.len(),
            max: MAX_MOMENT_ORDER,
        });
    }
    let m = a.nrows();
    if let Some(&bad) = upper.iter().chain(lower).find(|&&j| j >= m) {
        return Err(Error::InvalidConditionSet(format!("index {bad} out of range")));
    }
    Ok(ryser(upper.len(), |s, t| a[(upper[s], lower[t])]))
}

/// `<prod_j |alpha_j|^(2 k_j)>`, the diagonal moments.
pub fn diagonal_moment(a: &CMatrix, powers: &[u32]) -> Result<f64> {
    if powers.len() != a.nrows() {
        return Err(Error::LengthMismatch(powers.len(), a.nrows()));
    }
    let idx: Vec<usize> = powers
        .iter()
        .enumerate()
        .flat_map(|(j, &k)| std::iter::repeat_n(j, k as usize))
        .collect();
    Ok(gaussian_moment(a, &idx, &idx)?.re)
}
