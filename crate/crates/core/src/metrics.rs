//! How far a lossy network is from the ideal one: quantum fidelity of the
//! heralded states, derived distance bounds, per-photon-number sector
//! fidelities, and classical distances between photocount tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{joint_distribution, FockDistribution};
use crate::linalg::{c, ln_abs_det, ln_multiset, trace, CMatrix, C64};
use crate::network::{TransferMatrix, UnitaryMatrix};
use crate::squeezing::{ln_thermal_count_probability, ChiSqRule, SqueezeParam};

pub const CHAIN_TOL: f64 = 1e-9;

fn check_dims(u: &UnitaryMatrix, l: &TransferMatrix) -> Result<()> {
    if u.dim() != l.dim() {
        return Err(Error::LengthMismatch(u.dim(), l.dim()));
    }
    Ok(())
}

/// `F = (1 - chi^2)^M / |det(I - chi^2 L U†)|`, evaluated in log space.
pub fn fidelity_bound(sq: SqueezeParam, u: &UnitaryMatrix, l: &TransferMatrix) -> Result<f64> {
    check_dims(u, l)?;
    let m = u.dim();
    let x = sq.chi_sq();
    let a = CMatrix::identity(m, m) - l.matrix() * u.matrix().adjoint() * c(x, 0.0);
    let ln_det = ln_abs_det(&a)?;
    if !ln_det.is_finite() {
        return Err(Error::InvalidDimension("I - chi^2 L U† is singular".into()));
    }
    Ok((m as f64 * (1.0 - x).ln() - ln_det).exp().min(1.0))
}

/// Fidelity for uniform loss `L = t U`: `((1 - chi^2) / (1 - chi^2 t))^M`.
pub fn uniform_loss_fidelity(sq: SqueezeParam, modes: usize, t: f64) -> f64 {
    let x = sq.chi_sq();
    (modes as f64 * ((1.0 - x).ln() - (1.0 - x * t).ln())).exp()
}

/// Bound on the total variation distance between the two photocount distributions.
pub fn tvd_from_fidelity(f: f64) -> f64 {
    (1.0 - f * f).max(0.0).sqrt()
}

pub fn tvd_bound(sq: SqueezeParam, u: &UnitaryMatrix, l: &TransferMatrix) -> Result<f64> {
    Ok(tvd_from_fidelity(fidelity_bound(sq, u, l)?))
}

/// `h_0 .. h_{n_max}` of the eigenvalues of `a`, from power-sum traces by
/// `N h_N = sum_{k=1..N} Tr(a^k) h_{N-k}`.
pub fn complete_homogeneous(a: &CMatrix, n_max: u32) -> Vec<C64> {
    let n_max = n_max as usize;
    let mut p = Vec::with_capacity(n_max + 1);
    p.push(c(a.nrows() as f64, 0.0));
    let mut power = CMatrix::identity(a.nrows(), a.ncols());
    for _ in 1..=n_max {
        power = &power * a;
        p.push(trace(&power));
    }
    let mut h = vec![c(1.0, 0.0)];
    for n in 1..=n_max {
        let s: C64 = (1..=n).map(|k| p[k] * h[n - k]).sum();
        h.push(s / n as f64);
    }
    h
}

/// `Tr[rho_{B|N} U† K_0] = h_N(L U†) / G(N, M)` for `N = 0..=n_max`.
pub fn sector_overlaps(u: &UnitaryMatrix, l: &TransferMatrix, n_max: u32) -> Result<Vec<C64>> {
    check_dims(u, l)?;
    let m = u.dim() as u64;
    let a = l.matrix() * u.matrix().adjoint();
    Ok(complete_homogeneous(&a, n_max)
        .into_iter()
        .enumerate()
        .map(|(n, h)| h * (-ln_multiset(n as u64, m)).exp())
        .collect())
}

/// Fidelity bound restricted to the `N`-photon sector.
pub fn sector_fidelity(u: &UnitaryMatrix, l: &TransferMatrix, n: u32) -> Result<f64> {
    Ok(sector_overlaps(u, l, n)?[n as usize].norm())
}

/// Fidelity bound for the heralded state restricted to records with at most
/// `n_max` photons and renormalised, which is what a photocount table
/// truncated at `n_max` can be compared against.
pub fn truncated_fidelity_bound(
    sq: SqueezeParam,
    u: &UnitaryMatrix,
    l: &TransferMatrix,
    n_max: u32,
) -> Result<f64> {
    let m = u.dim();
    let overlaps = sector_overlaps(u, l, n_max)?;
    let mut num = c(0.0, 0.0);
    let mut den = 0.0;
    for (n, o) in overlaps.iter().enumerate() {
        let w = ln_thermal_count_probability(sq, m, n as u64).exp();
        num += o * w;
        den += w;
    }
    Ok(num.norm() / den)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkComparison {
    pub fidelity: f64,
    pub tvd_bound: f64,
    pub entanglement_fidelity: f64,
    pub chi_sq: f64,
    /// `(N, |Tr[rho_{B|N} U† K_0]|)`
    pub sector_fidelities: Vec<(u32, f64)>,
}

impl NetworkComparison {
    /// Acceptable when the distance bound is at most `epsilon`.
    pub fn acceptable(&self, epsilon: f64) -> bool {
        self.tvd_bound <= epsilon
    }
}

pub fn compare_networks(
    sq: SqueezeParam,
    u: &UnitaryMatrix,
    l: &TransferMatrix,
    max_sector: u32,
) -> Result<NetworkComparison> {
    let fidelity = fidelity_bound(sq, u, l)?;
    let sectors = sector_overlaps(u, l, max_sector)?;
    Ok(NetworkComparison {
        fidelity,
        tvd_bound: tvd_from_fidelity(fidelity),
        entanglement_fidelity: fidelity * fidelity,
        chi_sq: sq.chi_sq(),
        sector_fidelities: sectors
            .iter()
            .enumerate()
            .map(|(n, o)| (n as u32, o.norm()))
            .collect(),
    })
}

/// A probability table plus the mass it does not enumerate.
#[derive(Debug, Clone, Copy)]
pub struct ProbTable<'a> {
    pub probs: &'a [f64],
    pub residual: f64,
}

impl<'a> ProbTable<'a> {
    pub fn new(probs: &'a [f64], residual: f64) -> Self {
        Self { probs, residual }
    }

    pub fn complete(probs: &'a [f64]) -> Self {
        Self { probs, residual: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if let Some(bad) = self.probs.iter().chain([&self.residual]).find(|&&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {bad}")));
        }
        let total: f64 = self.probs.iter().sum::<f64>() + self.residual;
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!("total mass {total}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub tvd: f64,
    pub fidelity: f64,
}

/// `D = sum |P - Q| / 2` and `F = sum sqrt(P Q)`. Residual mass adds
/// `|p_res - q_res| / 2` to `D` and nothing to `F`.
pub fn distribution_distance(p: ProbTable, q: ProbTable) -> Result<Distances> {
    if p.probs.len() != q.probs.len() {
        return Err(Error::LengthMismatch(p.probs.len(), q.probs.len()));
    }
    p.validate()?;
    q.validate()?;
    let mut tvd = 0.0;
    let mut fidelity = 0.0;
    for (&a, &b) in p.probs.iter().zip(q.probs) {
        tvd += (a - b).abs();
        fidelity += (a * b).sqrt();
    }
    tvd += (p.residual - q.residual).abs();
    Ok(Distances {
        tvd: tvd / 2.0,
        fidelity,
    })
}

/// Distances between two Fock tables over the union of their outcomes.
pub fn fock_distance(p: &FockDistribution, q: &FockDistribution) -> Result<Distances> {
    let (a, b) = p.aligned(q);
    distribution_distance(ProbTable::new(&a, p.residual_mass()), ProbTable::new(&b, q.residual_mass()))
}

/// Slack of each link in `1 - F_C <= D_C <= sqrt(1 - F_C^2)`, `F_C >= F`,
/// `D_C <= sqrt(1 - F^2)`. Negative slack is a violation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainReport {
    pub classical: Distances,
    pub quantum_fidelity: f64,
    pub fidelity_lower: f64,
    pub fidelity_upper: f64,
    pub classical_over_quantum: f64,
    pub quantum_tvd_bound: f64,
}

impl ChainReport {
    pub fn slacks(&self) -> [f64; 4] {
        [
            self.fidelity_lower,
            self.fidelity_upper,
            self.classical_over_quantum,
            self.quantum_tvd_bound,
        ]
    }

    pub fn min_slack(&self) -> f64 {
        self.slacks().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack() >= -tol
    }
}

pub fn inequality_chain(classical: Distances, quantum_fidelity: f64) -> ChainReport {
    let Distances { tvd: d, fidelity: f } = classical;
    ChainReport {
        classical,
        quantum_fidelity,
        fidelity_lower: d - (1.0 - f),
        fidelity_upper: tvd_from_fidelity(f) - d,
        classical_over_quantum: f - quantum_fidelity,
        quantum_tvd_bound: tvd_from_fidelity(quantum_fidelity) - d,
    }
}

/// [`inequality_chain`] on two tables; any slack below `-CHAIN_TOL` is an error.
pub fn inequality_chain_check(p: ProbTable, q: ProbTable, quantum_fidelity: f64) -> Result<ChainReport> {
    let report = inequality_chain(distribution_distance(p, q)?, quantum_fidelity);
    if !report.holds(CHAIN_TOL) {
        return Err(Error::InequalityViolated(format!("{report:?}")));
    }
    Ok(report)
}

/// The chain on exact joint tables truncated at `n_max` photons.
///
/// Both tables lose the same heralding tail, so conditioning on `|n_A| <= n_max`
/// renormalises them consistently; the conditional states are compared against
/// [`truncated_fidelity_bound`]. The raw truncated distance is also checked
/// against the full bound, which it can only underestimate.
#[derive(Debug, Clone, Serialize)]
pub struct TruncatedChain {
    pub n_max: u32,
    pub residual: f64,
    pub chain: ChainReport,
    pub fidelity_bound: f64,
    pub tvd_bound: f64,
    pub raw_tvd: f64,
}

impl TruncatedChain {
    /// Slack of `F_C >= F` against the untruncated bound.
    pub fn full_fidelity_slack(&self) -> f64 {
        self.chain.classical.fidelity - self.fidelity_bound
    }

    pub fn raw_tvd_slack(&self) -> f64 {
        self.tvd_bound - self.raw_tvd
    }

    pub fn min_slack(&self) -> f64 {
        self.chain
            .min_slack()
            .min(self.full_fidelity_slack())
            .min(self.raw_tvd_slack())
    }
}

pub fn truncated_chain(sq: SqueezeParam, u: &UnitaryMatrix, l: &TransferMatrix, n_max: u32) -> Result<TruncatedChain> {
    let p = joint_distribution(sq, &u.to_transfer(), n_max)?;
    let q = joint_distribution(sq, l, n_max)?;
    let raw = fock_distance(&p, &q)?;
    let (a, b) = p.aligned(&q);
    let (ka, kb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    let a: Vec<f64> = a.iter().map(|v| v / ka).collect();
    let b: Vec<f64> = b.iter().map(|v| v / kb).collect();
    let conditional = distribution_distance(ProbTable::complete(&a), ProbTable::complete(&b))?;
    let fidelity = fidelity_bound(sq, u, l)?;
    Ok(TruncatedChain {
        n_max,
        residual: p.residual_mass(),
        chain: inequality_chain(conditional, truncated_fidelity_bound(sq, u, l, n_max)?),
        fidelity_bound: fidelity,
        tvd_bound: tvd_from_fidelity(fidelity),
        raw_tvd: raw.tvd,
    })
}

/// One point of a uniform-loss fidelity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "M")]
    pub modes: usize,
    pub chi_sq: f64,
    pub t_sq: f64,
    pub fidelity: f64,
    pub tvd_bound: f64,
    pub ent_fidelity: f64,
}

/// Closed-form uniform-loss fidelity on the grid `modes x t_sq`.
pub fn uniform_loss_sweep(modes: &[usize], t_sq: &[f64], rule: ChiSqRule) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(modes.len() * t_sq.len());
    for &m in modes {
        let sq = rule.resolve(m)?;
        for &ts in t_sq {
            if !(0.0..=1.0).contains(&ts) {
                return Err(Error::Config(format!("t_sq = {ts} outside [0, 1]")));
            }
            let f = uniform_loss_fidelity(sq, m, ts.sqrt());
            rows.push(SweepRow {
                modes: m,
                chi_sq: sq.chi_sq(),
                t_sq: ts,
                fidelity: f,
                tvd_bound: tvd_from_fidelity(f),
                ent_fidelity: f * f,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
