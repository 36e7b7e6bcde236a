//! Characterization with a phase-randomized (classical-classical) input.
//!
//! Dephasing kills the heralded cross moments, so only intensities survive:
//! second moments give `|L_ji|` and heralded intensity covariances on a pair
//! of no-count modes give relative phases.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{jackknife, ColumnMoments, Flag, MomentAccumulator, PairMoments, MIN_CONDITIONED_RUNS};
use crate::linalg::{c, C64};
use crate::squeezing::SqueezeParam;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CcVariant {
    /// `|L_ji|^2 = (1 + chi^2 - <|alpha_j|^2>_i) / chi^2`
    #[default]
    FirstOrder,
    /// Closed-form inversion of the heralded diagonal moments, no weak-squeezing expansion.
    Exact,
}

#[derive(Debug, Clone)]
pub struct CcMagnitudes {
    pub magnitude: DMatrix<f64>,
    /// Before the clamp at zero.
    pub magnitude_sq: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub jackknife_sigma: Option<DMatrix<f64>>,
    pub variant: CcVariant,
    pub flags: Vec<Flag>,
}

fn column_magnitudes_sq(x: f64, col: &ColumnMoments, variant: CcVariant, flags: &mut Vec<Flag>) -> Vec<f64> {
    match variant {
        CcVariant::FirstOrder => col.abs.iter().map(|m| (1.0 + x - m) / x).collect(),
        CcVariant::Exact => {
            // (1 - chi^2) m_j = 1 - chi^2 |L_ji|^2 / d with d = 1 - chi^2 (1 - ell_i^2)
            let cj: Vec<f64> = col.abs.iter().map(|m| (1.0 - (1.0 - x) * m) / x).collect();
            let total: f64 = cj.iter().sum();
            let denom = 1.0 - x * total;
            if denom <= 0.0 {
                flags.push(Flag::ClampedRadicand(col.target));
                return cj;
            }
            let ell_sq = total * (1.0 - x) / denom;
            let d = 1.0 - x * (1.0 - ell_sq);
            cj.iter().map(|v| v * d).collect()
        }
    }
}

fn magnitudes_sq(sq: SqueezeParam, columns: &[ColumnMoments], variant: CcVariant) -> Result<(DMatrix<f64>, Vec<Flag>)> {
    let x = sq.chi_sq();
    if x <= 0.0 {
        return Err(Error::InsufficientData("chi^2 = 0 carries no information about L".into()));
    }
    let m = columns.len();
    let mut out = DMatrix::zeros(m, m);
    let mut flags = Vec::new();
    for (i, col) in columns.iter().enumerate() {
        if col.target != i || col.abs.len() != m {
            return Err(Error::Format(format!("moments for column {i} are malformed")));
        }
        if let Some(t) = col.count {
            if t < MIN_CONDITIONED_RUNS {
                return Err(Error::InsufficientData(format!(
                    "only {t} runs with no count in mode {i} (need {MIN_CONDITIONED_RUNS})"
                )));
            }
        }
        for (j, v) in column_magnitudes_sq(x, col, variant, &mut flags).into_iter().enumerate() {
            out[(j, i)] = v;
        }
    }
    Ok((out, flags))
}

/// `sigma(|L|^2)` propagated to `|L|`, falling back to `sqrt(sigma)` near zero.
pub fn magnitude_sigma(mag: f64, sigma_sq: f64) -> f64 {
    if mag > sigma_sq.sqrt() {
        sigma_sq / (2.0 * mag)
    } else {
        sigma_sq.sqrt()
    }
}

pub fn cc_magnitude_estimate(sq: SqueezeParam, columns: &[ColumnMoments], variant: CcVariant) -> Result<CcMagnitudes> {
    let (raw, mut flags) = magnitudes_sq(sq, columns, variant)?;
    let m = raw.nrows();
    let x = sq.chi_sq();
    let magnitude = raw.map(|v| v.max(0.0).sqrt());
    let mut sigma = DMatrix::zeros(m, m);
    for (i, col) in columns.iter().enumerate() {
        for j in 0..m {
            // heralded intensities are exponential: sd equals the mean
            let s_sq = col.count.map_or(0.0, |t| col.abs[j] / (x * (t as f64).sqrt()));
            sigma[(j, i)] = magnitude_sigma(magnitude[(j, i)], s_sq);
            if j == i && raw[(i, i)] < 0.0 && !flags.contains(&Flag::ClampedRadicand(i)) {
                flags.push(Flag::ClampedRadicand(i));
            }
        }
    }
    Ok(CcMagnitudes {
        magnitude,
        magnitude_sq: raw,
        sigma,
        jackknife_sigma: None,
        variant,
        flags,
    })
}

/// Magnitudes from accumulated CC runs, with jackknife error bars.
pub fn cc_magnitudes_from(sq: SqueezeParam, acc: &MomentAccumulator, variant: CcVariant) -> Result<CcMagnitudes> {
    if acc.characterization_runs() == 0 {
        return Err(Error::InsufficientData("no characterization runs".into()));
    }
    let mut est = cc_magnitude_estimate(sq, &acc.total().column_moments(), variant)?;
    let m = acc.modes();
    est.jackknife_sigma = jackknife(acc, |s| {
        let (raw, _) = magnitudes_sq(sq, &s.column_moments(), variant)?;
        Ok(raw.iter().map(|v| c(v.max(0.0).sqrt(), 0.0)).collect::<Vec<C64>>())
    })
    .map(|v| DMatrix::from_vec(m, m, v));
    Ok(est)
}

/// `cos(theta_ji - theta_ki)` for column `i` relative to the real reference column `r`.
#[derive(Debug, Clone)]
pub struct PhaseEstimate {
    pub reference: usize,
    pub column: usize,
    /// NaN where unresolved.
    pub cos: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub resolved: DMatrix<bool>,
    pub flags: Vec<Flag>,
}

impl PhaseEstimate {
    /// `cos(theta_ji)`, using `theta_ri = 0` on the real reference row.
    pub fn cos_theta(&self, j: usize) -> Option<f64> {
        let r = self.reference;
        self.resolved[(j, r)].then(|| self.cos[(j, r)])
    }
}

/// Relative phases within column `i` from heralded intensity covariances on
/// the no-count pair `{r, i}`. For orthogonal columns
/// `C_jk = kappa |sum_c L_jc L_kc* / d_c|^2`, `kappa = (chi^2 / (1 - chi^2))^2`,
/// `d_c = 1 - chi^2 (1 - ell_c^2)`, exactly.
pub fn cc_phase_difference_estimate(
    sq: SqueezeParam,
    pair: &PairMoments,
    column_r_magnitudes: &[f64],
    column_i_magnitudes: &[f64],
) -> Result<PhaseEstimate> {
    let x = sq.chi_sq();
    if x <= 0.0 {
        return Err(Error::InsufficientData("chi^2 = 0 carries no information about L".into()));
    }
    let (r, i) = pair.pair;
    let m = pair.abs.len();
    if column_r_magnitudes.len() != m {
        return Err(Error::LengthMismatch(column_r_magnitudes.len(), m));
    }
    if column_i_magnitudes.len() != m {
        return Err(Error::LengthMismatch(column_i_magnitudes.len(), m));
    }
    if let Some(t) = pair.count {
        if t < MIN_CONDITIONED_RUNS {
            return Err(Error::InsufficientData(format!("only {t} runs with no count in modes {r} and {i}")));
        }
    }
    let kappa = (x / (1.0 - x)).powi(2);
    let rescale = |mags: &[f64]| -> Vec<f64> {
        let ell_sq: f64 = mags.iter().map(|v| v * v).sum();
        let d = 1.0 - x * (1.0 - ell_sq);
        mags.iter().map(|v| v / d.sqrt()).collect()
    };
    let mu_r = rescale(column_r_magnitudes);
    let mu_i = rescale(column_i_magnitudes);
    let mut cos = DMatrix::from_element(m, m, f64::NAN);
    let mut sigma = DMatrix::zeros(m, m);
    let mut resolved = DMatrix::from_element(m, m, false);
    for j in 0..m {
        for k in 0..m {
            if j == k {
                continue;
            }
            let prod = mu_r[j] * mu_r[k] * mu_i[j] * mu_i[k];
            let signal = 2.0 * kappa * prod;
            let noise = pair
                .count
                .map_or(0.0, |t| 3f64.sqrt() * pair.abs[j] * pair.abs[k] / (t as f64).sqrt());
            if prod < 1e-12 || signal < 3.0 * noise {
                continue;
            }
            let cjk = pair.intensity_covariance(j, k) / kappa;
            let v = (cjk - (mu_r[j] * mu_r[k]).powi(2) - (mu_i[j] * mu_i[k]).powi(2)) / (2.0 * prod);
            cos[(j, k)] = v.clamp(-1.0, 1.0);
            sigma[(j, k)] = noise / signal;
            resolved[(j, k)] = true;
        }
    }
    let flags = (0..m)
        .filter(|&j| j != r && !resolved[(j, r)])
        .map(Flag::Unresolved)
        .collect();
    Ok(PhaseEstimate {
        reference: r,
        column: i,
        cos,
        sigma,
        resolved,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::AccumulatorOptions;
    use crate::linalg::CMatrix;
    use crate::network::{haar_random_unitary, TransferMatrix};
    use crate::simulate::{run_rng, sample_cc_characterization_run};
    use crate::squeezing::conditional_covariance;
    use proptest::prelude::*;

    fn sq(x: f64) -> SqueezeParam {
        SqueezeParam::new(x).unwrap()
    }

    fn dephased(s: SqueezeParam, l: &TransferMatrix) -> Vec<ColumnMoments> {
        (0..l.dim())
            .map(|i| ColumnMoments::exact_dephased(&conditional_covariance(s, l, &[i]).unwrap()).unwrap())
            .collect()
    }

    /// Rephase rows so column `r` is real, then columns so row `r` is real.
    fn standard_form(u: &CMatrix, r: usize) -> CMatrix {
        let mut out = u.clone();
        for j in 0..u.nrows() {
            let z = out[(j, r)];
            let ph = if z.norm() > 0.0 { z.conj() / z.norm() } else { c(1.0, 0.0) };
            for k in 0..u.ncols() {
                out[(j, k)] *= ph;
            }
        }
        for k in 0..u.ncols() {
            let z = out[(r, k)];
            let ph = if z.norm() > 0.0 { z.conj() / z.norm() } else { c(1.0, 0.0) };
            for j in 0..u.nrows() {
                out[(j, k)] *= ph;
            }
        }
        out
    }

    fn mags(l: &CMatrix, col: usize) -> Vec<f64> {
        l.column(col).iter().map(|z| z.norm()).collect()
    }

    #[test]
    fn identity_magnitudes() {
        let id = TransferMatrix::new(CMatrix::identity(3, 3)).unwrap();
        for v in [CcVariant::FirstOrder, CcVariant::Exact] {
            let est = cc_magnitude_estimate(sq(0.2), &dephased(sq(0.2), &id), v).unwrap();
            for j in 0..3 {
                for i in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((est.magnitude[(j, i)] - want).abs() < 1e-6, "{v:?}");
                }
            }
        }
    }

    #[test]
    fn exact_variant_inverts_lossy_moments() {
        for seed in 0..10 {
            let u = haar_random_unitary(4, seed).unwrap();
            let v = haar_random_unitary(4, seed + 100).unwrap();
            let l = TransferMatrix::from_parts(&u, &[0.9, 0.7, 0.5, 0.2], &v).unwrap();
            let est = cc_magnitude_estimate(sq(0.35), &dephased(sq(0.35), &l), CcVariant::Exact).unwrap();
            for (e, t) in est.magnitude.iter().zip(l.matrix().iter()) {
                assert!((e - t.norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn first_order_variant_has_chi_sq_bias() {
        let u = haar_random_unitary(3, 5).unwrap().to_transfer();
        let err = |x: f64| {
            let est = cc_magnitude_estimate(sq(x), &dephased(sq(x), &u), CcVariant::FirstOrder).unwrap();
            est.magnitude_sq
                .iter()
                .zip(u.matrix().iter())
                .map(|(e, t)| (e - t.norm_sqr()).abs())
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(0.02), err(0.01));
        assert!(a < 0.05 && b < 0.5 * a * 1.01, "{a} {b}");
    }

    #[test]
    fn cosines_exact_for_unitary() {
        for seed in 0..6 {
            let u = standard_form(haar_random_unitary(4, seed).unwrap().matrix(), 0);
            let l = TransferMatrix::new(u.clone()).unwrap();
            let i = 1 + (seed as usize % 3);
            let g = conditional_covariance(sq(0.3), &l, &[0, i]).unwrap();
            let est = cc_phase_difference_estimate(sq(0.3), &PairMoments::exact(&g).unwrap(), &mags(&u, 0), &mags(&u, i)).unwrap();
            for j in 0..4 {
                for k in (0..4).filter(|&k| k != j) {
                    assert!(est.resolved[(j, k)]);
                    let want = (u[(j, i)].arg() - u[(k, i)].arg()).cos();
                    assert!((est.cos[(j, k)] - want).abs() < 1e-9, "seed {seed} ({j},{k})");
                }
            }
        }
    }

    #[test]
    fn quarter_turn_phase_reads_zero_cosine() {
        let h = 0.5;
        let x = 0.34f64.sqrt();
        let col0 = [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(h, 0.0)];
        let col1 = [c(x, 0.0), c(-x, 0.0), c(0.0, 0.4), c(0.0, -0.4)];
        let mut seed_cols = CMatrix::from_fn(4, 4, |j, k| match k {
            0 => col0[j],
            1 => col1[j],
            _ => c((j * 7 + k * 3) as f64 % 5.0 - 2.0, (j + 2 * k) as f64 % 3.0 - 1.0),
        });
        // Gram-Schmidt on the last two columns
        for k in 2..4 {
            for p in 0..k {
                let proj: C64 = (0..4).map(|j| seed_cols[(j, p)].conj() * seed_cols[(j, k)]).sum();
                for j in 0..4 {
                    let v = seed_cols[(j, p)];
                    seed_cols[(j, k)] -= proj * v;
                }
            }
            let n = seed_cols.column(k).norm();
            seed_cols.column_mut(k).unscale_mut(n);
        }
        let u = standard_form(&seed_cols, 0);
        let l = TransferMatrix::new(u.clone()).unwrap();
        assert!((u[(2, 1)].arg() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let g = conditional_covariance(sq(0.25), &l, &[0, 1]).unwrap();
        let est = cc_phase_difference_estimate(sq(0.25), &PairMoments::exact(&g).unwrap(), &mags(&u, 0), &mags(&u, 1)).unwrap();
        assert!(est.cos_theta(2).unwrap().abs() < 1e-6);
        assert!((est.cos_theta(1).unwrap() + 1.0).abs() < 1e-6);
        assert!(est.cos_theta(3).unwrap().abs() < 1e-6);
    }

    #[test]
    fn all_real_unitary_gives_unit_cosines_in_simulation() {
        // real orthogonal matrix: every cosine is +1 or -1
        let q = haar_random_unitary(3, 7).unwrap().matrix().map(|z| c(z.re, 0.0));
        let q = q.qr().q();
        let u = standard_form(&q, 0);
        let l = TransferMatrix::new(u.clone()).unwrap();
        let s = sq(0.3);
        let mut acc = MomentAccumulator::new(3, AccumulatorOptions { full_covariance: false, pairs: vec![(0, 1)], blocks: 20 }).unwrap();
        for k in 0..400_000u64 {
            acc.accumulate(&sample_cc_characterization_run(s, &l, &mut run_rng(5, k))).unwrap();
        }
        let pm = acc.total().pair_moments().remove(0);
        let est = cc_phase_difference_estimate(s, &pm, &mags(&u, 0), &mags(&u, 1)).unwrap();
        for j in 1..3 {
            if let Some(cv) = est.cos_theta(j) {
                let want = u[(j, 1)].re.signum() * u[(0, 1)].re.signum();
                assert!((cv - want).abs() <= 4.0 * est.sigma[(j, 0)] + 1e-9, "row {j}: {cv} vs {want}");
            }
        }
    }

    #[test]
    fn statistical_cosines_with_estimated_magnitudes() {
        let u = standard_form(haar_random_unitary(3, 11).unwrap().matrix(), 0);
        let l = TransferMatrix::new(u.clone()).unwrap();
        let s = sq(0.3);
        let opts = AccumulatorOptions { full_covariance: false, pairs: vec![(0, 1), (0, 2)], blocks: 20 };
        let mut acc = MomentAccumulator::new(3, opts).unwrap();
        for k in 0..10_000_000u64 {
            acc.accumulate(&sample_cc_characterization_run(s, &l, &mut run_rng(6, k))).unwrap();
        }
        let mags_est = cc_magnitudes_from(s, &acc, CcVariant::Exact).unwrap();
        let col = |i: usize| -> Vec<f64> { mags_est.magnitude.column(i).iter().copied().collect() };
        let mut worst = 0.0f64;
        for pm in acc.total().pair_moments() {
            let i = pm.pair.1;
            let est = cc_phase_difference_estimate(s, &pm, &col(0), &col(i)).unwrap();
            for j in 0..3 {
                for k in (0..3).filter(|&k| k != j) {
                    assert!(est.resolved[(j, k)]);
                    let want = (u[(j, i)].arg() - u[(k, i)].arg()).cos();
                    worst = worst.max((est.cos[(j, k)] - want).abs());
                }
            }
        }
        assert!(worst <= 0.1, "{worst}");
    }

    #[test]
    fn noise_floor_marks_unresolved() {
        let u = standard_form(haar_random_unitary(3, 2).unwrap().matrix(), 0);
        let l = TransferMatrix::new(u.clone()).unwrap();
        let g = conditional_covariance(sq(0.3), &l, &[0, 1]).unwrap();
        let mut pm = PairMoments::exact(&g).unwrap();
        pm.count = Some(MIN_CONDITIONED_RUNS);
        let est = cc_phase_difference_estimate(sq(0.3), &pm, &mags(&u, 0), &mags(&u, 1)).unwrap();
        assert!(!est.flags.is_empty());
        let mut zeroed = mags(&u, 1);
        zeroed[2] = 0.0;
        let exact = PairMoments::exact(&g).unwrap();
        let est = cc_phase_difference_estimate(sq(0.3), &exact, &mags(&u, 0), &zeroed).unwrap();
        assert!(est.flags.contains(&Flag::Unresolved(2)));
        assert!(est.cos[(2, 0)].is_nan());
    }

    #[test]
    fn magnitude_sigma_switches_near_zero() {
        assert_eq!(magnitude_sigma(0.5, 0.01), 0.01);
        assert_eq!(magnitude_sigma(0.05, 0.01), 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn invariant_under_conjugation(m in 2usize..5, seed in 0u64..10_000, x in 0.05f64..0.5) {
            let u = haar_random_unitary(m, seed).unwrap();
            let v = haar_random_unitary(m, seed + 3).unwrap();
            let t: Vec<f64> = (0..m).map(|k| 1.0 - 0.15 * k as f64).collect();
            let l = TransferMatrix::from_parts(&u, &t, &v).unwrap();
            let lc = l.conj();
            for variant in [CcVariant::FirstOrder, CcVariant::Exact] {
                let a = cc_magnitude_estimate(sq(x), &dephased(sq(x), &l), variant).unwrap();
                let b = cc_magnitude_estimate(sq(x), &dephased(sq(x), &lc), variant).unwrap();
                prop_assert_eq!(a.magnitude, b.magnitude);
            }
            let ga = PairMoments::exact(&conditional_covariance(sq(x), &l, &[0, 1]).unwrap()).unwrap();
            let gb = PairMoments::exact(&conditional_covariance(sq(x), &lc, &[0, 1]).unwrap()).unwrap();
            let (mr, mi) = (mags(l.matrix(), 0), mags(l.matrix(), 1));
            let pa = cc_phase_difference_estimate(sq(x), &ga, &mr, &mi).unwrap();
            let pb = cc_phase_difference_estimate(sq(x), &gb, &mr, &mi).unwrap();
            for (p, q) in pa.cos.iter().zip(pb.cos.iter()) {
                prop_assert!(p.to_bits() == q.to_bits() || (p.is_nan() && q.is_nan()));
            }
        }
    }
}
