//! Unitary and lossy linear optical networks.
//!
//! A network acts on coherent-state amplitudes as a row vector, `beta -> beta L`,
//! so column `i` of `L` collects everything that ends up in output mode `i`.

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, diag_real, ensure_square, max_abs_diff, svd_desc, unitarity_deviation, CMatrix, C64,
};

pub const UNITARY_TOL: f64 = 1e-12;
/// Singular values above one by less than this are clamped; beyond it the matrix is rejected.
pub const SUBUNITARY_TOL: f64 = 1e-9;
pub const PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = ensure_square(&m)?;
        if n == 0 {
            return Err(Error::InvalidDimension("unitary of dimension 0".into()));
        }
        let dev = unitarity_deviation(&m);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn to_transfer(&self) -> TransferMatrix {
        TransferMatrix(self.0.clone())
    }
}

/// A subunitary transfer matrix: every singular value is at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix(CMatrix);

impl TransferMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = ensure_square(&m)?;
        if n == 0 {
            return Err(Error::InvalidDimension("transfer matrix of dimension 0".into()));
        }
        let top = svd_desc(&m)?.s[0];
        if top > 1.0 + SUBUNITARY_TOL {
            return Err(Error::NotSubunitary(top));
        }
        Ok(Self(m))
    }

    /// `U diag(t) V`, the general lossy network with singular transmissions `t`.
    pub fn from_parts(u: &UnitaryMatrix, t: &[f64], v: &UnitaryMatrix) -> Result<Self> {
        if t.len() != u.dim() || v.dim() != u.dim() {
            return Err(Error::LengthMismatch(t.len(), u.dim()));
        }
        if let Some(&bad) = t.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::NotSubunitary(bad));
        }
        Ok(Self(u.matrix() * diag_real(t) * v.matrix()))
    }

    /// Nearest subunitary matrix: singular values above one are set to one.
    /// Returns the largest original singular value as well.
    pub fn clip(m: &CMatrix) -> Result<(Self, f64)> {
        let svd = svd_desc(m)?;
        let top = svd.s[0];
        if top <= 1.0 {
            return Ok((Self(m.clone()), top));
        }
        let s: Vec<f64> = svd.s.iter().map(|v| v.min(1.0)).collect();
        Ok((Self(&svd.x * diag_real(&s) * &svd.y_adj), top))
    }

    /// Uniform loss `t U` with amplitude transmission `t`.
    pub fn uniform(u: &UnitaryMatrix, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::NotSubunitary(t));
        }
        Ok(Self(u.matrix() * c(t, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    /// `ell_i^2 = (L†L)_ii`, the squared length of each column.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        column_norms_sq(&self.0)
    }

    pub fn normalize_phases(&self) -> (TransferMatrix, Vec<usize>) {
        let (m, flags) = normalize_phases(&self.0);
        (TransferMatrix(m), flags)
    }
}

pub fn column_norms_sq(m: &CMatrix) -> Vec<f64> {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix,
/// with the column phases of `Q` corrected by the diagonal of `R`.
pub fn haar_random_unitary(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension("unitary of dimension 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re * s, im * s)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    UnitaryMatrix::new(q)
}

/// Polar and singular-value pieces of a transfer matrix:
/// `L = sqrt(L L†) V = W diag(t) W† V`.
#[derive(Debug, Clone)]
pub struct PolarParts {
    /// Unitary factor `V`.
    pub v: CMatrix,
    pub sqrt_llt: CMatrix,
    pub sqrt_ltl: CMatrix,
    /// Singular transmissions, descending.
    pub t: Vec<f64>,
    /// Output-side singular vectors.
    pub w: CMatrix,
    /// Input-side singular vectors as `Y†`, so that `L = W diag(t) Y†`.
    pub y_adj: CMatrix,
}

pub fn polar_decompose(l: &CMatrix) -> Result<PolarParts> {
    let n = ensure_square(l)?;
    if n == 0 {
        return Err(Error::InvalidDimension("empty matrix".into()));
    }
    let svd = svd_desc(l)?;
    if svd.s[0] > 1.0 + SUBUNITARY_TOL {
        return Err(Error::NotSubunitary(svd.s[0]));
    }
    let t: Vec<f64> = svd.s.iter().map(|&x| x.min(1.0)).collect();
    let d = diag_real(&t);
    let y = svd.y_adj.adjoint();
    Ok(PolarParts {
        v: &svd.x * &svd.y_adj,
        sqrt_llt: &svd.x * &d * svd.x.adjoint(),
        sqrt_ltl: &y * &d * &svd.y_adj,
        t,
        w: svd.x,
        y_adj: svd.y_adj,
    })
}

/// A `2M x 2M` unitary whose upper-left block is the transfer matrix.
#[derive(Debug, Clone)]
pub struct DilationMatrix {
    modes: usize,
    matrix: CMatrix,
}

impl DilationMatrix {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn l_block(&self) -> CMatrix {
        self.matrix.view((0, 0), (self.modes, self.modes)).into_owned()
    }

    pub fn r_block(&self) -> CMatrix {
        self.matrix
            .view((0, self.modes), (self.modes, self.modes))
            .into_owned()
    }

    /// The first `M` rows `[L R]`: where photons entering the network can go.
    pub fn top_rows(&self) -> CMatrix {
        self.matrix.rows(0, self.modes).into_owned()
    }
}

/// `1 - t^2` below this counts as no loss in the dilation.
const LOSSLESS_GAP: f64 = 1e-13;

/// Unitary dilation `[[L, sqrt(I - L L†)], [sqrt(I - L†L), -L†]]`.
///
/// Both square roots come from one SVD of `L`, which keeps the off-diagonal
/// blocks intertwined exactly even when some transmissions equal one.
pub fn unitary_dilation(l: &TransferMatrix) -> Result<DilationMatrix> {
    let m = l.dim();
    let parts = polar_decompose(l.matrix())?;
    // a lossless direction must not leak: rounding in t ~ 1 would otherwise
    // become a sqrt(eps) ~ 1e-8 coupling to the auxiliary modes
    let comp: Vec<f64> = parts
        .t
        .iter()
        .map(|&x| {
            let gap = 1.0 - x * x;
            if gap < LOSSLESS_GAP { 0.0 } else { gap.sqrt() }
        })
        .collect();
    let d = diag_real(&comp);
    let r = &parts.w * &d * parts.w.adjoint();
    let s = parts.y_adj.adjoint() * &d * &parts.y_adj;
    let mut u = CMatrix::zeros(2 * m, 2 * m);
    u.view_mut((0, 0), (m, m)).copy_from(l.matrix());
    u.view_mut((0, m), (m, m)).copy_from(&r);
    u.view_mut((m, 0), (m, m)).copy_from(&s);
    u.view_mut((m, m), (m, m)).copy_from(&(-l.matrix().adjoint()));
    let dev = unitarity_deviation(&u);
    if dev > UNITARY_TOL {
        // nearest unitary; moves the blocks by O(dev)
        let p = svd_desc(&u)?;
        u = &p.x * &p.y_adj;
        let dev = unitarity_deviation(&u);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
    }
    Ok(DilationMatrix { modes: m, matrix: u })
}

/// Average loss per mode, `1 - Tr(L†L) / M`.
pub fn loss_measure(l: &CMatrix) -> f64 {
    let m = l.nrows() as f64;
    1.0 - l.iter().map(|z| z.norm_sqr()).sum::<f64>() / m
}

/// Rotate each column so its diagonal entry is real and non-negative.
/// Columns whose diagonal is below `PHASE_TOL` are left alone and reported.
pub fn normalize_phases(l: &CMatrix) -> (CMatrix, Vec<usize>) {
    let mut out = l.clone();
    let mut flagged = Vec::new();
    for j in 0..l.ncols().min(l.nrows()) {
        let d = l[(j, j)];
        if d.norm() < PHASE_TOL {
            flagged.push(j);
            continue;
        }
        let ph = d.conj() / d.norm();
        for i in 0..l.nrows() {
            out[(i, j)] = l[(i, j)] * ph;
        }
        out[(j, j)] = c(d.norm(), 0.0);
    }
    (out, flagged)
}

/// Largest entrywise distance between two matrices after fixing both column phase conventions.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs_diff(&normalize_phases(a).0, &normalize_phases(b).0)
}

/// Largest entrywise distance after rotating each column of `a` onto the matching column of `b`.
/// Column phases are invisible to phase-insensitive probes, so this is the gauge-free error.
pub fn column_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    a.column_iter()
        .zip(b.column_iter())
        .map(|(x, y)| {
            let overlap = x.dotc(&y);
            let ph = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0, 0.0) };
            x.iter().zip(y.iter()).map(|(p, q)| (p * ph - q).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// On-disk matrix format: `{"dim": M, "entries": [[[re, im], ...], ...]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self {
            dim: m.nrows(),
            entries: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.dim || self.entries.iter().any(|r| r.len() != self.dim) {
            return Err(Error::Format(format!(
                "matrix entries do not form a {0}x{0} array",
                self.dim
            )));
        }
        Ok(CMatrix::from_fn(self.dim, self.dim, |i, j| {
            let [re, im] = self.entries[i][j];
            C64::new(re, im)
        }))
    }
}

pub fn read_transfer_matrix(path: &Path) -> Result<TransferMatrix> {
    let text = std::fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)?;
    TransferMatrix::new(file.to_matrix()?)
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    let text = serde_json::to_string_pretty(&MatrixFile::from_matrix(m))?;
    std::fs::write(path, text)?;
    Ok(())
}
