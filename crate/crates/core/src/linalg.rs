//! Small dense complex linear-algebra helpers shared by the other modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest elementwise modulus of `U†U - I`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    max_abs_diff(&g, &CMatrix::identity(u.nrows(), u.ncols()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
/// Negative eigenvalues from rounding are clamped to zero.
pub fn hermitian_sqrt(h: &CMatrix) -> Result<CMatrix> {
    hermitian_map(h, |x| x.max(0.0).sqrt())
}

/// Apply `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_map(h: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let n = ensure_square(h)?;
    if n == 0 {
        return Ok(h.clone());
    }
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = f(lam);
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(scaled * eig.eigenvectors.adjoint())
}

/// Eigenpairs of a Hermitian matrix sorted by descending eigenvalue.
pub fn hermitian_eigen_desc(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = ensure_square(h)?;
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Singular value decomposition `A = X diag(s) Y†` with `s` descending.
pub struct SortedSvd {
    pub x: CMatrix,
    pub s: Vec<f64>,
    pub y_adj: CMatrix,
}

pub fn svd_desc(a: &CMatrix) -> Result<SortedSvd> {
    let n = ensure_square(a)?;
    let svd = a.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::InvalidDimension("svd failed to produce U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::InvalidDimension("svd failed to produce V".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| svd.singular_values[q].total_cmp(&svd.singular_values[p]));
    Ok(SortedSvd {
        x: CMatrix::from_fn(n, n, |i, j| u[(i, order[j])]),
        s: order.iter().map(|&k| svd.singular_values[k]).collect(),
        y_adj: CMatrix::from_fn(n, n, |i, j| v_t[(order[i], j)]),
    })
}

pub(crate) fn diag_real(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        d.len(),
        d.iter().map(|&x| c(x, 0.0)),
    ))
}

/// `ln |det A|` through an LU factorisation.
pub fn ln_abs_det(a: &CMatrix) -> Result<f64> {
    ensure_square(a)?;
    let lu = a.clone().lu();
    let u = lu.u();
    Ok(u.diagonal().iter().map(|z| z.norm().ln()).sum())
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `ln C(n + k - 1, n)`, the number of ways to place `n` photons in `k` modes.
pub fn ln_multiset(n: u64, k: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    (1..=n)
        .map(|j| ((k - 1 + j) as f64 / j as f64).ln())
        .sum()
}

pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}
