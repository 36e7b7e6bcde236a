//! Matrix permanents by Ryser's formula, stepping subsets in Gray-code order.

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};

/// Above this size the `2^n` sum is not worth attempting.
pub const MAX_PERMANENT_DIM: usize = 30;

pub fn permanent(a: &CMatrix) -> Result<C64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    if n > MAX_PERMANENT_DIM {
        return Err(Error::UnsupportedScale(format!("permanent of a {n}x{n} matrix")));
    }
    Ok(ryser(n, |i, j| a[(i, j)]))
}

/// Permanent of the `n x n` matrix with entries `entry(i, j)`.
pub(crate) fn ryser(n: usize, entry: impl Fn(usize, usize) -> C64) -> C64 {
    if n == 0 {
        return c(1.0, 0.0);
    }
    let mut row_sums = vec![c(0.0, 0.0); n];
    let mut total = c(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        if gray & (1 << j) != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += entry(i, j);
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= entry(i, j);
            }
        }
        let prod: C64 = row_sums.iter().product();
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}
