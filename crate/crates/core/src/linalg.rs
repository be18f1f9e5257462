//! Packed lower-triangular Cholesky factorization with incremental row
//! extension, sized for the exact-GP workloads in this crate (n up to a few
//! thousand). Appending a batch of rows costs O(k n^2) instead of a full
//! O(n^3) refactorization, which is what keeps the 1 Hz model refits cheap.

use alloc::vec::Vec;
use core::fmt;


#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NotSpd;

impl fmt::Display for NotSpd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "matrix is not symmetric positive-definite")
    }
}

impl core::error::Error for NotSpd {}

/// Lower-triangular Cholesky factor stored packed row-major: row `i`
/// occupies `l[i*(i+1)/2 .. i*(i+1)/2 + i + 1]`.
#[derive(Clone, Debug, Default)]
pub struct PackedChol {
    n: usize,
    l: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl PackedChol {
    pub fn empty() -> Self {
        PackedChol { n: 0, l: Vec::new() }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row `i` of the factor (length `i + 1`).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.l[row_start(i)..row_start(i) + i + 1]
    }

    /// Factor a full symmetric matrix given row-major (n x n) storage.
    pub fn factor(matrix: &[f64], n: usize) -> Result<Self, NotSpd> {
        let mut chol = PackedChol::empty();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| matrix[i * n..i * n + i + 1].to_vec()).collect();
        chol.extend_rows(&rows)?;
        Ok(chol)
    }

    /// Append `rows.len()` new rows to the factored matrix. `rows[t]` holds
    /// the lower-triangular part of the new symmetric rows: the cross terms
    /// against all previously factored columns followed by the terms against
    /// the new columns up to and including the diagonal, i.e. length
    /// `n + t + 1` where `n` is the size before the call.
    pub fn extend_rows(&mut self, rows: &[Vec<f64>]) -> Result<(), NotSpd> {
        let n0 = self.n;
        let start_len = self.l.len();
        for (t, krow) in rows.iter().enumerate() {
            let i = n0 + t;
            debug_assert_eq!(krow.len(), i + 1);
            self.l.extend_from_slice(krow);
            let base = row_start(i);
            // Forward-substitute against all existing rows.
            for j in 0..i {
                let lj = row_start(j);
                let mut s = self.l[base + j];
                // s -= dot(L[i, :j], L[j, :j])
                for p in 0..j {
                    s -= self.l[base + p] * self.l[lj + p];
                }
                self.l[base + j] = s / self.l[lj + j];
            }
            let mut d = self.l[base + i];
            for p in 0..i {
                d -= self.l[base + p] * self.l[base + p];
            }
            if !(d > 0.0) || !d.is_finite() {
                // Roll back so the factor stays consistent on failure.
                self.l.truncate(start_len);
                self.n = n0;
                return Err(NotSpd);
            }
            self.l[base + i] = d.sqrt();
            self.n = i + 1;
        }
        Ok(())
    }

    /// Solve L x = b in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let base = row_start(i);
            let mut s = b[i];
            for j in 0..i {
                s -= self.l[base + j] * b[j];
            }
            b[i] = s / self.l[base + i];
        }
    }

    /// Solve L^T x = b in place.
    pub fn solve_lower_transpose(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for j in i + 1..self.n {
                s -= self.l[row_start(j) + i] * b[j];
            }
            b[i] = s / self.l[row_start(i) + i];
        }
    }

    /// Solve (L L^T) x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_lower_transpose(b);
    }
}
