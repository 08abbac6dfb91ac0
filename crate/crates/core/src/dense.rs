//! Small dense complex matrices.
//!
//! Used for the dense oracle solver, density-matrix post-processing, and
//! partial traces. Deliberately minimal: the production path is sparse, and
//! dense objects only appear at Hilbert-space dimension (not Liouvillian
//! dimension) or in cross-checking solvers on small systems.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use num_complex::Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![Complex64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn from_sparse(m: &CsrMatrix) -> Self {
        let mut d = DenseMatrix::zeros(m.nrows(), m.ncols());
        for (i, j, v) in m.iter() {
            d.data[i * m.ncols() + j] = v;
        }
        d
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        DenseMatrix { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Largest entry-wise magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `(self + self^dagger) / 2`.
    pub fn hermitize(&self) -> DenseMatrix {
        assert_eq!(self.nrows, self.ncols, "hermitize requires square");
        let mut out = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                let v = (self.get(i, j) + self.get(j, i).conj()) * 0.5;
                out.set(i, j, v);
            }
        }
        out
    }
}

/// LU factorization with partial pivoting of a dense square matrix.
///
/// Independent of the sparse factorization path; serves as the dense oracle.
pub struct DenseLu {
    n: usize,
    lu: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl DenseLu {
    pub fn factor(m: &DenseMatrix) -> Result<DenseLu> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "dense LU requires square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut lu = m.data.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let mut pk = k;
            let mut best = lu[k * n + k].norm();
            for i in (k + 1)..n {
                let mag = lu[i * n + k].norm();
                if mag > best {
                    best = mag;
                    pk = i;
                }
            }
            if best == 0.0 {
                return Err(Error::FactorizationBreakdown {
                    row: k,
                    reason: "singular dense matrix".into(),
                });
            }
            pivots[k] = pk;
            if pk != k {
                for j in 0..n {
                    lu.swap(k * n + j, pk * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= l * u;
                }
            }
        }
        Ok(DenseLu { n, lu, pivots })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "dense solve: matrix {}x{}, rhs len {}",
                self.n,
                self.n,
                b.len()
            )));
        }
        let n = self.n;
        let mut x = b.to_vec();
        // swaps interleave with a lazy forward substitution: position i is
        // only read once all pivoting below it is irrelevant to it
        for i in 0..n {
            x.swap(i, self.pivots[i]);
            let mut s = x[i];
            for (j, &l) in self.lu[i * n..i * n + i].iter().enumerate() {
                s -= l * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dense_lu_solves_known_system() {
        // [[2, 1], [1, 3i]] x = b with x = [1, -i]
        let m = DenseMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 3.0)],
        ]);
        let x_true = vec![c(1.0, 0.0), c(0.0, -1.0)];
        let mut b = vec![c(0.0, 0.0); 2];
        for i in 0..2 {
            for j in 0..2 {
                b[i] += m.get(i, j) * x_true[j];
            }
        }
        let lu = DenseLu::factor(&m).unwrap();
        let x = lu.solve(&b).unwrap();
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).norm() < 1e-14);
        }
    }

    #[test]
    fn dense_lu_rejects_singular() {
        let m = DenseMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ]);
        assert!(DenseLu::factor(&m).is_err());
    }

    #[test]
    fn hermitize_produces_hermitian() {
        let m = DenseMatrix::from_rows(&[
            vec![c(1.0, 0.5), c(2.0, -1.0)],
            vec![c(0.0, 3.0), c(4.0, -0.5)],
        ]);
        let h = m.hermitize();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h.get(i, j) - h.get(j, i).conj()).norm() < 1e-15);
            }
        }
    }
}
