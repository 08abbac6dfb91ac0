//! Complex sparse matrices in compressed sparse-row form.
//!
//! CSR with sorted column indices is the single storage format of the crate:
//! row-wise access dominates both the incomplete factorization and the
//! matrix-vector product. Matrices are canonical by construction: row offsets
//! are non-decreasing, columns within a row strictly increase, and entries
//! whose value is exactly zero are never stored. Exact zeros produced by
//! cancellation (e.g. when assembling a superoperator) are pruned; there is
//! no epsilon pruning here — threshold dropping belongs to the factorization.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{BufRead, Write};

/// Complex double-precision sparse matrix, compressed sparse-row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<Complex64>,
}

/// Bandwidth and profile of a sparse matrix.
///
/// `upper_bandwidth` is the largest super-diagonal distance `j - i` over
/// stored entries, `lower_bandwidth` the largest sub-diagonal distance
/// `i - j`, and `total_bandwidth = upper + lower + 1` (the one counts the
/// main diagonal). The upper profile sums, over rows, the distance from the
/// diagonal to the rightmost entry of the row; the lower profile does the
/// same over columns for the lowest entry. Rows (columns) whose entries all
/// sit on the other side of the diagonal contribute zero, which keeps the
/// profile non-negative and matches the usual envelope definition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureMetrics {
    pub upper_bandwidth: usize,
    pub lower_bandwidth: usize,
    pub total_bandwidth: usize,
    pub upper_profile: usize,
    pub lower_profile: usize,
    pub total_profile: usize,
    pub nnz: usize,
}

/// A bijection on `{0, .., size-1}`; `forward[old] = new`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            forward: (0..n).collect(),
        }
    }

    /// Build from a forward map, checking it is a bijection.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut seen = vec![false; n];
        for &p in &forward {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(format!(
                    "not a bijection on 0..{n}: image {p} out of range or repeated"
                )));
            }
            seen[p] = true;
        }
        Ok(Permutation { forward })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// New position of old index `i`.
    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.forward.len()];
        for (old, &new) in self.forward.iter().enumerate() {
            inv[new] = old;
        }
        Permutation { forward: inv }
    }

    /// `self` then `other`: `result[i] = other[self[i]]`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "permutation size mismatch");
        Permutation {
            forward: self.forward.iter().map(|&p| other.forward[p]).collect(),
        }
    }

    /// Scatter `x` so that entry `i` lands at position `forward[i]`.
    pub fn permute_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.len(), "vector length mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        for (i, &xi) in x.iter().enumerate() {
            y[self.forward[i]] = xi;
        }
        y
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &p)| i == p)
    }
}

impl CsrMatrix {
    /// Matrix with no stored entries.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let triplets: Vec<(usize, usize, Complex64)> = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect();
        Self::from_triplets(diag.len(), diag.len(), &triplets)
            .expect("diagonal triplets are always in range")
    }

    /// Build from per-row column/value vectors that are already sorted,
    /// duplicate-free, and zero-free. The rows are drained so the peak
    /// memory stays near a single copy; callers are the factorization paths
    /// that construct large factors row by row.
    pub(crate) fn from_sorted_rows(
        nrows: usize,
        ncols: usize,
        rows_cols: &mut [Vec<usize>],
        rows_vals: &mut [Vec<Complex64>],
    ) -> CsrMatrix {
        debug_assert_eq!(rows_cols.len(), nrows);
        let total: usize = rows_cols.iter().map(|r| r.len()).sum();
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        for i in 0..nrows {
            debug_assert!(rows_cols[i].windows(2).all(|w| w[0] < w[1]));
            col_indices.append(&mut rows_cols[i]);
            values.append(&mut rows_vals[i]);
            rows_cols[i].shrink_to_fit();
            rows_vals[i].shrink_to_fit();
            row_offsets.push(col_indices.len());
        }
        let m = CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        };
        debug_assert!(m.is_canonical());
        m
    }

    /// Build a canonical matrix from (row, col, value) triplets.
    ///
    /// Duplicates are summed; entries that are exactly zero after summation
    /// are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, Complex64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidInput(format!(
                    "triplet ({i}, {j}) outside {nrows} x {ncols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, Complex64)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v.re != 0.0 || v.im != 0.0 {
                row_offsets[i + 1] += 1;
                col_indices.push(j);
                values.push(v);
            }
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    /// Stored value at (i, j), or zero.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Iterate stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals.iter()).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    /// Largest entry magnitude, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Infinity norm (max absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        let nrows = self
            .nrows
            .checked_mul(other.nrows)
            .ok_or(Error::IndexOverflow {
                nrows: self.nrows,
                ncols: other.nrows,
            })?;
        let ncols = self
            .ncols
            .checked_mul(other.ncols)
            .ok_or(Error::IndexOverflow {
                nrows: self.ncols,
                ncols: other.ncols,
            })?;
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for ia in 0..self.nrows {
            let (acols, avals) = self.row(ia);
            for ib in 0..other.nrows {
                let (bcols, bvals) = other.row(ib);
                for (&ja, &va) in acols.iter().zip(avals) {
                    let base = ja * other.ncols;
                    for (&jb, &vb) in bcols.iter().zip(bvals) {
                        let v = va * vb;
                        if v.re != 0.0 || v.im != 0.0 {
                            col_indices.push(base + jb);
                            values.push(v);
                        }
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut row_offsets = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            row_offsets[j + 1] += 1;
        }
        for j in 0..self.ncols {
            row_offsets[j + 1] += row_offsets[j];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![Complex64::new(0.0, 0.0); self.nnz()];
        let mut next = row_offsets.clone();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let slot = next[j];
                col_indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CsrMatrix {
        let mut t = self.transpose();
        for v in &mut t.values {
            *v = v.conj();
        }
        t
    }

    /// Entry-wise complex conjugate.
    pub fn conj(&self) -> CsrMatrix {
        let mut c = self.clone();
        for v in &mut c.values {
            *v = v.conj();
        }
        c
    }

    /// `self + other`, pruning exact cancellations.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "add: {}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let (j, v) = if q >= bc.len() || (p < ac.len() && ac[p] < bc[q]) {
                    let out = (ac[p], av[p]);
                    p += 1;
                    out
                } else if p >= ac.len() || bc[q] < ac[p] {
                    let out = (bc[q], bv[q]);
                    q += 1;
                    out
                } else {
                    let out = (ac[p], av[p] + bv[q]);
                    p += 1;
                    q += 1;
                    out
                };
                if v.re != 0.0 || v.im != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// `s * self`, pruning if `s` is zero.
    pub fn scale(&self, s: Complex64) -> CsrMatrix {
        if s.re == 0.0 && s.im == 0.0 {
            return CsrMatrix::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        let mut pruned = false;
        for v in &mut out.values {
            *v *= s;
            if v.re == 0.0 && v.im == 0.0 {
                pruned = true;
            }
        }
        if pruned {
            let triplets: Vec<_> = out.iter().collect();
            return CsrMatrix::from_triplets(out.nrows, out.ncols, &triplets)
                .expect("indices already validated");
        }
        out
    }

    /// `y = A x`. Allocation-free; `y` is overwritten.
    #[inline]
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) -> Result<()> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "matvec: matrix {}x{}, x len {}, y len {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            )));
        }
        for i in 0..self.nrows {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in s..e {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = acc;
        }
        Ok(())
    }

    /// Bandwidths and profiles. Errors on a matrix with no stored entries.
    pub fn structure_metrics(&self) -> Result<StructureMetrics> {
        if self.nnz() == 0 {
            return Err(Error::EmptyMatrix("bandwidth of an empty matrix is undefined"));
        }
        let mut ub = 0usize;
        let mut lb = 0usize;
        let mut up = 0usize;
        let mut col_low = vec![0usize; self.ncols];
        for i in 0..self.nrows {
            let (cols, _) = self.row(i);
            if cols.is_empty() {
                continue;
            }
            // columns are sorted: last is the rightmost, first the leftmost
            let right = *cols.last().unwrap();
            let left = cols[0];
            if right > i {
                ub = ub.max(right - i);
                up += right - i;
            }
            if left < i {
                lb = lb.max(i - left);
            }
            for &j in cols {
                if i > j {
                    col_low[j] = col_low[j].max(i - j);
                }
            }
        }
        let lp: usize = col_low.iter().sum();
        Ok(StructureMetrics {
            upper_bandwidth: ub,
            lower_bandwidth: lb,
            total_bandwidth: ub + lb + 1,
            upper_profile: up,
            lower_profile: lp,
            total_profile: up + lp,
            nnz: self.nnz(),
        })
    }

    /// Symmetric permutation `P A P^T`: entry (i, j) moves to (p[i], p[j]).
    pub fn permute_symmetric(&self, p: &Permutation) -> Result<CsrMatrix> {
        if !self.is_square() || p.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "permute_symmetric: matrix {}x{}, permutation size {}",
                self.nrows,
                self.ncols,
                p.len()
            )));
        }
        let mut row_counts = vec![0usize; self.nrows + 1];
        for i in 0..self.nrows {
            row_counts[p.apply(i) + 1] = self.row_offsets[i + 1] - self.row_offsets[i];
        }
        for i in 0..self.nrows {
            row_counts[i + 1] += row_counts[i];
        }
        let row_offsets = row_counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![Complex64::new(0.0, 0.0); self.nnz()];
        let mut scratch: Vec<(usize, Complex64)> = Vec::new();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            scratch.clear();
            scratch.extend(cols.iter().zip(vals).map(|(&j, &v)| (p.apply(j), v)));
            scratch.sort_unstable_by_key(|&(j, _)| j);
            let start = row_offsets[p.apply(i)];
            for (k, &(j, v)) in scratch.iter().enumerate() {
                col_indices[start + k] = j;
                values[start + k] = v;
            }
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Structural union of the matrix and its transpose, all values 1.
    pub fn symmetrized_pattern(&self) -> Result<CsrMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetrized_pattern requires a square matrix, got {}x{}",
                self.nrows, self.ncols
            )));
        }
        let one = Complex64::new(1.0, 0.0);
        let t = self.transpose();
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let (ac, _) = self.row(i);
            let (bc, _) = t.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let j = if q >= bc.len() || (p < ac.len() && ac[p] <= bc[q]) {
                    let j = ac[p];
                    if q < bc.len() && bc[q] == j {
                        q += 1;
                    }
                    p += 1;
                    j
                } else {
                    let j = bc[q];
                    q += 1;
                    j
                };
                col_indices.push(j);
                values.push(one);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Write in Matrix Market coordinate complex general format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
        }
        Ok(())
    }

    /// Read a Matrix Market coordinate complex general file.
    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<CsrMatrix> {
        let mut lines = r.lines().enumerate();
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::MatrixMarket {
                line: 1,
                msg: "empty input".into(),
            })
            .and_then(|(n, l)| Ok((n + 1, l?)))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens != ["%%MatrixMarket", "matrix", "coordinate", "complex", "general"] {
            return Err(Error::MatrixMarket {
                line: lineno,
                msg: format!("unsupported header: {header}"),
            });
        }
        let mut dims: Option<(usize, usize, usize)> = None;
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        for (n, line) in lines {
            let line = line?;
            let lineno = n + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            match dims {
                None => {
                    if fields.len() != 3 {
                        return Err(Error::MatrixMarket {
                            line: lineno,
                            msg: "expected 'nrows ncols nnz'".into(),
                        });
                    }
                    let parse = |s: &str| {
                        s.parse::<usize>().map_err(|_| Error::MatrixMarket {
                            line: lineno,
                            msg: format!("bad integer '{s}'"),
                        })
                    };
                    dims = Some((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
                }
                Some((nrows, ncols, _)) => {
                    if fields.len() != 4 {
                        return Err(Error::MatrixMarket {
                            line: lineno,
                            msg: "expected 'i j re im'".into(),
                        });
                    }
                    let i: usize = fields[0].parse().map_err(|_| Error::MatrixMarket {
                        line: lineno,
                        msg: format!("bad row index '{}'", fields[0]),
                    })?;
                    let j: usize = fields[1].parse().map_err(|_| Error::MatrixMarket {
                        line: lineno,
                        msg: format!("bad column index '{}'", fields[1]),
                    })?;
                    let re: f64 = fields[2].parse().map_err(|_| Error::MatrixMarket {
                        line: lineno,
                        msg: format!("bad real part '{}'", fields[2]),
                    })?;
                    let im: f64 = fields[3].parse().map_err(|_| Error::MatrixMarket {
                        line: lineno,
                        msg: format!("bad imaginary part '{}'", fields[3]),
                    })?;
                    if i == 0 || j == 0 || i > nrows || j > ncols {
                        return Err(Error::MatrixMarket {
                            line: lineno,
                            msg: format!("index ({i}, {j}) outside {nrows} x {ncols}"),
                        });
                    }
                    triplets.push((i - 1, j - 1, Complex64::new(re, im)));
                }
            }
        }
        let (nrows, ncols, nnz) = dims.ok_or(Error::MatrixMarket {
            line: 0,
            msg: "missing dimension line".into(),
        })?;
        if triplets.len() != nnz {
            return Err(Error::MatrixMarket {
                line: 0,
                msg: format!("expected {} entries, found {}", nnz, triplets.len()),
            });
        }
        CsrMatrix::from_triplets(nrows, ncols, &triplets)
    }

    /// Debug check of the canonical-form invariants.
    pub fn is_canonical(&self) -> bool {
        if self.row_offsets.len() != self.nrows + 1
            || *self.row_offsets.last().unwrap() != self.values.len()
            || self.col_indices.len() != self.values.len()
        {
            return false;
        }
        for i in 0..self.nrows {
            if self.row_offsets[i] > self.row_offsets[i + 1] {
                return false;
            }
            let (cols, vals) = self.row(i);
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return false;
                }
            }
            if cols.iter().any(|&j| j >= self.ncols) {
                return false;
            }
            if vals.iter().any(|v| v.re == 0.0 && v.im == 0.0) {
                return false;
            }
        }
        true
    }
}
