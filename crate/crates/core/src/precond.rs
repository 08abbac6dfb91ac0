//! Dual-threshold incomplete LU factorization with row pivoting (ILUTP) and
//! the preconditioner condition estimate.
//!
//! The factorization is the row-wise working-vector elimination: each row is
//! loaded into a sparse accumulator, eliminated against the already-finished
//! pivot rows in ascending pivot order, then dropped and capped:
//!
//! * entries smaller in magnitude than `drop_tol` times the infinity norm of
//!   the original row are discarded (the diagonal never is);
//! * at most `(1 + fill_factor) * nnz(row)` entries are retained per row,
//!   keeping the largest, so total fill never exceeds
//!   `fill_factor * nnz(input)`;
//! * a multiplier below the same threshold is dropped before its update is
//!   applied, which keeps the factor sparse at the cost of accuracy — the
//!   trade that makes an incomplete factorization's stability depend on the
//!   ordering quality.
//!
//! Pivoting permutes rows: when the diagonal candidate of the working row is
//! smaller than `pivot_threshold` times the largest remaining entry (or is
//! exactly zero), the row is deferred and the next unplaced row is tried, so
//! the factors satisfy `P A = L U` up to the dropped entries, exactly at
//! `drop_tol = 0`. Deferral re-eliminates rows, so thresholds above zero are
//! an expensive stability option; the default of zero pivots only to escape
//! exact zero pivots.
//!
//! With `drop_tol = 0` and unbounded fill the factorization is the complete
//! LU, which is how the direct solver is realized.

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Permutation};
use num_complex::Complex64;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Dropping and pivoting parameters.
#[derive(Clone, Copy, Debug)]
pub struct IluConfig {
    /// Drop tolerance `d`; entries below `d * ||row||_inf` are discarded.
    pub drop_tol: f64,
    /// Allowed fill `p`: at most `p * nnz(input)` fill-in entries overall.
    pub fill_factor: f64,
    /// Row is deferred when its diagonal candidate is below this fraction of
    /// the largest remaining working-row entry. Zero pivots only on exact
    /// zeros.
    pub pivot_threshold: f64,
}

impl Default for IluConfig {
    fn default() -> Self {
        IluConfig {
            drop_tol: 1e-4,
            fill_factor: 100.0,
            pivot_threshold: 0.0,
        }
    }
}

impl IluConfig {
    /// Complete LU: no dropping, unbounded fill.
    pub fn direct() -> Self {
        IluConfig {
            drop_tol: 0.0,
            fill_factor: f64::INFINITY,
            pivot_threshold: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.drop_tol >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "drop_tol must be non-negative, got {}",
                self.drop_tol
            )));
        }
        if !(self.fill_factor >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "fill_factor must be at least 1, got {}",
                self.fill_factor
            )));
        }
        if !(0.0..=1.0).contains(&self.pivot_threshold) {
            return Err(Error::InvalidInput(format!(
                "pivot_threshold must lie in [0, 1], got {}",
                self.pivot_threshold
            )));
        }
        Ok(())
    }
}

/// Incomplete factors `P A ≈ L U` plus bookkeeping.
#[derive(Clone, Debug)]
pub struct IluFactors {
    /// Unit lower triangular factor; the unit diagonal is implicit.
    pub lower: CsrMatrix,
    /// Upper triangular factor with nonzero diagonal.
    pub upper: CsrMatrix,
    /// Row permutation: `row_pivots.apply(original_row) = pivot_position`.
    pub row_pivots: Permutation,
    /// Stored entries beyond the input's count.
    pub fill_in_count: usize,
    /// `[nnz(L) + nnz(U)] / nnz(input)`.
    pub fill_factor_achieved: f64,
    /// `||(L U)^{-1} e||_inf` with `e = (1, 1, ..)`; a lower bound on the
    /// conditioning of the approximate inverse.
    pub condest: f64,
    /// `row_of_position[t]` is the original row eliminated at position `t`.
    row_of_position: Vec<usize>,
}

struct WorkingRow {
    values: Vec<Complex64>,
    touched: Vec<usize>,
    in_pattern: Vec<bool>,
    queued: Vec<bool>,
    heap: BinaryHeap<Reverse<usize>>,
}

impl WorkingRow {
    fn new(n: usize) -> Self {
        WorkingRow {
            values: vec![Complex64::new(0.0, 0.0); n],
            touched: Vec::new(),
            in_pattern: vec![false; n],
            queued: vec![false; n],
            heap: BinaryHeap::new(),
        }
    }

    fn clear(&mut self) {
        for &j in &self.touched {
            self.values[j] = Complex64::new(0.0, 0.0);
            self.in_pattern[j] = false;
            self.queued[j] = false;
        }
        self.touched.clear();
        self.heap.clear();
    }
}

/// Multipliers are dropped, and their updates skipped, below this fraction of
/// the row's drop threshold. Skipped updates are what couples factor quality
/// to the ordering; the fraction balances that sensitivity against the
/// stability of the factors at larger sizes.
const MULT_DROP_SCALE: f64 = 1.0;

/// Outcome of eliminating one candidate row against the finished pivots.
struct EliminatedRow {
    /// (column, value) pairs, unordered; includes multipliers (columns below
    /// the pivot position) and the updated remainder.
    entries: Vec<(usize, Complex64)>,
    /// Value at the natural diagonal column (the position being filled).
    diag: Complex64,
    /// Largest magnitude among not-yet-pivoted columns.
    max_candidate: f64,
}

/// ILUTP factorization of a square canonical matrix.
pub fn ilutp(a: &CsrMatrix, cfg: &IluConfig) -> Result<IluFactors> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "ilutp requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    for r in 0..n {
        if a.row(r).0.is_empty() {
            return Err(Error::FactorizationBreakdown {
                row: r,
                reason: "structurally empty row".into(),
            });
        }
    }

    // per-row thresholds and budgets, fixed by the original matrix
    let mut drop_threshold = vec![0.0f64; n];
    let mut budget = vec![usize::MAX; n];
    for r in 0..n {
        let (_, vals) = a.row(r);
        let inf = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        drop_threshold[r] = cfg.drop_tol * inf;
        if cfg.fill_factor.is_finite() {
            budget[r] = (((1.0 + cfg.fill_factor) * vals.len() as f64).floor() as usize).max(1);
        }
    }

    // factors indexed by pivot position; pivot column of position t is t
    let mut u_diag: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    let mut u_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut u_vals: Vec<Vec<Complex64>> = vec![Vec::new(); n];
    let mut l_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut l_vals: Vec<Vec<Complex64>> = vec![Vec::new(); n];

    let mut row_of_position = vec![usize::MAX; n];
    let mut work = WorkingRow::new(n);
    // unplaced rows as a singly linked skip list so the common no-deferral
    // path costs O(1) per position
    let mut next_unplaced: Vec<usize> = (1..=n).collect();
    let mut head = 0usize;

    for t in 0..n {
        let mut chosen: Option<(usize, EliminatedRow)> = None;
        let mut best: Option<(f64, usize)> = None;
        let mut prev: Option<usize> = None;
        let mut cursor = head;
        while cursor < n {
            let r = cursor;
            let row = eliminate_row(
                a,
                r,
                t,
                &u_diag,
                &u_cols,
                &u_vals,
                MULT_DROP_SCALE * drop_threshold[r],
                &mut work,
            )?;
            let dmag = row.diag.norm();
            let pass = dmag > 0.0 && dmag >= cfg.pivot_threshold * row.max_candidate;
            if pass {
                // unlink r
                match prev {
                    None => head = next_unplaced[r],
                    Some(p) => next_unplaced[p] = next_unplaced[r],
                }
                chosen = Some((r, row));
                break;
            }
            if best.map_or(true, |(bm, _)| dmag > bm) {
                best = Some((dmag, r));
            }
            prev = Some(cursor);
            cursor = next_unplaced[cursor];
        }
        let (r, row) = match chosen {
            Some(picked) => picked,
            None => {
                // no row passed the threshold; settle for the best nonzero pivot
                let (bm, br) = best.expect("unplaced rows remain");
                if bm == 0.0 {
                    return Err(Error::FactorizationBreakdown {
                        row: t,
                        reason: "zero pivot with no admissible row swap".into(),
                    });
                }
                // unlink br
                if head == br {
                    head = next_unplaced[br];
                } else {
                    let mut p = head;
                    while next_unplaced[p] != br {
                        p = next_unplaced[p];
                    }
                    next_unplaced[p] = next_unplaced[br];
                }
                let row = eliminate_row(
                    a,
                    br,
                    t,
                    &u_diag,
                    &u_cols,
                    &u_vals,
                    MULT_DROP_SCALE * drop_threshold[br],
                    &mut work,
                )?;
                (br, row)
            }
        };

        // dropping: magnitude test on everything except the diagonal
        let tol = drop_threshold[r];
        let mut kept: Vec<(usize, Complex64)> = row
            .entries
            .into_iter()
            .filter(|&(j, v)| j != t && v.norm() >= tol)
            .collect();
        // fill cap: keep the largest survivors, diagonal reserved
        let cap = budget[r];
        if kept.len() + 1 > cap {
            let keep = cap - 1;
            if keep == 0 {
                kept.clear();
            } else if kept.len() > keep {
                kept.select_nth_unstable_by(keep - 1, |x, y| y.1.norm().total_cmp(&x.1.norm()));
                kept.truncate(keep);
            }
        }
        kept.push((t, row.diag));
        kept.sort_unstable_by_key(|&(j, _)| j);

        // exact allocations: these rows live for the whole factorization
        let n_lower = kept.iter().take_while(|&&(j, _)| j < t).count();
        l_cols[t] = Vec::with_capacity(n_lower);
        l_vals[t] = Vec::with_capacity(n_lower);
        u_cols[t] = Vec::with_capacity(kept.len() - n_lower);
        u_vals[t] = Vec::with_capacity(kept.len() - n_lower);
        for (j, v) in kept {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite("ilutp"));
            }
            if j < t {
                l_cols[t].push(j);
                l_vals[t].push(v);
            } else if j == t {
                u_diag[t] = v;
                u_cols[t].push(j);
                u_vals[t].push(v);
            } else {
                u_cols[t].push(j);
                u_vals[t].push(v);
            }
        }
        row_of_position[t] = r;
    }

    // assemble CSR factors directly; rows are already sorted and canonical,
    // and draining them keeps the peak memory near one copy of the factors
    let lower = CsrMatrix::from_sorted_rows(n, n, &mut l_cols, &mut l_vals);
    let upper = CsrMatrix::from_sorted_rows(n, n, &mut u_cols, &mut u_vals);
    let mut forward = vec![0usize; n];
    for (t, &r) in row_of_position.iter().enumerate() {
        forward[r] = t;
    }
    let row_pivots = Permutation::from_forward(forward)?;

    let stored = lower.nnz() + upper.nnz();
    let mut factors = IluFactors {
        lower,
        upper,
        row_pivots,
        fill_in_count: stored.saturating_sub(a.nnz()),
        fill_factor_achieved: stored as f64 / a.nnz() as f64,
        condest: 0.0,
        row_of_position,
    };
    factors.condest = condest(&factors)?;
    Ok(factors)
}

/// Load row `r` of `a` into the working vector and eliminate against pivot
/// positions `< t`. Multipliers below `mult_threshold` are dropped and their
/// updates skipped.
#[allow(clippy::too_many_arguments)]
fn eliminate_row(
    a: &CsrMatrix,
    r: usize,
    t: usize,
    u_diag: &[Complex64],
    u_cols: &[Vec<usize>],
    u_vals: &[Vec<Complex64>],
    mult_threshold: f64,
    work: &mut WorkingRow,
) -> Result<EliminatedRow> {
    work.clear();
    let (cols, vals) = a.row(r);
    for (&j, &v) in cols.iter().zip(vals) {
        work.values[j] = v;
        work.in_pattern[j] = true;
        work.touched.push(j);
        if j < t {
            work.heap.push(Reverse(j));
            work.queued[j] = true;
        }
    }
    while let Some(Reverse(k)) = work.heap.pop() {
        let wk = work.values[k];
        if wk.re == 0.0 && wk.im == 0.0 {
            continue;
        }
        let lik = wk / u_diag[k];
        if lik.norm() < mult_threshold {
            // drop the multiplier and skip its update
            work.values[k] = Complex64::new(0.0, 0.0);
            continue;
        }
        if !(lik.re.is_finite() && lik.im.is_finite()) {
            return Err(Error::NonFinite("ilutp elimination"));
        }
        work.values[k] = lik;
        // u row k: first entry is the diagonal, skip it
        for (idx, &j) in u_cols[k].iter().enumerate().skip(1) {
            let upd = lik * u_vals[k][idx];
            if work.in_pattern[j] {
                work.values[j] -= upd;
            } else {
                work.values[j] = -upd;
                work.in_pattern[j] = true;
                work.touched.push(j);
                if j < t && !work.queued[j] {
                    work.heap.push(Reverse(j));
                    work.queued[j] = true;
                }
            }
        }
    }
    let mut entries = Vec::with_capacity(work.touched.len());
    let mut diag = Complex64::new(0.0, 0.0);
    let mut max_candidate = 0.0f64;
    for &j in &work.touched {
        let v = work.values[j];
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        if j == t {
            diag = v;
        }
        if j >= t {
            max_candidate = max_candidate.max(v.norm());
        }
        if j != t {
            entries.push((j, v));
        }
    }
    Ok(EliminatedRow {
        entries,
        diag,
        max_candidate,
    })
}

/// `||(L U)^{-1} e||_inf` for `e = (1, 1, ..)`. The permutation leaves the
/// all-ones vector unchanged, so this is exactly the preconditioner applied
/// to `e`.
pub fn condest(f: &IluFactors) -> Result<f64> {
    let n = f.lower.nrows();
    let mut y = vec![Complex64::new(1.0, 0.0); n];
    solve_in_place(f, &mut y)?;
    Ok(y.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

impl IluFactors {
    /// `M^{-1} v` through the pivoted triangular factors, written to `out`.
    /// No allocation beyond the caller's buffers.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.lower.nrows();
        if v.len() != n || out.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "apply: factors {}x{}, v len {}, out len {}",
                n,
                n,
                v.len(),
                out.len()
            )));
        }
        for t in 0..n {
            out[t] = v[self.row_of_position[t]];
        }
        solve_in_place(self, out)
    }

    /// Convenience allocating wrapper around [`IluFactors::apply`].
    pub fn apply_alloc(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply(v, &mut out)?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }
}

/// Solve `L U x = x` in place (`x` holds the permuted right-hand side).
fn solve_in_place(f: &IluFactors, x: &mut [Complex64]) -> Result<()> {
    let n = x.len();
    // forward: unit lower triangular
    for t in 0..n {
        let (cols, vals) = f.lower.row(t);
        let mut acc = x[t];
        for (&k, &l) in cols.iter().zip(vals) {
            acc -= l * x[k];
        }
        x[t] = acc;
    }
    // backward: upper triangular, diagonal first in each row
    for t in (0..n).rev() {
        let (cols, vals) = f.upper.row(t);
        debug_assert_eq!(cols[0], t, "upper diagonal must lead its row");
        let mut acc = x[t];
        for (&j, &u) in cols.iter().zip(vals).skip(1) {
            acc -= u * x[j];
        }
        x[t] = acc / vals[0];
    }
    Ok(())
}
