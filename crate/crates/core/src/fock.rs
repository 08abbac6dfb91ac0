//! Truncated-Fock-basis operators for the two bosonic modes.
//!
//! The joint Hilbert space is cavity ⊗ mechanics, i.e. a joint basis state
//! |n_c, n_m⟩ has index `n_c * n_mech + n_m`. The ordering convention is fixed
//! once here; every downstream structure number (and the reordering results)
//! depends on it.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use num_complex::Complex64;

/// Fock-space truncation sizes for the cavity and mechanical modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationConfig {
    pub n_cavity: usize,
    pub n_mech: usize,
}

impl TruncationConfig {
    pub fn new(n_cavity: usize, n_mech: usize) -> Result<Self> {
        if n_cavity < 2 || n_mech < 2 {
            return Err(Error::InvalidInput(format!(
                "truncation sizes must be at least 2, got {n_cavity} and {n_mech}"
            )));
        }
        Ok(TruncationConfig { n_cavity, n_mech })
    }

    /// Dimension of the joint Hilbert space, `n_cavity * n_mech`.
    pub fn hilbert_dim(&self) -> usize {
        self.n_cavity * self.n_mech
    }

    /// Dimension of the vectorized density matrix, `hilbert_dim^2`.
    pub fn liouvillian_dim(&self) -> usize {
        self.hilbert_dim() * self.hilbert_dim()
    }
}

/// Annihilation operator on an `n`-level truncated Fock space:
/// entries `sqrt(k)` at `(k-1, k)`.
pub fn destroy(n: usize) -> Result<CsrMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "destroy requires at least 2 levels, got {n}"
        )));
    }
    let triplets: Vec<(usize, usize, Complex64)> = (1..n)
        .map(|k| (k - 1, k, Complex64::new((k as f64).sqrt(), 0.0)))
        .collect();
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Creation operator, the transpose of [`destroy`].
pub fn create(n: usize) -> Result<CsrMatrix> {
    Ok(destroy(n)?.transpose())
}

/// Number operator `a†a = diag(0, 1, .., n-1)`, built directly.
pub fn number(n: usize) -> Result<CsrMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "number requires at least 2 levels, got {n}"
        )));
    }
    let diag: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64, 0.0)).collect();
    Ok(CsrMatrix::from_diagonal(&diag))
}

/// Embed a cavity operator in the joint space: `op ⊗ I_mech`.
pub fn embed_cavity(op: &CsrMatrix, trunc: TruncationConfig) -> Result<CsrMatrix> {
    if op.nrows() != trunc.n_cavity || op.ncols() != trunc.n_cavity {
        return Err(Error::DimensionMismatch(format!(
            "cavity operator is {}x{}, truncation has {} cavity levels",
            op.nrows(),
            op.ncols(),
            trunc.n_cavity
        )));
    }
    op.kron(&CsrMatrix::identity(trunc.n_mech))
}

/// Embed a mechanical operator in the joint space: `I_cavity ⊗ op`.
pub fn embed_mech(op: &CsrMatrix, trunc: TruncationConfig) -> Result<CsrMatrix> {
    if op.nrows() != trunc.n_mech || op.ncols() != trunc.n_mech {
        return Err(Error::DimensionMismatch(format!(
            "mechanical operator is {}x{}, truncation has {} mechanical levels",
            op.nrows(),
            op.ncols(),
            trunc.n_mech
        )));
    }
    CsrMatrix::identity(trunc.n_cavity).kron(op)
}
