//! Assembly of the optomechanical Hamiltonian, the Lindblad superoperator
//! matrix, and the trace-constrained linear system.
//!
//! All rates are in units of the mechanical frequency, so `omega_m = 1` sets
//! the scale. Vectorization is column stacking: `vec(A ρ B) = (B^T ⊗ A) vec(ρ)`,
//! giving
//!
//! * unitary part `-i (I ⊗ H - H^T ⊗ I)`,
//! * for each collapse operator `C` with rate `r`:
//!   `r (conj(C) ⊗ C - ½ I ⊗ C†C - ½ (C†C)^T ⊗ I)`.
//!
//! The three collapse channels are cavity decay at `κ`, mechanical damping at
//! `Γ_m (1 + n_th)`, and thermal excitation at `Γ_m n_th` with `Γ_m = ω_m/Q_m`.
//! A channel whose rate is exactly zero contributes no structure; the tiny
//! occupation `n_th = 1e-15` therefore restores the thermal entries' pattern
//! while leaving the solution unchanged at double precision.

use crate::error::{Error, Result};
use crate::fock::{self, TruncationConfig};
use crate::sparse::CsrMatrix;
use num_complex::Complex64;

/// Physical parameters of the driven optomechanical system, in units of the
/// mechanical frequency.
#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    /// Pump-cavity detuning Δ.
    pub delta: f64,
    /// Mechanical frequency; the unit of every rate, normally 1.
    pub omega_m: f64,
    /// Single-photon radiation-pressure coupling g₀.
    pub g0: f64,
    /// Pump amplitude E.
    pub drive: f64,
    /// Cavity decay rate κ.
    pub kappa: f64,
    /// Mechanical quality factor Q_m; the damping rate is ω_m/Q_m.
    pub q_mech: f64,
    /// Thermal occupation of the mechanical bath.
    pub n_th: f64,
    /// Fock-space truncation.
    pub trunc: TruncationConfig,
}

impl ModelParams {
    /// Parameters with zero coupling and drive and a cold bath; callers set
    /// the fields they need.
    pub fn new(trunc: TruncationConfig) -> Self {
        ModelParams {
            delta: 0.0,
            omega_m: 1.0,
            g0: 0.0,
            drive: 0.0,
            kappa: 0.1,
            q_mech: 1e4,
            n_th: 0.0,
            trunc,
        }
    }

    /// Mechanical damping rate `Γ_m = ω_m / Q_m`.
    pub fn gamma_m(&self) -> f64 {
        self.omega_m / self.q_mech
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.q_mech > 0.0) {
            return Err(Error::InvalidInput(format!(
                "q_mech must be positive, got {}",
                self.q_mech
            )));
        }
        if !(self.n_th >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "n_th must be non-negative, got {}",
                self.n_th
            )));
        }
        for (name, v) in [
            ("delta", self.delta),
            ("omega_m", self.omega_m),
            ("g0", self.g0),
            ("drive", self.drive),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

/// The trace-constrained system `L̃ ρ⃗ = (w, 0, ..)^T`.
#[derive(Clone, Debug)]
pub struct ConstrainedLiouvillian {
    /// The Lindblad generator `L`.
    pub liouvillian: CsrMatrix,
    /// `T`: ones along row 0 at the columns of the diagonal elements of ρ.
    pub trace_matrix: CsrMatrix,
    /// Weight `w`, the arithmetic mean of the diagonal of `L`.
    pub weight: Complex64,
    /// `L̃ = L + w T`.
    pub constrained: CsrMatrix,
    /// Right-hand side `(w, 0, ..)^T`.
    pub rhs: Vec<Complex64>,
    pub hilbert_dim: usize,
    /// Set when the diagonal mean was too close to zero and the magnitude
    /// mean was used for `w` instead.
    pub weight_fallback: bool,
}

/// Joint-space Hamiltonian
/// `H = -Δ a†a + ω_m b†b + g₀ (b + b†) a†a + E (a + a†)`, Hermitian.
pub fn build_hamiltonian(p: &ModelParams) -> Result<CsrMatrix> {
    p.validate()?;
    let t = p.trunc;
    let num_c = fock::number(t.n_cavity)?;
    let num_m = fock::number(t.n_mech)?;
    let pos_m = fock::destroy(t.n_mech)?.add(&fock::create(t.n_mech)?)?;
    let pos_c = fock::destroy(t.n_cavity)?.add(&fock::create(t.n_cavity)?)?;
    let id_c = CsrMatrix::identity(t.n_cavity);
    let id_m = CsrMatrix::identity(t.n_mech);

    let mut h = num_c.kron(&id_m)?.scale(Complex64::new(-p.delta, 0.0));
    h = h.add(&id_c.kron(&num_m)?.scale(Complex64::new(p.omega_m, 0.0)))?;
    // g0 (b + b†) a†a = (a†a ⊗ (b + b†)) since the factors commute
    h = h.add(&num_c.kron(&pos_m)?.scale(Complex64::new(p.g0, 0.0)))?;
    h = h.add(&pos_c.kron(&id_m)?.scale(Complex64::new(p.drive, 0.0)))?;
    Ok(h)
}

/// Superoperator matrix of a single Lindblad dissipator with collapse
/// operator `c` and rate `rate`, under column stacking. `cdag_c` must be
/// `c† c`; the caller supplies it so that number operators can be built
/// directly instead of through a sparse product.
pub fn dissipator_matrix(c: &CsrMatrix, cdag_c: &CsrMatrix, rate: f64) -> Result<CsrMatrix> {
    let n = c.nrows();
    let id = CsrMatrix::identity(n);
    let half = Complex64::new(-0.5, 0.0);
    let mut d = c.conj().kron(c)?;
    d = d.add(&id.kron(cdag_c)?.scale(half))?;
    d = d.add(&cdag_c.transpose().kron(&id)?.scale(half))?;
    Ok(d.scale(Complex64::new(rate, 0.0)))
}

/// Sparse matrix of the Lindblad generator for `p`, column-stacking
/// convention. Exact cancellations are pruned, so reported structure counts
/// refer to the canonical matrix.
pub fn build_liouvillian(p: &ModelParams) -> Result<CsrMatrix> {
    p.validate()?;
    let t = p.trunc;
    let h = build_hamiltonian(p)?;
    let dim = t.hilbert_dim();
    let id = CsrMatrix::identity(dim);
    let minus_i = Complex64::new(0.0, -1.0);

    let unitary = id
        .kron(&h)?
        .add(&h.transpose().kron(&id)?.scale(Complex64::new(-1.0, 0.0)))?
        .scale(minus_i);

    let mut l = unitary;

    let gamma = p.gamma_m();
    // (collapse operator, c†c, rate); channels with zero rate add no structure
    let a_joint = fock::embed_cavity(&fock::destroy(t.n_cavity)?, t)?;
    let num_c = fock::embed_cavity(&fock::number(t.n_cavity)?, t)?;
    let b_joint = fock::embed_mech(&fock::destroy(t.n_mech)?, t)?;
    let num_m = fock::embed_mech(&fock::number(t.n_mech)?, t)?;
    let bdag_joint = fock::embed_mech(&fock::create(t.n_mech)?, t)?;
    // b b† for the truncated ladder: diag(1, .., N-1, 0) — the top column of
    // the truncated b† is empty, so the last entry vanishes exactly
    let bbdag_diag: Vec<Complex64> = (0..t.n_mech)
        .map(|k| {
            if k + 1 < t.n_mech {
                Complex64::new(k as f64 + 1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let bbdag = fock::embed_mech(&CsrMatrix::from_diagonal(&bbdag_diag), t)?;

    let channels: [(&CsrMatrix, &CsrMatrix, f64); 3] = [
        (&a_joint, &num_c, p.kappa),
        (&b_joint, &num_m, gamma * (1.0 + p.n_th)),
        (&bdag_joint, &bbdag, gamma * p.n_th),
    ];
    for (c, cdc, rate) in channels {
        if rate != 0.0 {
            l = l.add(&dissipator_matrix(c, cdc, rate)?)?;
        }
    }
    Ok(l)
}

/// Column indices of the diagonal elements of ρ in the vectorized frame:
/// `k (hilbert_dim + 1)` for `k = 0 .. hilbert_dim`.
pub fn trace_columns(hilbert_dim: usize) -> Vec<usize> {
    (0..hilbert_dim).map(|k| k * (hilbert_dim + 1)).collect()
}

/// Impose the unit-trace constraint: build `T`, choose the weight `w` as the
/// complex arithmetic mean of `diag(L)`, and form `L̃ = L + w T` with
/// right-hand side `(w, 0, ..)^T`.
///
/// If the diagonal mean is so small that the `T` entries would fall below any
/// reasonable drop tolerance, the mean magnitude of the diagonal is used
/// instead and [`ConstrainedLiouvillian::weight_fallback`] is set.
pub fn constrain(l: &CsrMatrix, hilbert_dim: usize) -> Result<ConstrainedLiouvillian> {
    let n = hilbert_dim * hilbert_dim;
    if !l.is_square() || l.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "constrain: matrix is {}x{}, expected {n}x{n} for hilbert_dim {hilbert_dim}",
            l.nrows(),
            l.ncols()
        )));
    }
    let diag = l.diagonal();
    let sum: Complex64 = diag.iter().sum();
    let mean = sum / n as f64;
    let mean_mag = diag.iter().map(|v| v.norm()).sum::<f64>() / n as f64;
    let (weight, weight_fallback) = if mean.norm() < 1e3 * f64::EPSILON * mean_mag {
        (Complex64::new(mean_mag, 0.0), true)
    } else {
        (mean, false)
    };

    let one = Complex64::new(1.0, 0.0);
    let t_triplets: Vec<(usize, usize, Complex64)> = trace_columns(hilbert_dim)
        .into_iter()
        .map(|c| (0, c, one))
        .collect();
    let trace_matrix = CsrMatrix::from_triplets(n, n, &t_triplets)?;
    let constrained = l.add(&trace_matrix.scale(weight))?;
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    rhs[0] = weight;
    Ok(ConstrainedLiouvillian {
        liouvillian: l.clone(),
        trace_matrix,
        weight,
        constrained,
        rhs,
        hilbert_dim,
        weight_fallback,
    })
}

/// Build and constrain in one step.
pub fn build_constrained(p: &ModelParams) -> Result<ConstrainedLiouvillian> {
    let l = build_liouvillian(p)?;
    constrain(&l, p.trunc.hilbert_dim())
}

/// `e_trace^T L`: row vector summing the rows of `L` at the diagonal
/// positions of ρ. Zero for any trace-preserving generator.
pub fn trace_row_product(l: &CsrMatrix, hilbert_dim: usize) -> Vec<Complex64> {
    let mut is_diag_row = vec![false; l.nrows()];
    for c in trace_columns(hilbert_dim) {
        is_diag_row[c] = true;
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); l.ncols()];
    for (i, j, v) in l.iter() {
        if is_diag_row[i] {
            acc[j] += v;
        }
    }
    acc
}
