//! Steady states of driven optomechanical systems.
//!
//! The pipeline assembles the Lindblad generator of a pumped cavity coupled to a
//! mechanical resonator as a complex sparse matrix, imposes the unit-trace
//! constraint to make the singular system uniquely solvable, reorders it with
//! Reverse Cuthill-McKee, builds a dual-threshold incomplete-LU preconditioner,
//! and solves with restarted GMRES. Direct sparse LU, a dense solver, and a
//! shifted inverse-power eigensolver are available as cross-checking baselines.
//!
//! Modules follow the pipeline stages:
//!
//! * [`sparse`] — complex CSR storage, structural metrics, permutations.
//! * [`fock`] — truncated-Fock-basis operators for the two bosonic modes.
//! * [`liouvillian`] — Hamiltonian, Lindblad superoperator, trace constraint.
//! * [`reorder`] — Reverse Cuthill-McKee on the symmetrized pattern.
//! * [`precond`] — ILUTP factorization and the condition estimate.
//! * [`solve`] — GMRES, direct LU, inverse power, and the end-to-end driver.
//! * [`analysis`] — observables: phonon statistics, Fano factor, Wigner function.

// Structural indices must cover (N_c * N_m)^2 entries; a 32-bit usize cannot.
const _: () = assert!(std::mem::size_of::<usize>() >= 8);

pub mod analysis;
pub mod dense;
mod error;
pub mod fock;
pub mod liouvillian;
pub mod precond;
pub mod reorder;
pub mod solve;
pub mod sparse;

pub use error::{Error, Result};
pub use fock::TruncationConfig;
pub use liouvillian::{ConstrainedLiouvillian, ModelParams};
pub use precond::{IluConfig, IluFactors};
pub use solve::{SolveMethod, SolverConfig, SteadyStateResult};
pub use sparse::{CsrMatrix, Permutation, StructureMetrics};
