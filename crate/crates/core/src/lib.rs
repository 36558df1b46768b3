//! Effective two-level dynamics of a chiral doublet coupled to a tower of
//! excited levels.
//!
//! The library reduces a multi-level hermitian Hamiltonian (two degenerate
//! handed ground states plus `N` excited levels) to an effective 2x2
//! generator `W = M - i*Gamma` acting on the doublet amplitudes, solves the
//! associated eigenproblem under CPT or T invariance, and evaluates the
//! racemization probabilities and optical-activity oscillations that follow.
//! An exact full-space propagator is included as an oracle so the quality of
//! the reduction can be measured directly.
//!
//! Units: hbar = 1 throughout; energies and inverse times share one unit.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod oracle;
pub mod reduction;
pub mod spectral;

pub use error::{Error, Result};

/// 2x2 complex matrix, the workhorse of the doublet subspace.
pub type Mat2 = nalgebra::Matrix2<num_complex::Complex64>;
/// Two-component complex amplitude vector over (|L>, |R>).
pub type Vec2 = nalgebra::Vector2<num_complex::Complex64>;
/// Dense complex matrix for the full (N+2)-dimensional space.
pub type DMat = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense complex vector for the full (N+2)-dimensional space.
pub type DVec = nalgebra::DVector<num_complex::Complex64>;
/// Complex scalar.
pub type C64 = num_complex::Complex64;

/// Relative tolerance used for all hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default tolerance for flagging levels degenerate with the doublet.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;
/// Default relative tolerance for CPT/T invariance preconditions.
pub const DEFAULT_INVARIANCE_TOL: f64 = 1e-10;

/// Frobenius distance of a 2x2 matrix from its own adjoint.
pub(crate) fn hermiticity_residual2(m: &Mat2) -> f64 {
    (m - m.adjoint()).norm()
}

/// Relative hermiticity check: ||X - X^dagger|| <= tol * ||X||.
/// The zero matrix passes (0 <= 0).
pub(crate) fn is_hermitian2(m: &Mat2, tol: f64) -> bool {
    hermiticity_residual2(m) <= tol * m.norm()
}

/// Same residual for dynamically sized matrices.
pub(crate) fn hermiticity_residual_d(m: &DMat) -> f64 {
    (m - m.adjoint()).norm()
}

pub(crate) fn is_hermitian_d(m: &DMat, tol: f64) -> bool {
    hermiticity_residual_d(m) <= tol * m.norm()
}
