//! Library error type.
//!
//! Every fallible operation in the crate returns [`Error`]. The CLI maps
//! variants onto distinct process exit codes, so variants are grouped by
//! failure class rather than by the module that raised them.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric input was NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A matrix that must be hermitian failed the relative residual check.
    #[error("{what} is not hermitian (residual {residual:.3e} exceeds the relative tolerance)")]
    NonHermitianInput { what: String, residual: f64 },

    /// A scalar parameter violated its domain (sign, range, shape).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A level sits within the degeneracy tolerance of the doublet energy,
    /// but no density-of-states broadening was supplied, so its decay
    /// contribution is undefined.
    #[error(
        "level {index} (energy {energy}) is degenerate with the doublet but no broadening was given"
    )]
    DegenerateLevelWithoutBroadening { index: usize, energy: f64 },

    /// CPT invariance requires equal diagonal mass-matrix entries.
    #[error("mass matrix is not CPT-invariant: |M11 - M22| = {residual:.3e} exceeds tolerance")]
    NotCptSymmetric { residual: f64 },

    /// T invariance requires a real off-diagonal mass-matrix entry.
    #[error("mass matrix is not T-invariant: |Im M12| = {residual:.3e} exceeds tolerance")]
    NotTSymmetric { residual: f64 },

    /// The level splitting vanishes, so no oscillation period exists.
    #[error("level splitting is zero: the oscillation period is infinite")]
    ZeroSplitting,

    /// Exact-vs-effective comparison is only defined for a closed system.
    #[error("effective generator has nonzero decay; comparison requires a closed system")]
    NonzeroDecay,
}
