//! Problem description: the chiral doublet, the excited-level tower, and the
//! assembled full-space Hamiltonian.
//!
//! Basis order is fixed as `[|L>, |R>, |1>, ..., |N>]` with the levels in
//! input order, so matrix layouts are deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{is_hermitian_d, C64, DMat, Mat2, DEFAULT_DEGENERACY_TOL, HERMITICITY_TOL};

/// Parameters of the two handed ground states.
///
/// `m` is the common doublet energy, `delta` the tunneling matrix element
/// `<L|H|R>`, `epsilon` the parity-violating diagonal shift, and `theta_max`
/// the optical-activity scale of a pure enantiomer.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubletSpec {
    pub m: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub theta_max: f64,
}

/// One excited level: its energy and its couplings to the doublet,
/// `g_l = <k|H|L>` and `g_r = <k|H|R>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpec {
    pub energy: f64,
    pub g_l: C64,
    pub g_r: C64,
}

/// Symmetry assumption imposed on the mass matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvarianceMode {
    /// Equal diagonal entries; complex off-diagonal allowed.
    #[serde(rename = "CPT")]
    Cpt,
    /// Real off-diagonal entry; unequal diagonals allowed.
    T,
    /// No symmetry assumed; plain hermitian eigenproblem.
    General,
}

/// Complete problem description.
///
/// `h_override`, when present, replaces the default doublet block
/// `delta*sigma_x + epsilon*sigma_z`. `cross_couplings` holds `<k|H|j>`
/// tower matrix elements and enters only the full Hamiltonian used by the
/// exact propagator — the two-level reduction ignores it, and its diagonal
/// is ignored even there (level energies always come from `levels`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub doublet: DoubletSpec,
    pub levels: Vec<LevelSpec>,
    pub h_override: Option<Mat2>,
    pub cross_couplings: Option<DMat>,
    /// Levels within this distance of `m` count as degenerate (decay channels).
    pub degeneracy_tolerance: f64,
    /// Density-of-states factor for degenerate levels; required if any exist.
    pub broadening: Option<f64>,
    pub invariance_mode: InvarianceMode,
}

impl ModelSpec {
    /// Convenience constructor with the default degeneracy tolerance and no
    /// optional blocks.
    pub fn new(doublet: DoubletSpec, levels: Vec<LevelSpec>, invariance_mode: InvarianceMode) -> Self {
        ModelSpec {
            doublet,
            levels,
            h_override: None,
            cross_couplings: None,
            degeneracy_tolerance: DEFAULT_DEGENERACY_TOL,
            broadening: None,
            invariance_mode,
        }
    }

    /// Copy of the model with every doublet–tower coupling multiplied by
    /// `lambda`. Cross couplings and the doublet block are left untouched.
    pub fn with_scaled_couplings(&self, lambda: f64) -> ModelSpec {
        let mut spec = self.clone();
        for level in &mut spec.levels {
            level.g_l *= lambda;
            level.g_r *= lambda;
        }
        spec
    }
}

/// A model that has passed [`validate_model`], plus the per-level degeneracy
/// flags derived during validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedModel {
    spec: ModelSpec,
    degenerate: Vec<bool>,
}

impl ValidatedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// One flag per level: true if `|E_k - m| <= degeneracy_tolerance`.
    pub fn degenerate_flags(&self) -> &[bool] {
        &self.degenerate
    }
}

fn ensure_finite(value: f64, context: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(context.to_string()))
    }
}

fn ensure_finite_c(value: C64, context: &str) -> Result<()> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(context.to_string()))
    }
}

/// Checks every invariant of a [`ModelSpec`] and flags degenerate levels.
///
/// A degenerate level without broadening is *not* an error here — that is
/// deferred to the decay-matrix computation, which is where the missing
/// density of states actually matters.
pub fn validate_model(spec: ModelSpec) -> Result<ValidatedModel> {
    let d = &spec.doublet;
    ensure_finite(d.m, "doublet.m")?;
    ensure_finite(d.delta, "doublet.delta")?;
    ensure_finite(d.epsilon, "doublet.epsilon")?;
    ensure_finite(d.theta_max, "doublet.theta_max")?;
    if d.theta_max <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "doublet.theta_max must be > 0, got {}",
            d.theta_max
        )));
    }

    for (k, level) in spec.levels.iter().enumerate() {
        ensure_finite(level.energy, &format!("levels[{k}].energy"))?;
        ensure_finite_c(level.g_l, &format!("levels[{k}].g_L"))?;
        ensure_finite_c(level.g_r, &format!("levels[{k}].g_R"))?;
    }

    ensure_finite(spec.degeneracy_tolerance, "degeneracy_tolerance")?;
    if spec.degeneracy_tolerance < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "degeneracy_tolerance must be >= 0, got {}",
            spec.degeneracy_tolerance
        )));
    }
    if let Some(rho) = spec.broadening {
        ensure_finite(rho, "broadening")?;
        if rho < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "broadening must be >= 0, got {rho}"
            )));
        }
    }

    if let Some(h) = &spec.h_override {
        for (idx, entry) in h.iter().enumerate() {
            ensure_finite_c(*entry, &format!("h_override[{idx}]"))?;
        }
        if !crate::is_hermitian2(h, HERMITICITY_TOL) {
            return Err(Error::NonHermitianInput {
                what: "h_override".to_string(),
                residual: crate::hermiticity_residual2(h),
            });
        }
    }

    if let Some(x) = &spec.cross_couplings {
        let n = spec.levels.len();
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "cross_couplings must be {n}x{n} to match the level count, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        for (idx, entry) in x.iter().enumerate() {
            ensure_finite_c(*entry, &format!("cross_couplings[{idx}]"))?;
        }
        if !is_hermitian_d(x, HERMITICITY_TOL) {
            return Err(Error::NonHermitianInput {
                what: "cross_couplings".to_string(),
                residual: crate::hermiticity_residual_d(x),
            });
        }
    }

    let degenerate = spec
        .levels
        .iter()
        .map(|level| (level.energy - spec.doublet.m).abs() <= spec.degeneracy_tolerance)
        .collect();

    Ok(ValidatedModel { spec, degenerate })
}

/// The 2x2 doublet block `h` of the perturbation: `h_override` if present,
/// else `delta*sigma_x + epsilon*sigma_z`.
///
/// An override is re-assembled from its upper triangle (real diagonal,
/// conjugate mirror) so downstream sums stay hermitian to the last bit; the
/// adjustment is below the 1e-12 hermiticity gate by construction.
pub fn doublet_block(model: &ValidatedModel) -> Mat2 {
    let spec = model.spec();
    match &spec.h_override {
        Some(h) => Mat2::new(
            C64::new(h[(0, 0)].re, 0.0),
            h[(0, 1)],
            h[(0, 1)].conj(),
            C64::new(h[(1, 1)].re, 0.0),
        ),
        None => {
            let d = C64::new(spec.doublet.delta, 0.0);
            let e = C64::new(spec.doublet.epsilon, 0.0);
            Mat2::new(e, d, d, -e)
        }
    }
}

/// Full-space Hamiltonian in the basis `[|L>, |R>, |1>, ..., |N>]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullHamiltonian {
    pub matrix: DMat,
}

/// Assembles the (N+2)x(N+2) Hamiltonian: doublet block `m*1 + h`, level
/// energies on the diagonal, couplings `g_l`, `g_r` between the doublet and
/// each level, and cross couplings inside the tower. Only the upper triangle
/// is written directly; the lower is its conjugate, so the result is
/// hermitian by construction.
pub fn full_hamiltonian(model: &ValidatedModel) -> FullHamiltonian {
    let spec = model.spec();
    let n = spec.levels.len();
    let dim = n + 2;
    let h = doublet_block(model);
    let m = spec.doublet.m;

    let mut full = DMat::zeros(dim, dim);
    full[(0, 0)] = C64::new(m + h[(0, 0)].re, 0.0);
    full[(1, 1)] = C64::new(m + h[(1, 1)].re, 0.0);
    full[(0, 1)] = h[(0, 1)];
    full[(1, 0)] = h[(0, 1)].conj();

    for (k, level) in spec.levels.iter().enumerate() {
        let row = 2 + k;
        full[(row, row)] = C64::new(level.energy, 0.0);
        // g_alpha = <k|H|alpha> sits in row k, column alpha.
        full[(row, 0)] = level.g_l;
        full[(0, row)] = level.g_l.conj();
        full[(row, 1)] = level.g_r;
        full[(1, row)] = level.g_r.conj();
    }

    if let Some(x) = &spec.cross_couplings {
        for k in 0..n {
            for j in (k + 1)..n {
                full[(2 + k, 2 + j)] = x[(k, j)];
                full[(2 + j, 2 + k)] = x[(k, j)].conj();
            }
        }
    }

    FullHamiltonian { matrix: full }
}
