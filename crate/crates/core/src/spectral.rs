//! Eigenstructure of the mass matrix under CPT invariance, T invariance, or
//! no symmetry assumption, plus the oscillation period it implies.

use crate::error::{Error, Result};
use crate::model::InvarianceMode;
use crate::reduction::MassMatrix;
use crate::{C64, Mat2, Vec2};

/// Mode-specific mixing data accompanying the eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Mixing {
    /// CPT: `p` is the principal square root of `M12` and `alpha` the phase
    /// with `exp(-i*alpha) = p/|p|`. `degenerate` is set when `M12 = 0`, in
    /// which case the parity basis is returned and `p`, `alpha` are zero.
    Cpt { p: C64, alpha: f64, degenerate: bool },
    /// T: eigenvectors are `(cos phi, sin phi)` and `(-sin phi, cos phi)`,
    /// with `phi` in `[0, pi)`.
    T { phi: f64 },
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub psi_plus: Vec2,
    pub psi_minus: Vec2,
    pub mixing: Mixing,
}

/// Splitting `Delta` and the period `tau = pi/Delta` of `cos(2*Delta*t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationPeriod {
    pub delta_split: f64,
    pub tau: f64,
}

/// Checks the symmetry precondition the given mode imposes on `M`:
/// equal diagonals for CPT, real off-diagonal for T, nothing for General.
/// `tol` is relative to `||M||`.
pub fn check_invariance(m: &Mat2, mode: InvarianceMode, tol: f64) -> Result<()> {
    match mode {
        InvarianceMode::Cpt => {
            let residual = (m[(0, 0)].re - m[(1, 1)].re).abs();
            if residual > tol * m.norm() {
                return Err(Error::NotCptSymmetric { residual });
            }
        }
        InvarianceMode::T => {
            let residual = m[(0, 1)].im.abs();
            if residual > tol * m.norm() {
                return Err(Error::NotTSymmetric { residual });
            }
        }
        InvarianceMode::General => {}
    }
    Ok(())
}

/// CPT-invariant eigenproblem: `lambda_pm = M11 +- |M12|` with eigenvectors
/// `(p, +-conj(p)) / (sqrt(2)|p|)`. For `M12 = 0` the doublet is degenerate
/// and the parity basis is returned with the `degenerate` flag set.
pub fn eigen_cpt(m: &MassMatrix, tol: f64) -> Result<SpectralResult> {
    let mm = &m.matrix;
    check_invariance(mm, InvarianceMode::Cpt, tol)?;

    let a = mm[(0, 0)].re;
    let c = mm[(0, 1)];
    let cabs = c.norm();

    if cabs == 0.0 {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        return Ok(SpectralResult {
            lambda_plus: a,
            lambda_minus: a,
            psi_plus: Vec2::new(s, s),
            psi_minus: Vec2::new(s, -s),
            mixing: Mixing::Cpt {
                p: C64::new(0.0, 0.0),
                alpha: 0.0,
                degenerate: true,
            },
        });
    }

    let p = c.sqrt(); // principal branch, arg in (-pi/2, pi/2]
    let alpha = -p.arg();
    let norm = std::f64::consts::SQRT_2 * p.norm();
    let psi_plus = Vec2::new(p / norm, p.conj() / norm);
    let psi_minus = Vec2::new(p / norm, -p.conj() / norm);
    Ok(SpectralResult {
        lambda_plus: a + cabs,
        lambda_minus: a - cabs,
        psi_plus,
        psi_minus,
        mixing: Mixing::Cpt {
            p,
            alpha,
            degenerate: false,
        },
    })
}

/// T-invariant eigenproblem: real `M12`, eigenvalues
/// `lambda_pm = (M11+M22)/2 +- sqrt((M11-M22)^2 + 4 M12^2)/2` and the
/// rotation angle `phi = atan2(2 M12, M11-M22)/2` mapped into `[0, pi)`,
/// so `cot(2 phi) = (M11-M22)/(2 M12)` whenever `M12 != 0`.
pub fn eigen_t(m: &MassMatrix, tol: f64) -> Result<SpectralResult> {
    let mm = &m.matrix;
    check_invariance(mm, InvarianceMode::T, tol)?;

    let a = mm[(0, 0)].re;
    let b = mm[(1, 1)].re;
    let c = mm[(0, 1)].re;
    let d = a - b;
    let r = f64::hypot(d, 2.0 * c);

    let mut phi = 0.5 * f64::atan2(2.0 * c, d);
    if phi < 0.0 {
        phi += std::f64::consts::PI;
    }
    let (sin, cos) = phi.sin_cos();
    Ok(SpectralResult {
        lambda_plus: 0.5 * (a + b) + 0.5 * r,
        lambda_minus: 0.5 * (a + b) - 0.5 * r,
        psi_plus: Vec2::new(C64::new(cos, 0.0), C64::new(sin, 0.0)),
        psi_minus: Vec2::new(C64::new(-sin, 0.0), C64::new(cos, 0.0)),
        mixing: Mixing::T { phi },
    })
}

/// Closed-form eigendecomposition of a hermitian 2x2 without symmetry
/// assumptions. Returns unit-norm orthogonal eigenvectors with
/// `lambda_plus >= lambda_minus`.
pub fn eigen_general(m: &MassMatrix) -> SpectralResult {
    let (lambda_plus, lambda_minus, psi_plus, psi_minus) = hermitian_eigen2(&m.matrix);
    SpectralResult {
        lambda_plus,
        lambda_minus,
        psi_plus,
        psi_minus,
        mixing: Mixing::General,
    }
}

/// Core hermitian 2x2 solver shared with the time-evolution code. Writing
/// the off-diagonal as `|c| * u` with unimodular `u` reduces the problem to
/// a real rotation, which keeps the eigenvectors orthonormal to the last bit.
pub(crate) fn hermitian_eigen2(m: &Mat2) -> (f64, f64, Vec2, Vec2) {
    let a = m[(0, 0)].re;
    let b = m[(1, 1)].re;
    let c = m[(0, 1)];
    let cabs = c.norm();
    let half_sum = 0.5 * (a + b);
    let half_r = 0.5 * f64::hypot(a - b, 2.0 * cabs);
    let lambda_plus = half_sum + half_r;
    let lambda_minus = half_sum - half_r;

    if cabs == 0.0 {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let (psi_plus, psi_minus) = if a >= b {
            (Vec2::new(one, zero), Vec2::new(zero, one))
        } else {
            (Vec2::new(zero, one), Vec2::new(one, zero))
        };
        return (lambda_plus, lambda_minus, psi_plus, psi_minus);
    }

    let u = c / cabs;
    let theta = 0.5 * f64::atan2(2.0 * cabs, a - b); // in (0, pi/2)
    let (sin, cos) = theta.sin_cos();
    let psi_plus = Vec2::new(u * cos, C64::new(sin, 0.0));
    let psi_minus = Vec2::new(-u * sin, C64::new(cos, 0.0));
    (lambda_plus, lambda_minus, psi_plus, psi_minus)
}

/// The splitting `Delta` entering `cos(2*Delta*t)`: `|M12|` under CPT,
/// `sqrt((M11-M22)^2 + 4 M12^2)/2` under T or in general. No symmetry gate
/// is applied here, so the two conventions can be compared on one matrix.
pub fn splitting(m: &MassMatrix, mode: InvarianceMode) -> f64 {
    let mm = &m.matrix;
    match mode {
        InvarianceMode::Cpt => mm[(0, 1)].norm(),
        InvarianceMode::T | InvarianceMode::General => {
            0.5 * f64::hypot(mm[(0, 0)].re - mm[(1, 1)].re, 2.0 * mm[(0, 1)].norm())
        }
    }
}

/// Oscillation period `tau = pi/Delta` for the given mode. The T-mode
/// splitting is never smaller than the CPT one on the same matrix, so
/// `tau_cpt >= tau_t` always.
pub fn oscillation_period(m: &MassMatrix, mode: InvarianceMode) -> Result<OscillationPeriod> {
    let delta_split = splitting(m, mode);
    if delta_split == 0.0 {
        return Err(Error::ZeroSplitting);
    }
    Ok(OscillationPeriod {
        delta_split,
        tau: std::f64::consts::PI / delta_split,
    })
}
