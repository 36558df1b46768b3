//! Time evolution and observables: two-state closed forms, reduced-model
//! probabilities and optical activity, time averages, and the kaon-style
//! decaying oscillation.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::InvarianceMode;
use crate::reduction::{effective_generator, DecayMatrix, EffectiveGenerator, MassMatrix};
use crate::spectral::{check_invariance, hermitian_eigen2};
use crate::{C64, Mat2, Vec2, DEFAULT_INVARIANCE_TOL, HERMITICITY_TOL};

/// One row of a sampled trajectory. `theta_ratio` is the optical activity
/// over its maximum, identically `p_l - p_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p_l: f64,
    pub p_r: f64,
    pub theta_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
}

/// Parameters of the two-component decaying oscillation: complex level
/// energies `m_i - (i/2) gamma_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KaonParams {
    pub m1: f64,
    pub m2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub mode: KaonMode,
}

/// Damping convention of the interference term. `Standard` uses the
/// envelope `exp(-(gamma1+gamma2)t/2)`, the convention whose zero-decay
/// limit is a pure oscillation; `PaperLiteral` keeps the full-sum exponent
/// `exp(-(gamma1+gamma2)t)` so the alternative can be reproduced verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KaonMode {
    Standard,
    PaperLiteral,
}

pub fn validate_kaon(params: &KaonParams) -> Result<()> {
    for (value, name) in [
        (params.m1, "kaon.m1"),
        (params.m2, "kaon.m2"),
        (params.gamma1, "kaon.gamma1"),
        (params.gamma2, "kaon.gamma2"),
    ] {
        if !value.is_finite() {
            return Err(crate::Error::NonFinite(name.to_string()));
        }
    }
    if params.gamma1 < 0.0 || params.gamma2 < 0.0 {
        return Err(crate::Error::InvalidParameter(format!(
            "kaon decay rates must be >= 0, got gamma1 = {}, gamma2 = {}",
            params.gamma1, params.gamma2
        )));
    }
    Ok(())
}

/// Uniform grid of `steps` points from 0 to `t_max` inclusive.
pub fn time_grid(t_max: f64, steps: usize) -> Vec<f64> {
    debug_assert!(steps >= 2);
    let n = (steps - 1) as f64;
    (0..steps).map(|i| t_max * i as f64 / n).collect()
}

/// Two-state probabilities for an initial `|L>`:
/// `p_r = delta^2/(delta^2+epsilon^2) * sin^2(sqrt(delta^2+epsilon^2) t)`
/// and `p_l = 1 - p_r`, so the pair sums to one identically.
pub fn hs_probabilities(delta: f64, epsilon: f64, t: f64) -> (f64, f64) {
    let omega2 = delta * delta + epsilon * epsilon;
    if omega2 == 0.0 {
        return (1.0, 0.0);
    }
    let s = (omega2.sqrt() * t).sin();
    let p_r = (delta * delta / omega2) * s * s;
    (1.0 - p_r, p_r)
}

/// Two-state optical activity
/// `theta_max * (epsilon^2 + delta^2 cos(2 sqrt(delta^2+epsilon^2) t)) / (delta^2+epsilon^2)`,
/// which equals `theta_max * (p_l - p_r)`.
pub fn hs_optical_activity(delta: f64, epsilon: f64, theta_max: f64, t: f64) -> f64 {
    let omega2 = delta * delta + epsilon * epsilon;
    if omega2 == 0.0 {
        return theta_max;
    }
    let omega = omega2.sqrt();
    theta_max * (epsilon * epsilon + delta * delta * (2.0 * omega * t).cos()) / omega2
}

/// Propagates `phi0` by `exp(-iWt)`. A hermitian `W` goes through the exact
/// spectral decomposition; otherwise the closed-form 2x2 exponential
/// `exp(-iWt) = exp(-i tr(W) t / 2) [cos(st) 1 - i sin(st)/s * A]` is used,
/// with `A` the traceless part and `s = sqrt(-det A)` (either branch: both
/// `cos` and `sin(x)/x` are even).
pub fn evolve_effective(w: &EffectiveGenerator, phi0: &Vec2, t: f64) -> Vec2 {
    debug_assert!((phi0.norm() - 1.0).abs() <= 1e-12);
    let m = &w.matrix;

    if crate::is_hermitian2(m, HERMITICITY_TOL) {
        let (lp, lm, vp, vm) = hermitian_eigen2(m);
        let cp = vp.dotc(phi0) * (-C64::i() * lp * t).exp();
        let cm = vm.dotc(phi0) * (-C64::i() * lm * t).exp();
        return vp.map(|x| x * cp) + vm.map(|x| x * cm);
    }

    let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let mut a = *m;
    a[(0, 0)] -= half_tr;
    a[(1, 1)] -= half_tr;
    let s = (-(a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)])).sqrt();
    let z = s * t;
    let (cos_z, sin_over_s) = if z.norm() == 0.0 {
        // covers both t = 0 and a nilpotent A, where sin(st)/s -> t
        (C64::new(1.0, 0.0), C64::new(t, 0.0))
    } else {
        (z.cos(), z.sin() / s)
    };
    let phase = (-C64::i() * half_tr * t).exp();
    let i = C64::i();
    Vec2::new(
        phase * ((cos_z - i * sin_over_s * a[(0, 0)]) * phi0[0] - i * sin_over_s * a[(0, 1)] * phi0[1]),
        phase * (-i * sin_over_s * a[(1, 0)] * phi0[0] + (cos_z - i * sin_over_s * a[(1, 1)]) * phi0[1]),
    )
}

/// Probabilities to find the doublet in `|L>` / `|R>` at time `t`, starting
/// from `|L>`, under the hermitian mass matrix alone.
///
/// T mode uses the closed forms
/// `p_l = cos^2(Dt) + (M11-M22)^2/(4D^2) sin^2(Dt)`,
/// `p_r = M12^2/D^2 sin^2(Dt)` (real `M12` enforced); CPT and General modes
/// have no closed form for a complex `M12` and go through the matrix
/// exponential with a projection onto the basis states.
pub fn multistate_probabilities(
    m: &MassMatrix,
    t: f64,
    mode: InvarianceMode,
) -> Result<(f64, f64)> {
    match mode {
        InvarianceMode::T => {
            check_invariance(&m.matrix, InvarianceMode::T, DEFAULT_INVARIANCE_TOL)?;
            let d = m.matrix[(0, 0)].re - m.matrix[(1, 1)].re;
            let c = m.matrix[(0, 1)].re;
            let delta = 0.5 * f64::hypot(d, 2.0 * c);
            if delta == 0.0 {
                return Ok((1.0, 0.0));
            }
            let (sin, cos) = (delta * t).sin_cos();
            let p_l = cos * cos + (0.25 * d * d / (delta * delta)) * sin * sin;
            let p_r = (c * c / (delta * delta)) * sin * sin;
            Ok((p_l, p_r))
        }
        InvarianceMode::Cpt | InvarianceMode::General => {
            let w = EffectiveGenerator { matrix: m.matrix };
            let phi0 = Vec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
            let phi = evolve_effective(&w, &phi0, t);
            Ok((phi[0].norm_sqr(), phi[1].norm_sqr()))
        }
    }
}

/// Optical activity at time `t` for an initial `|L>`, in units set by
/// `theta_max`. Equal to `theta_max * (p_l - p_r)` in every mode; the CPT
/// and T modes evaluate their closed forms after checking the symmetry
/// precondition.
pub fn optical_activity(
    m: &MassMatrix,
    theta_max: f64,
    t: f64,
    mode: InvarianceMode,
) -> Result<f64> {
    match mode {
        InvarianceMode::Cpt => {
            check_invariance(&m.matrix, InvarianceMode::Cpt, DEFAULT_INVARIANCE_TOL)?;
            let delta = m.matrix[(0, 1)].norm();
            Ok(theta_max * (2.0 * delta * t).cos())
        }
        InvarianceMode::T => {
            check_invariance(&m.matrix, InvarianceMode::T, DEFAULT_INVARIANCE_TOL)?;
            let d = m.matrix[(0, 0)].re - m.matrix[(1, 1)].re;
            let c = m.matrix[(0, 1)].re;
            let delta = 0.5 * f64::hypot(d, 2.0 * c);
            if delta == 0.0 {
                return Ok(theta_max);
            }
            Ok(theta_max * (0.25 * d * d + c * c * (2.0 * delta * t).cos()) / (delta * delta))
        }
        InvarianceMode::General => {
            let (p_l, p_r) = multistate_probabilities(m, t, mode)?;
            Ok(theta_max * (p_l - p_r))
        }
    }
}

/// Infinite-time average of `theta/theta_max` for an initial `|L>`.
///
/// CPT invariance forces the average to vanish; T invariance gives
/// `(M11-M22)^2/4 / ((M11-M22)^2/4 + M12^2)`. The general case averages
/// the projected evolution over its eigenphases, which reduces to the T
/// expression for real matrices.
pub fn time_average_theta(m: &MassMatrix, mode: InvarianceMode) -> Result<f64> {
    match mode {
        InvarianceMode::Cpt => {
            check_invariance(&m.matrix, InvarianceMode::Cpt, DEFAULT_INVARIANCE_TOL)?;
            Ok(0.0)
        }
        InvarianceMode::T => {
            check_invariance(&m.matrix, InvarianceMode::T, DEFAULT_INVARIANCE_TOL)?;
            let d = m.matrix[(0, 0)].re - m.matrix[(1, 1)].re;
            let c = m.matrix[(0, 1)].re;
            if d == 0.0 && c == 0.0 {
                // no dynamics at all: theta stays at theta_max
                return Ok(1.0);
            }
            Ok(0.25 * d * d / (0.25 * d * d + c * c))
        }
        InvarianceMode::General => {
            let (lp, lm, vp, vm) = hermitian_eigen2(&m.matrix);
            if lp == lm {
                return Ok(1.0);
            }
            // weights of |L> in each eigenvector and the L->R cross terms
            let w_p = vp[0].norm_sqr();
            let w_m = vm[0].norm_sqr();
            let v_p = vp[1] * vp[0].conj();
            let v_m = vm[1] * vm[0].conj();
            Ok(w_p * w_p + w_m * w_m - v_p.norm_sqr() - v_m.norm_sqr())
        }
    }
}

/// Transition probability of the strangeness analogue:
/// `1/4 [exp(-g1 t) + exp(-g2 t) - 2 exp(-env t) cos((m2-m1) t)]` with the
/// interference envelope `env` set by the mode. Zero at `t = 0` in both.
pub fn kaon_transition_probability(params: &KaonParams, t: f64) -> f64 {
    let dm = params.m2 - params.m1;
    let e1 = (-params.gamma1 * t).exp();
    let e2 = (-params.gamma2 * t).exp();
    let env = match params.mode {
        KaonMode::Standard => (-0.5 * (params.gamma1 + params.gamma2) * t).exp(),
        KaonMode::PaperLiteral => (-(params.gamma1 + params.gamma2) * t).exp(),
    };
    0.25 * (e1 + e2 - 2.0 * env * (dm * t).cos())
}

/// Samples the reduced dynamics on a time grid, starting from `|L>`.
///
/// With a vanishing decay matrix the probabilities come from
/// [`multistate_probabilities`] in the requested mode; otherwise the full
/// generator `W = M - i Gamma` is exponentiated. The symmetry precondition
/// of the mode is enforced up front. `theta_ratio` is set to `p_l - p_r`.
pub fn effective_time_series(
    m: &MassMatrix,
    gamma: &DecayMatrix,
    mode: InvarianceMode,
    grid: &[f64],
) -> Result<TimeSeries> {
    check_invariance(&m.matrix, mode, DEFAULT_INVARIANCE_TOL)?;
    let closed = gamma.matrix == Mat2::zeros();
    let w = effective_generator(m, gamma);
    let phi0 = Vec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));

    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let (p_l, p_r) = if closed {
            multistate_probabilities(m, t, mode)?
        } else {
            let phi = evolve_effective(&w, &phi0, t);
            (phi[0].norm_sqr(), phi[1].norm_sqr())
        };
        samples.push(Sample {
            t,
            p_l,
            p_r,
            theta_ratio: p_l - p_r,
        });
    }
    Ok(TimeSeries { samples })
}
