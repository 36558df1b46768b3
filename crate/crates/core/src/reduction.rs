//! Second-order reduction of the full problem to the doublet subspace:
//! coupling dyads, the mass matrix `M`, the decay matrix `Gamma`, and the
//! effective generator `W = M - i*Gamma`.

use crate::error::{Error, Result};
use crate::model::{doublet_block, LevelSpec, ValidatedModel};
use crate::{C64, Mat2};

/// Rank-one coupling dyad of a single level, `D[a][b] = conj(g_a) * g_b`
/// over `(g_l, g_r)`. Hermitian and positive semidefinite by construction,
/// with trace `|g_l|^2 + |g_r|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dyad {
    pub matrix: Mat2,
    pub level_index: usize,
}

/// Effective 2x2 hermitian Hamiltonian of the doublet, including the
/// level-repulsion shifts from virtual transitions into the tower.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix {
    pub matrix: Mat2,
}

/// Decay contribution of levels degenerate with the doublet; hermitian and
/// positive semidefinite, zero whenever no level is degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayMatrix {
    pub matrix: Mat2,
}

/// Generator of the reduced dynamics, `W = M - i*Gamma`; hermitian exactly
/// when `Gamma = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGenerator {
    pub matrix: Mat2,
}

pub fn dyad(level: &LevelSpec, level_index: usize) -> Dyad {
    let g = [level.g_l, level.g_r];
    let mut matrix = Mat2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            matrix[(a, b)] = g[a].conj() * g[b];
        }
    }
    Dyad { matrix, level_index }
}

/// Level indices sorted by (energy, couplings) with a total order on floats.
/// Both matrix sums below walk levels in this canonical order so that
/// reordering the input list cannot change the floating-point result.
fn canonical_order(levels: &[LevelSpec]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&levels[i], &levels[j]);
        a.energy
            .total_cmp(&b.energy)
            .then(a.g_l.re.total_cmp(&b.g_l.re))
            .then(a.g_l.im.total_cmp(&b.g_l.im))
            .then(a.g_r.re.total_cmp(&b.g_r.re))
            .then(a.g_r.im.total_cmp(&b.g_r.im))
    });
    order
}

/// Tower-induced level-repulsion shift `sum_k D_k / (E_k - m)` over the
/// non-degenerate levels. Degenerate levels are excluded (they belong to the
/// decay matrix), which is how the principal-part prescription plays out for
/// a discrete spectrum. Scaling every coupling by `lambda` scales this sum
/// by exactly `lambda^2`.
pub fn level_shift(model: &ValidatedModel) -> Mat2 {
    let spec = model.spec();
    let m = spec.doublet.m;
    let flags = model.degenerate_flags();

    let mut sum = Mat2::zeros();
    for k in canonical_order(&spec.levels) {
        if flags[k] {
            continue;
        }
        let denom = spec.levels[k].energy - m;
        sum += dyad(&spec.levels[k], k).matrix.map(|x| x / denom);
    }
    sum
}

/// Mass matrix `M = m*1 + h - sum_k D_k / (E_k - m)` over the non-degenerate
/// levels.
pub fn mass_matrix(model: &ValidatedModel) -> MassMatrix {
    let m = model.spec().doublet.m;
    let mut matrix = doublet_block(model) - level_shift(model);
    matrix[(0, 0)] += C64::new(m, 0.0);
    matrix[(1, 1)] += C64::new(m, 0.0);
    MassMatrix { matrix }
}

/// Decay matrix `Gamma = 2*pi*rho * sum_k D_k` over the degenerate levels.
/// Zero when no level is degenerate; an error when degenerate levels exist
/// but no broadening `rho` was supplied, since a discrete level exactly on
/// shell has no meaningful decay rate without a density of states.
pub fn decay_matrix(model: &ValidatedModel) -> Result<DecayMatrix> {
    let spec = model.spec();
    let flags = model.degenerate_flags();

    if !flags.iter().any(|&f| f) {
        return Ok(DecayMatrix { matrix: Mat2::zeros() });
    }
    let rho = match spec.broadening {
        Some(rho) => rho,
        None => {
            let k = flags.iter().position(|&f| f).unwrap();
            return Err(Error::DegenerateLevelWithoutBroadening {
                index: k,
                energy: spec.levels[k].energy,
            });
        }
    };

    let mut sum = Mat2::zeros();
    for k in canonical_order(&spec.levels) {
        if flags[k] {
            sum += dyad(&spec.levels[k], k).matrix;
        }
    }
    let factor = 2.0 * std::f64::consts::PI * rho;
    Ok(DecayMatrix {
        matrix: sum.map(|x| x * factor),
    })
}

pub fn effective_generator(m: &MassMatrix, gamma: &DecayMatrix) -> EffectiveGenerator {
    let i = C64::new(0.0, 1.0);
    EffectiveGenerator {
        matrix: m.matrix - gamma.matrix.map(|x| i * x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermiticity_residual2;
    use crate::model::{validate_model, DoubletSpec, InvarianceMode, ModelSpec};
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn model_with(m: f64, delta: f64, epsilon: f64, levels: Vec<LevelSpec>) -> ValidatedModel {
        validate_model(ModelSpec::new(
            DoubletSpec {
                m,
                delta,
                epsilon,
                theta_max: 1.0,
            },
            levels,
            InvarianceMode::General,
        ))
        .unwrap()
    }

    fn lv(energy: f64, g_l: C64, g_r: C64) -> LevelSpec {
        LevelSpec { energy, g_l, g_r }
    }

    #[test]
    fn dyad_single_coupling() {
        let d = dyad(&lv(1.0, c(1.0, 0.0), c(0.0, 0.0)), 0).matrix;
        assert_eq!(d, Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn dyad_phase_drops_on_diagonal() {
        let d = dyad(&lv(1.0, c(0.0, 0.0), c(0.0, 1.0)), 0).matrix;
        assert_eq!(d, Mat2::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)));
    }

    #[test]
    fn dyad_symmetric_coupling_is_rank_one_trace_two() {
        let d = dyad(&lv(1.0, c(1.0, 0.0), c(1.0, 0.0)), 0).matrix;
        assert_eq!(d, Mat2::new(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)));
        let trace = d[(0, 0)] + d[(1, 1)];
        assert_eq!(trace, c(2.0, 0.0));
        let det = d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)];
        assert_eq!(det, c(0.0, 0.0));
    }

    #[test]
    fn dyad_is_hermitian_psd_for_random_couplings() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..50 {
            let level = lv(
                1.0,
                c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            );
            let d = dyad(&level, k).matrix;
            assert_eq!(hermiticity_residual2(&d), 0.0);
            // rank <= 1: determinant vanishes up to rounding
            let det = d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)];
            assert!(det.norm() <= 1e-14 * d.norm() * d.norm() + f64::MIN_POSITIVE);
            let trace = (d[(0, 0)] + d[(1, 1)]).re;
            assert_abs_diff_eq!(
                trace,
                level.g_l.norm_sqr() + level.g_r.norm_sqr(),
                epsilon = 1e-15 * trace.abs()
            );
        }
    }

    #[test]
    fn mass_matrix_single_level_hand_value() {
        // |g_l|^2/(E - m) = 0.25/10 pulls the LL entry down by 0.025.
        let model = model_with(0.0, 0.1, 0.0, vec![lv(10.0, c(0.5, 0.0), c(0.0, 0.0))]);
        let m = mass_matrix(&model).matrix;
        assert_abs_diff_eq!(m[(0, 0)].re, -0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)].re, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 0)].re, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].re, 0.0, epsilon = 1e-15);
        for entry in m.iter() {
            assert_eq!(entry.im, 0.0);
        }
    }

    #[test]
    fn empty_tower_mass_matrix_is_doublet_hamiltonian() {
        let model = model_with(0.7, 0.3, -0.2, vec![]);
        let m = mass_matrix(&model).matrix;
        assert_eq!(m[(0, 0)], c(0.7 + -0.2, 0.0));
        assert_eq!(m[(1, 1)], c(0.7 - -0.2, 0.0));
        assert_eq!(m[(0, 1)], c(0.3, 0.0));
        assert_eq!(m[(1, 0)], c(0.3, 0.0));
    }

    fn random_levels(rng: &mut ChaCha8Rng, n: usize) -> Vec<LevelSpec> {
        (0..n)
            .map(|_| {
                lv(
                    rng.gen_range(2.0..15.0),
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect()
    }

    #[test]
    fn mass_matrix_matches_elementwise_double_loop() {
        // independent oracle: accumulate each entry separately, in input order
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let levels = random_levels(&mut rng, 6);
            let m0 = rng.gen_range(-1.0..1.0);
            let delta = rng.gen_range(-1.0..1.0);
            let epsilon = rng.gen_range(-1.0..1.0);
            let model = model_with(m0, delta, epsilon, levels.clone());
            let m = mass_matrix(&model).matrix;

            let h = [[epsilon, delta], [delta, -epsilon]];
            for a in 0..2 {
                for b in 0..2 {
                    let mut expect = C64::new(h[a][b], 0.0);
                    if a == b {
                        expect += C64::new(m0, 0.0);
                    }
                    for level in &levels {
                        let g = [level.g_l, level.g_r];
                        expect -= g[a].conj() * g[b] / (level.energy - m0);
                    }
                    assert!((m[(a, b)] - expect).norm() <= 1e-13 * m.norm());
                }
            }
            assert!(hermiticity_residual2(&m) <= 1e-13 * m.norm());
        }
    }

    #[test]
    fn mass_matrix_is_exactly_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let mut levels = random_levels(&mut rng, 7);
            let model = model_with(0.1, 0.4, 0.2, levels.clone());
            let m = mass_matrix(&model);
            levels.shuffle(&mut rng);
            let shuffled = model_with(0.1, 0.4, 0.2, levels);
            assert_eq!(m, mass_matrix(&shuffled));
        }
    }

    #[test]
    fn coupling_scaling_is_exactly_quadratic() {
        // powers of two keep the float arithmetic exact, so the comparison
        // can demand bit equality rather than a tolerance
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let levels = random_levels(&mut rng, 5);
        let base = model_with(0.25, 0.5, -0.125, levels);
        let shift = level_shift(&base);

        for lambda in [0.5f64, 2.0, 4.0] {
            let scaled = validate_model(base.spec().with_scaled_couplings(lambda)).unwrap();
            assert_eq!(level_shift(&scaled), shift.map(|x| x * (lambda * lambda)));
        }
    }

    #[test]
    fn off_shell_tower_has_zero_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let model = model_with(0.0, 0.1, 0.0, random_levels(&mut rng, 4));
        let gamma = decay_matrix(&model).unwrap().matrix;
        assert_eq!(gamma, Mat2::zeros());
    }

    #[test]
    fn degenerate_level_without_broadening_errors() {
        let model = model_with(5.0, 0.1, 0.0, vec![lv(5.0, c(1.0, 0.0), c(0.0, 0.0))]);
        match decay_matrix(&model) {
            Err(Error::DegenerateLevelWithoutBroadening { index: 0, energy }) => {
                assert_eq!(energy, 5.0)
            }
            other => panic!("expected DegenerateLevelWithoutBroadening, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_level_with_broadening_yields_dyad_rate() {
        let mut spec = ModelSpec::new(
            DoubletSpec {
                m: 5.0,
                delta: 0.1,
                epsilon: 0.0,
                theta_max: 1.0,
            },
            vec![lv(5.0, c(1.0, 0.0), c(0.0, 0.0))],
            InvarianceMode::General,
        );
        spec.broadening = Some(1.0 / (2.0 * std::f64::consts::PI));
        let model = validate_model(spec).unwrap();
        let gamma = decay_matrix(&model).unwrap().matrix;
        assert_abs_diff_eq!(gamma[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_eq!(gamma[(0, 1)], c(0.0, 0.0));
        assert_eq!(gamma[(1, 0)], c(0.0, 0.0));
        assert_eq!(gamma[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn decay_matrix_is_psd_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let mut levels = random_levels(&mut rng, 5);
            // park two levels on shell
            levels[1].energy = 0.3;
            levels[3].energy = 0.3;
            let mut spec = ModelSpec::new(
                DoubletSpec {
                    m: 0.3,
                    delta: 0.1,
                    epsilon: 0.0,
                    theta_max: 1.0,
                },
                levels.clone(),
                InvarianceMode::General,
            );
            spec.broadening = Some(rng.gen_range(0.0..2.0));
            let model = validate_model(spec.clone()).unwrap();
            let gamma = decay_matrix(&model).unwrap();
            assert_eq!(hermiticity_residual2(&gamma.matrix), 0.0);

            // eigenvalues of a hermitian 2x2: both must be >= -1e-12
            let tr = (gamma.matrix[(0, 0)] + gamma.matrix[(1, 1)]).re;
            let det = (gamma.matrix[(0, 0)] * gamma.matrix[(1, 1)]
                - gamma.matrix[(0, 1)] * gamma.matrix[(1, 0)])
                .re;
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            assert!(0.5 * (tr - disc) >= -1e-12);

            let mut shuffled_spec = spec;
            shuffled_spec.levels.shuffle(&mut rng);
            let shuffled = validate_model(shuffled_spec).unwrap();
            assert_eq!(gamma, decay_matrix(&shuffled).unwrap());
        }
    }

    #[test]
    fn generator_equals_mass_matrix_when_closed() {
        let model = model_with(0.0, 0.1, 0.0, vec![lv(10.0, c(0.5, 0.0), c(0.0, 0.0))]);
        let m = mass_matrix(&model);
        let gamma = decay_matrix(&model).unwrap();
        let w = effective_generator(&m, &gamma);
        assert_eq!(w.matrix, m.matrix);
    }

    #[test]
    fn generator_combines_mass_and_decay() {
        let m = MassMatrix { matrix: Mat2::identity() };
        let gamma = DecayMatrix { matrix: Mat2::identity() };
        let w = effective_generator(&m, &gamma);
        assert_eq!(w.matrix[(0, 0)], c(1.0, -1.0));
        assert_eq!(w.matrix[(1, 1)], c(1.0, -1.0));
        assert_eq!(w.matrix[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn mass_matrix_hermitian_to_the_bit_for_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let model = model_with(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                random_levels(&mut rng, 6),
            );
            let m = mass_matrix(&model).matrix;
            assert_eq!(m[(0, 1)], m[(1, 0)].conj());
            assert_eq!(m[(0, 0)].im, 0.0);
            assert_eq!(m[(1, 1)].im, 0.0);
        }
    }
}
