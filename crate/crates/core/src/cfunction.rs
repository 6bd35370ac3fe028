//! The volume-change coefficient `C` of learning dynamics, in all of its
//! equivalent forms.
//!
//! Around a dual point, one step of multiplicative-weights play scales an
//! infinitesimal volume element by `1 + C * eps^2 + O(eps^3)`; the
//! optimistic variant scales it by `1 - C * eps^2 + O(eps^3)`. The sign of
//! `C` therefore decides between local expansion (a chaos indicator) and
//! contraction. `C` is positive everywhere for zero-sum games, negative
//! for coordination games, and additive across the zero-sum/coordination
//! split and across the edges of pairwise-structured games.

use ndarray::{Array1, Array2};

use crate::decomposition::decompose;
use crate::error::{Error, Result};
use crate::game::{
    dual_to_primal, expected_payoff, AnyGame, BimatrixGame, DualPoint, GraphicalGame,
    NormalFormGame, DEFAULT_EXPANSION_BUDGET,
};

fn assert_point_matches(counts: &[usize], p: &DualPoint) {
    assert_eq!(
        counts,
        p.strategy_counts().as_slice(),
        "dual point shape does not match the game"
    );
}

/// `C` for a two-player game:
/// `-sum_{j,k} x_j y_k (A[j,k] - [Ay]_j) (B[j,k] - [B^T x]_k)`.
pub fn c_bimatrix(game: &BimatrixGame, p: &DualPoint) -> f64 {
    assert_point_matches(&game.strategy_counts(), p);
    let x_profile = dual_to_primal(p);
    let x = x_profile.part(0);
    let y = x_profile.part(1);
    let a = game.row_matrix();
    let b = game.col_matrix();
    let ay = a.dot(y);
    let btx = b.t().dot(x);
    let mut total = 0.0;
    for j in 0..a.nrows() {
        for k in 0..a.ncols() {
            total -= x[j] * y[k] * (a[[j, k]] - ay[j]) * (b[[j, k]] - btx[k]);
        }
    }
    total
}

/// `C` in moment form:
/// `-E[(A_jk - A_j - A_k)(B_jk - B_j - B_k)] + E[A_jk] E[B_jk]`,
/// where the expectation draws `j` from `x(p)` and `k` from `y(q)`
/// independently, and subscripted quantities are the conditional means
/// `A_j = [Ay]_j`, `A_k = [A^T x]_k` and likewise for `B`.
pub fn c_bimatrix_expectation_form(game: &BimatrixGame, p: &DualPoint) -> f64 {
    assert_point_matches(&game.strategy_counts(), p);
    let x_profile = dual_to_primal(p);
    let x = x_profile.part(0);
    let y = x_profile.part(1);
    let a = game.row_matrix();
    let b = game.col_matrix();
    let a_row = a.dot(y);
    let a_col = a.t().dot(x);
    let b_row = b.dot(y);
    let b_col = b.t().dot(x);

    let mut cross_moment = 0.0;
    let mut mean_a = 0.0;
    let mut mean_b = 0.0;
    for j in 0..a.nrows() {
        for k in 0..a.ncols() {
            let w = x[j] * y[k];
            cross_moment +=
                w * (a[[j, k]] - a_row[j] - a_col[k]) * (b[[j, k]] - b_row[j] - b_col[k]);
            mean_a += w * a[[j, k]];
            mean_b += w * b[[j, k]];
        }
    }
    -cross_moment + mean_a * mean_b
}

/// `C` of the zero-sum game `(Z, -Z)` as the quadruple average
/// `(1/4) sum x_j y_k x_j' y_k' (Z[j,k] + Z[j',k'] - Z[j,k'] - Z[j',k])^2`.
///
/// This O(n^2 m^2) scan is the designated independent oracle for the
/// zero-sum case; the direct form above is the production evaluator.
pub fn c_zero_sum_quadruple(z: &Array2<f64>, p: &DualPoint) -> f64 {
    assert_point_matches(&[z.nrows(), z.ncols()], p);
    let x_profile = dual_to_primal(p);
    let x = x_profile.part(0);
    let y = x_profile.part(1);
    let (n, m) = z.dim();
    let mut total = 0.0;
    for j in 0..n {
        for j2 in 0..n {
            for k in 0..m {
                for k2 in 0..m {
                    let combo = z[[j, k]] + z[[j2, k2]] - z[[j, k2]] - z[[j2, k]];
                    total += x[j] * y[k] * x[j2] * y[k2] * combo * combo;
                }
            }
        }
    }
    total / 4.0
}

/// Pairwise expected-payoff matrices of a dense game at the profile `x`:
/// `W^{ik}[j, l]` is the expected payoff to player `i` when `i` plays `j`
/// and `k` plays `l` while everyone else follows `x`.
pub(crate) fn pair_payoff_matrix(
    game: &NormalFormGame,
    x: &crate::game::MixedProfile,
    i: usize,
    k: usize,
) -> Array2<f64> {
    let counts = game.strategy_counts();
    Array2::from_shape_fn((counts[i], counts[k]), |(j, l)| {
        expected_payoff(game, x, &[(i, j), (k, l)]).expect("indices in range")
    })
}

fn check_budget(game: &NormalFormGame) -> Result<()> {
    let size = game.profile_count();
    if size > DEFAULT_EXPANSION_BUDGET {
        return Err(Error::BudgetExceeded {
            size,
            budget: DEFAULT_EXPANSION_BUDGET,
        });
    }
    Ok(())
}

/// `C` for a dense N-player game:
/// `-sum_{i<k} sum_{j,l} x_ij x_kl (U^{ki}_{lj} - U^k_l)(U^{ik}_{jl} - U^i_j)`.
/// The `U` terms are exact expectations; each pair's matrices are computed
/// once per call and reused across the inner double sum.
pub fn c_multi(game: &NormalFormGame, p: &DualPoint) -> Result<f64> {
    assert_point_matches(game.strategy_counts(), p);
    check_budget(game)?;
    let x = dual_to_primal(p);
    let counts = game.strategy_counts();
    let players = counts.len();
    let single: Vec<Array1<f64>> = (0..players)
        .map(|i| {
            Array1::from_shape_fn(counts[i], |j| {
                expected_payoff(game, &x, &[(i, j)]).expect("indices in range")
            })
        })
        .collect();
    let mut total = 0.0;
    for i in 0..players {
        for k in i + 1..players {
            let w_ik = pair_payoff_matrix(game, &x, i, k);
            let w_ki = pair_payoff_matrix(game, &x, k, i);
            for j in 0..counts[i] {
                for l in 0..counts[k] {
                    total -= x.prob(i, j)
                        * x.prob(k, l)
                        * (w_ki[[l, j]] - single[k][l])
                        * (w_ik[[j, l]] - single[i][j]);
                }
            }
        }
    }
    Ok(total)
}

/// The pairwise-structured game that reproduces `C` of a dense game at the
/// point `p`: edge matrices are the pair expectations `U^{ik}` at `x(p)`.
/// The construction depends on `p`, so the equivalence is local.
pub fn induced_graphical_game(game: &NormalFormGame, p: &DualPoint) -> Result<GraphicalGame> {
    assert_point_matches(game.strategy_counts(), p);
    check_budget(game)?;
    let x = dual_to_primal(p);
    let counts = game.strategy_counts().to_vec();
    let players = counts.len();
    let mut edges = Vec::new();
    for i in 0..players {
        for k in 0..players {
            if i != k {
                edges.push(((i, k), pair_payoff_matrix(game, &x, i, k)));
            }
        }
    }
    GraphicalGame::new(counts, edges)
}

/// `C` of a pairwise-structured game: the sum of the two-player values of
/// its edge games. Never expands the joint profile space.
pub fn c_graphical(game: &GraphicalGame, p: &DualPoint) -> f64 {
    assert_point_matches(game.strategy_counts(), p);
    let players = game.num_players();
    let mut total = 0.0;
    for i in 0..players {
        for k in i + 1..players {
            if game.pair_is_zero(i, k) {
                continue;
            }
            let edge = game.edge_bimatrix(i, k);
            let sub = DualPoint::new(vec![p.part(i).clone(), p.part(k).clone()])
                .expect("parts of a valid point are finite");
            total += c_bimatrix(&edge, &sub);
        }
    }
    total
}

impl AnyGame {
    /// The volume-change coefficient at `p`, dispatched on representation.
    pub fn c_value(&self, p: &DualPoint) -> Result<f64> {
        match self {
            AnyGame::Bimatrix(g) => Ok(c_bimatrix(g, p)),
            AnyGame::NormalForm(g) => c_multi(g, p),
            AnyGame::Graphical(g) => Ok(c_graphical(g, p)),
        }
    }
}

/// `C` of the zero-sum and coordination parts of a bimatrix game,
/// returned as `(c_zero_sum, c_coordination)`.
pub fn c_split(game: &BimatrixGame, p: &DualPoint) -> (f64, f64) {
    let d = decompose(game);
    (
        c_bimatrix(&d.zero_sum_game(), p),
        c_bimatrix(&d.coordination_game(), p),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MixedProfile;
    use crate::test_util::{
        random_bimatrix, random_dual_point, random_graphical, random_normal_form, worked_example,
    };
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mp_game() -> BimatrixGame {
        BimatrixGame::new(
            arr2(&[[1.0, -1.0], [-1.0, 1.0]]),
            arr2(&[[-1.0, 1.0], [1.0, -1.0]]),
        )
        .unwrap()
    }

    #[test]
    fn zero_game_has_zero_c_everywhere() {
        let zero = BimatrixGame::new(Array2::zeros((3, 2)), Array2::zeros((3, 2))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let p = random_dual_point(&mut rng, &[3, 2], 2.0);
            assert_eq!(c_bimatrix(&zero, &p), 0.0);
            assert_eq!(c_bimatrix_expectation_form(&zero, &p), 0.0);
        }
    }

    #[test]
    fn matching_pennies_uniform_value_is_one() {
        let p = DualPoint::zeros(&[2, 2]);
        assert_abs_diff_eq!(c_bimatrix(&mp_game(), &p), 1.0, epsilon = 1e-12);
        // coordination counterpart is the exact negation
        let a = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        let coord = BimatrixGame::new(a.clone(), a).unwrap();
        assert_abs_diff_eq!(c_bimatrix(&coord, &p), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_form_agrees_with_direct_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let g = random_bimatrix(&mut rng, 2..=5, 5.0);
            let p = random_dual_point(&mut rng, &g.strategy_counts(), 2.0);
            let direct = c_bimatrix(&g, &p);
            let moments = c_bimatrix_expectation_form(&g, &p);
            let scale = g.payoff_scale().powi(2).max(1.0);
            assert!(
                (direct - moments).abs() <= 1e-10 * scale.max(direct.abs()),
                "direct {direct} vs moments {moments}"
            );
        }
    }

    #[test]
    fn worked_example_reduces_to_its_zero_sum_part() {
        let g = worked_example();
        let d = crate::decomposition::decompose(&g);
        let zs = d.zero_sum_game();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let p = if trial == 0 {
                DualPoint::zeros(&[3, 3])
            } else {
                random_dual_point(&mut rng, &[3, 3], 2.0)
            };
            let whole = c_bimatrix(&g, &p);
            let fraction = (1.0 - (0.25_f64).powi(2)) * c_bimatrix(&zs, &p);
            assert!((whole - fraction).abs() <= 1e-10 * whole.abs().max(1.0));
            let moments = c_bimatrix_expectation_form(&g, &p);
            assert!((moments - fraction).abs() <= 1e-10 * whole.abs().max(1.0));
        }
    }

    #[test]
    fn quadruple_form_examples() {
        let trivial = crate::decomposition::TrivialMatrix {
            u: ndarray::arr1(&[1.0, -2.0, 0.5]),
            v: ndarray::arr1(&[3.0, 0.0]),
        };
        let p = DualPoint::zeros(&[3, 2]);
        assert_abs_diff_eq!(
            c_zero_sum_quadruple(&trivial.materialize(), &p),
            0.0,
            epsilon = 1e-12
        );

        let z = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        let uniform = DualPoint::zeros(&[2, 2]);
        assert_abs_diff_eq!(c_zero_sum_quadruple(&z, &uniform), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quadruple_form_matches_direct_zero_sum_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let g = random_bimatrix(&mut rng, 2..=4, 4.0);
            let z = crate::decomposition::decompose(&g).z;
            let zs = BimatrixGame::new(z.clone(), -z.clone()).unwrap();
            let p = random_dual_point(&mut rng, &zs.strategy_counts(), 2.0);
            let direct = c_bimatrix(&zs, &p);
            let quad = c_zero_sum_quadruple(&z, &p);
            assert!((direct - quad).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn antisymmetry_in_the_second_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = random_bimatrix(&mut rng, 2..=4, 4.0);
            let flipped =
                BimatrixGame::new(g.row_matrix().clone(), -g.col_matrix().clone()).unwrap();
            let p = random_dual_point(&mut rng, &g.strategy_counts(), 2.0);
            let lhs = c_bimatrix(&g, &p);
            let rhs = -c_bimatrix(&flipped, &p);
            assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn trivial_shifts_leave_c_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let g = random_bimatrix(&mut rng, 2..=4, 3.0);
            let [n, m] = g.strategy_counts();
            let t1 = crate::test_util::random_trivial(&mut rng, n, m, 3.0).materialize();
            let t2 = crate::test_util::random_trivial(&mut rng, n, m, 3.0).materialize();
            let shifted =
                BimatrixGame::new(g.row_matrix() + &t1, g.col_matrix() + &t2).unwrap();
            let p = random_dual_point(&mut rng, &g.strategy_counts(), 2.0);
            let base = c_bimatrix(&g, &p);
            let moved = c_bimatrix(&shifted, &p);
            assert!((base - moved).abs() <= 1e-10 * base.abs().max(100.0));
        }
    }

    #[test]
    fn two_player_dense_game_matches_bimatrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let g = random_bimatrix(&mut rng, 2..=4, 4.0);
            let nf = g.to_normal_form();
            let p = random_dual_point(&mut rng, &g.strategy_counts(), 2.0);
            let direct = c_bimatrix(&g, &p);
            let multi = c_multi(&nf, &p).unwrap();
            assert!((direct - multi).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn zero_dense_game_has_zero_c() {
        let counts = vec![2usize, 2, 3];
        let zero = NormalFormGame::new(
            counts.clone(),
            vec![ndarray::ArrayD::zeros(ndarray::IxDyn(&counts)); 3],
        )
        .unwrap();
        let p = DualPoint::zeros(&counts);
        assert_eq!(c_multi(&zero, &p).unwrap(), 0.0);
    }

    #[test]
    fn three_player_pairwise_pennies_uniform_value_is_three() {
        let g = crate::test_util::pairwise_matching_pennies(3);
        let p = DualPoint::zeros(&[2, 2, 2]);
        assert_abs_diff_eq!(c_graphical(&g, &p), 3.0, epsilon = 1e-12);
        let nf = crate::game::graphical_to_normal_form(&g).unwrap();
        assert_abs_diff_eq!(c_multi(&nf, &p).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn induced_game_of_two_players_is_the_raw_bimatrix() {
        let g = worked_example();
        let nf = g.to_normal_form();
        let p = DualPoint::zeros(&[3, 3]);
        let induced = induced_graphical_game(&nf, &p).unwrap();
        assert_eq!(induced.edge(0, 1).unwrap(), g.row_matrix());
        assert_eq!(
            induced.edge(1, 0).unwrap(),
            &g.col_matrix().t().to_owned()
        );
    }

    #[test]
    fn induced_game_of_graphical_game_shifts_edges_by_row_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_graphical(&mut rng, &[2, 3, 2], 3.0);
        let nf = crate::game::graphical_to_normal_form(&g).unwrap();
        let p = random_dual_point(&mut rng, &[2, 3, 2], 1.5);
        let induced = induced_graphical_game(&nf, &p).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                if i == k {
                    continue;
                }
                let diff = induced.edge_or_zero(i, k) - g.edge_or_zero(i, k);
                // the shift depends only on i's own strategy, i.e. it is
                // constant along the k-axis, hence a trivial matrix
                for j in 0..diff.nrows() {
                    for l in 0..diff.ncols() {
                        assert_abs_diff_eq!(diff[[j, l]], diff[[j, 0]], epsilon = 1e-12);
                    }
                }
                assert!(crate::decomposition::is_trivial(&diff, 1e-10));
            }
        }
    }

    #[test]
    fn induced_game_preserves_c_on_random_three_player_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let g = random_normal_form(&mut rng, &[2, 3, 2], 3.0);
            let p = random_dual_point(&mut rng, &[2, 3, 2], 1.5);
            let dense = c_multi(&g, &p).unwrap();
            let induced = induced_graphical_game(&g, &p).unwrap();
            let viaedges = c_graphical(&induced, &p);
            assert!((dense - viaedges).abs() <= 1e-9 * dense.abs().max(1.0));
        }
    }

    #[test]
    fn single_edge_graphical_game_reduces_to_its_edge() {
        let g = worked_example();
        let graphical = GraphicalGame::new(
            vec![3, 3],
            vec![
                ((0, 1), g.row_matrix().clone()),
                ((1, 0), g.col_matrix().t().to_owned()),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_dual_point(&mut rng, &[3, 3], 2.0);
        assert_abs_diff_eq!(
            c_graphical(&graphical, &p),
            c_bimatrix(&g, &p),
            epsilon = 1e-12
        );
    }

    #[test]
    fn graphical_c_agrees_with_dense_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let g = random_graphical(&mut rng, &[2, 2, 3], 3.0);
            let nf = crate::game::graphical_to_normal_form(&g).unwrap();
            let p = random_dual_point(&mut rng, &[2, 2, 3], 1.5);
            let via_edges = c_graphical(&g, &p);
            let via_dense = c_multi(&nf, &p).unwrap();
            assert!((via_edges - via_dense).abs() <= 1e-9 * via_dense.abs().max(1.0));
        }
    }

    #[test]
    fn sign_laws_hold_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = random_bimatrix(&mut rng, 2..=4, 2.0);
            let d = crate::decomposition::decompose(&g);
            let zs = d.zero_sum_game();
            let coord = d.coordination_game();
            for _ in 0..50 {
                let p = random_dual_point(&mut rng, &g.strategy_counts(), 2.0);
                assert!(c_bimatrix(&zs, &p) >= -1e-12);
                assert!(c_bimatrix(&coord, &p) <= 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_single_strategy_player_contributes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let base = random_bimatrix(&mut rng, 2..=3, 3.0);
        let [n1, n2] = base.strategy_counts();
        // embed the two-player game in a three-player game where the third
        // player has one strategy and constant payoff
        let counts = vec![n1, n2, 1];
        let len = n1 * n2;
        let mut t0 = Vec::with_capacity(len);
        let mut t1 = Vec::with_capacity(len);
        for j in 0..n1 {
            for k in 0..n2 {
                t0.push(base.row_matrix()[[j, k]]);
                t1.push(base.col_matrix()[[j, k]]);
            }
        }
        let shape = ndarray::IxDyn(&counts);
        let g = NormalFormGame::new(
            counts.clone(),
            vec![
                ndarray::ArrayD::from_shape_vec(shape.clone(), t0).unwrap(),
                ndarray::ArrayD::from_shape_vec(shape.clone(), t1).unwrap(),
                ndarray::ArrayD::zeros(shape),
            ],
        )
        .unwrap();
        let p2 = random_dual_point(&mut rng, &[n1, n2], 2.0);
        let p3 = DualPoint::new(vec![
            p2.part(0).clone(),
            p2.part(1).clone(),
            ndarray::arr1(&[0.7]),
        ])
        .unwrap();
        let c2 = c_bimatrix(&base, &p2);
        let c3 = c_multi(&g, &p3).unwrap();
        assert_abs_diff_eq!(c2, c3, epsilon = 1e-12 * c2.abs().max(1.0));
        let x = dual_to_primal(&p3);
        assert_eq!(x.prob(2, 0), 1.0);
        let _ = MixedProfile::new(x.parts().to_vec()).unwrap();
    }
}
