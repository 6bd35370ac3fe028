//! Canonical bimatrix decomposition and the trivial-matrix toolbox.
//!
//! Every bimatrix game `(A, B)` splits uniquely into a zero-sum part
//! `(Z, -Z)` and a coordination part `(C, C)` with `Z = (A - B)/2` and
//! `C = (A + B)/2`. Matrices of the form `T[j,k] = u[j] + v[k]` ("trivial
//! matrices") never influence the volume-change behavior of learning
//! dynamics, so several routines here measure or remove the trivial
//! component of a matrix: a Chebyshev (max-norm) fit solved by an exact
//! LP, and a least-squares (Frobenius) projection in closed form.

use ndarray::{Array1, Array2, ArrayD};

use crate::error::{Error, Result};
use crate::game::{BimatrixGame, NormalFormGame, ProfileIter};
use crate::lp;

/// Zero-sum and coordination parts of a bimatrix game.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub z: Array2<f64>,
    pub c: Array2<f64>,
}

impl Decomposition {
    /// The zero-sum component as a game, `(Z, -Z)`.
    pub fn zero_sum_game(&self) -> BimatrixGame {
        BimatrixGame::new(self.z.clone(), -self.z.clone()).expect("shapes agree")
    }

    /// The coordination component as a game, `(C, C)`.
    pub fn coordination_game(&self) -> BimatrixGame {
        BimatrixGame::new(self.c.clone(), self.c.clone()).expect("shapes agree")
    }
}

/// `Z = (A - B)/2`, `C = (A + B)/2`; `A = Z + C` and `B = C - Z` up to
/// round-off (exactly, whenever the halved sums are representable).
pub fn decompose(game: &BimatrixGame) -> Decomposition {
    let a = game.row_matrix();
    let b = game.col_matrix();
    Decomposition {
        z: (a - b) / 2.0,
        c: (a + b) / 2.0,
    }
}

/// A rank-style additive matrix `T[j,k] = u[j] + v[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrivialMatrix {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
}

impl TrivialMatrix {
    pub fn materialize(&self) -> Array2<f64> {
        let n = self.u.len();
        let m = self.v.len();
        Array2::from_shape_fn((n, m), |(j, k)| self.u[j] + self.v[k])
    }
}

/// The alternating sum `K[j,k] + K[j',k'] - K[j,k'] - K[j',k]` of a 2x2
/// sub-pattern. Trivial matrices have all such combinations equal to zero.
pub fn quadruple_combination(k: &Array2<f64>, j: usize, j2: usize, c: usize, c2: usize) -> f64 {
    k[[j, c]] + k[[j2, c2]] - k[[j, c2]] - k[[j2, c]]
}

/// Largest absolute quadruple combination and a witness attaining it.
pub fn max_quadruple(k: &Array2<f64>) -> (f64, [usize; 4]) {
    let (n, m) = k.dim();
    let mut best = 0.0;
    let mut witness = [0, 0, 0, 0];
    for j in 0..n {
        for j2 in 0..n {
            for c in 0..m {
                for c2 in 0..m {
                    let v = quadruple_combination(k, j, j2, c, c2).abs();
                    if v > best {
                        best = v;
                        witness = [j, j2, c, c2];
                    }
                }
            }
        }
    }
    (best, witness)
}

/// O(nm) triviality test anchored at the first row and column:
/// `K[j,k] - K[j,0] - K[0,k] + K[0,0]` must vanish for all `(j, k)`.
pub fn is_trivial(k: &Array2<f64>, tol: f64) -> bool {
    assert!(tol >= 0.0, "tolerance must be non-negative");
    let (n, m) = k.dim();
    for j in 0..n {
        for c in 0..m {
            if quadruple_combination(k, j, 0, c, 0).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Best max-norm approximation of `K` by a trivial matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevFit {
    /// Optimal radius: `max_{j,k} |K[j,k] - g[j] - h[k]|` at the optimum.
    pub r: f64,
    /// Row offsets of the optimizing trivial matrix; `g[0]` is pinned to 0
    /// to remove the additive degeneracy.
    pub g: Array1<f64>,
    /// Column offsets of the optimizing trivial matrix.
    pub h: Array1<f64>,
}

impl ChebyshevFit {
    /// `K - (g + h)` entrywise.
    pub fn residual(&self, k: &Array2<f64>) -> Array2<f64> {
        let (n, m) = k.dim();
        Array2::from_shape_fn((n, m), |(j, c)| k[[j, c]] - self.g[j] - self.h[c])
    }
}

/// Solve `min r  s.t.  -r <= K[j,k] - g[j] - h[k] <= r` exactly with the
/// in-crate dense simplex. The LP is always feasible and bounded below by
/// zero, so this cannot fail.
pub fn chebyshev_fit(k: &Array2<f64>) -> ChebyshevFit {
    let (n, m) = k.dim();
    assert!(n > 0 && m > 0, "matrix must be non-empty");
    assert!(k.iter().all(|v| v.is_finite()), "matrix must be finite");

    // variables: [r | g+_1.. | g-_1.. | h+_0.. | h-_0..], g_0 pinned to 0
    let gp = |j: usize| 1 + (j - 1);
    let gm = |j: usize| 1 + (n - 1) + (j - 1);
    let hp = |c: usize| 1 + 2 * (n - 1) + c;
    let hm = |c: usize| 1 + 2 * (n - 1) + m + c;
    let num_vars = 1 + 2 * (n - 1) + 2 * m;

    let mut constraints = Vec::with_capacity(2 * n * m);
    for j in 0..n {
        for c in 0..m {
            // K - g - h <= r
            let mut lo = vec![0.0; num_vars];
            lo[0] = -1.0;
            if j > 0 {
                lo[gp(j)] = -1.0;
                lo[gm(j)] = 1.0;
            }
            lo[hp(c)] = -1.0;
            lo[hm(c)] = 1.0;
            constraints.push((lo, -k[[j, c]]));
            // g + h - K <= r
            let mut hi = vec![0.0; num_vars];
            hi[0] = -1.0;
            if j > 0 {
                hi[gp(j)] = 1.0;
                hi[gm(j)] = -1.0;
            }
            hi[hp(c)] = 1.0;
            hi[hm(c)] = -1.0;
            constraints.push((hi, k[[j, c]]));
        }
    }

    let mut cost = vec![0.0; num_vars];
    cost[0] = 1.0;
    let sol = lp::solve_min(&cost, &constraints)
        .expect("Chebyshev fit LP is always feasible and bounded");

    let mut g = Array1::zeros(n);
    for j in 1..n {
        g[j] = sol.x[gp(j)] - sol.x[gm(j)];
    }
    let mut h = Array1::zeros(m);
    for c in 0..m {
        h[c] = sol.x[hp(c)] - sol.x[hm(c)];
    }
    ChebyshevFit {
        r: sol.x[0].max(0.0),
        g,
        h,
    }
}

/// Least-squares projection of `K` onto the trivial subspace under the
/// unweighted Frobenius inner product. Returns the projection, the
/// residual `K - T`, and the Frobenius norm of the residual. The residual
/// has all row and column sums equal to zero, hence is orthogonal to
/// every trivial matrix.
pub fn l2_trivial_projection(k: &Array2<f64>) -> (TrivialMatrix, Array2<f64>, f64) {
    let (n, m) = k.dim();
    let grand = k.sum() / (n * m) as f64;
    let row_means = k.sum_axis(ndarray::Axis(1)) / m as f64;
    let col_means = k.sum_axis(ndarray::Axis(0)) / n as f64;
    let trivial = TrivialMatrix {
        u: row_means.mapv(|v| v - grand),
        v: col_means,
    };
    let projected = trivial.materialize();
    let residual = k - &projected;
    let distance = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
    (trivial, residual, distance)
}

/// Maximum violation of the exact-potential identity: how far the
/// unilateral payoff differences of `game` deviate from the differences
/// of the candidate potential tensor.
pub fn potential_deviation(game: &NormalFormGame, potential: &ArrayD<f64>) -> Result<f64> {
    let counts = game.strategy_counts();
    if potential.shape() != counts {
        return Err(Error::Shape {
            context: "potential tensor",
            expected: format!("{:?}", counts),
            actual: format!("{:?}", potential.shape()),
        });
    }
    let mut worst: f64 = 0.0;
    for profile in ProfileIter::new(counts) {
        for i in 0..counts.len() {
            let mut alt = profile.clone();
            for s in 0..counts[i] {
                alt[i] = s;
                let du = game.payoff(i, &profile) - game.payoff(i, &alt);
                let dp = potential[profile.as_slice()] - potential[alt.as_slice()];
                worst = worst.max((du - dp).abs());
            }
        }
    }
    Ok(worst)
}

/// Recover a potential matrix for a two-player game if one exists within
/// `tol`. The candidate is anchored on the first row, `P[j,k] = A[j,k] -
/// A[0,k]`, and accepted only when both `A - P` and `B - P` are trivial;
/// a potential is unique only up to trivial matrices, so callers must
/// compare candidates modulo that freedom.
pub fn extract_bimatrix_potential(game: &BimatrixGame, tol: f64) -> Option<Array2<f64>> {
    let a = game.row_matrix();
    let b = game.col_matrix();
    let (n, m) = a.dim();
    let p = Array2::from_shape_fn((n, m), |(j, k)| a[[j, k]] - a[[0, k]]);
    let a_rem = a - &p;
    let b_rem = b - &p;
    if is_trivial(&a_rem, tol) && is_trivial(&b_rem, tol) {
        Some(p)
    } else {
        None
    }
}

/// The common-payoff game in which every player receives the potential
/// value: all payoff tensors equal `potential`.
pub fn potential_coordination_lift(
    game: &NormalFormGame,
    potential: &ArrayD<f64>,
) -> Result<NormalFormGame> {
    let counts = game.strategy_counts();
    if potential.shape() != counts {
        return Err(Error::Shape {
            context: "potential tensor",
            expected: format!("{:?}", counts),
            actual: format!("{:?}", potential.shape()),
        });
    }
    let tensors = vec![potential.clone(); counts.len()];
    NormalFormGame::new(counts.to_vec(), tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2, IxDyn};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    pub(crate) fn worked_example() -> BimatrixGame {
        BimatrixGame::new(
            arr2(&[[4.0, 12.0, -6.0], [-8.0, 0.0, 12.0], [14.0, -8.0, 4.0]]),
            arr2(&[[4.0, -4.0, 10.0], [8.0, 0.0, -4.0], [-2.0, 8.0, 4.0]]),
        )
        .unwrap()
    }

    #[test]
    fn coordination_game_has_zero_z() {
        let a = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        let g = BimatrixGame::new(a.clone(), a.clone()).unwrap();
        let d = decompose(&g);
        assert!(d.z.iter().all(|&v| v == 0.0));
        assert_eq!(d.c, a);
    }

    #[test]
    fn zero_sum_game_has_zero_c() {
        let a = arr2(&[[1.0, -2.0], [0.5, 4.0]]);
        let g = BimatrixGame::new(a.clone(), -a.clone()).unwrap();
        let d = decompose(&g);
        assert!(d.c.iter().all(|&v| v == 0.0));
        assert_eq!(d.z, a);
    }

    #[test]
    fn worked_example_decomposition_is_exact() {
        let d = decompose(&worked_example());
        let expected_c = arr2(&[[4.0, 4.0, 2.0], [0.0, 0.0, 4.0], [6.0, 0.0, 4.0]]);
        let expected_z = arr2(&[[0.0, 8.0, -8.0], [-8.0, 0.0, 8.0], [8.0, -8.0, 0.0]]);
        assert_eq!(d.c, expected_c);
        assert_eq!(d.z, expected_z);
        // the coordination part further splits as trivial + Z/4
        let nontrivial = &d.c - &(&d.z / 4.0);
        assert!(is_trivial(&nontrivial, 1e-12));
    }

    #[test]
    fn reconstruction_is_exact() {
        let g = worked_example();
        let d = decompose(&g);
        let a_back = &d.z + &d.c;
        let b_back = &d.c - &d.z;
        assert_eq!(&a_back, g.row_matrix());
        assert_eq!(&b_back, g.col_matrix());
    }

    #[test]
    fn triviality_examples() {
        let t = TrivialMatrix {
            u: arr1(&[1.0, 2.0]),
            v: arr1(&[3.0, 4.0]),
        };
        let m = t.materialize();
        assert_eq!(m, arr2(&[[4.0, 5.0], [5.0, 6.0]]));
        assert!(is_trivial(&m, 0.0));
        assert!(!is_trivial(&Array2::eye(2), 1e-9));
        assert!(is_trivial(&Array2::zeros((3, 4)), 0.0));
    }

    #[test]
    fn chebyshev_fit_of_trivial_matrix_is_zero() {
        let t = TrivialMatrix {
            u: arr1(&[0.5, -1.0, 2.0]),
            v: arr1(&[1.0, 0.0]),
        };
        let fit = chebyshev_fit(&t.materialize());
        assert_abs_diff_eq!(fit.r, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn chebyshev_fit_matches_two_by_two_closed_form() {
        let k = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        let fit = chebyshev_fit(&k);
        let closed_form = quadruple_combination(&k, 0, 1, 0, 1).abs() / 4.0;
        assert_abs_diff_eq!(fit.r, closed_form, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.r, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn chebyshev_fit_on_worked_example_parts() {
        let d = decompose(&worked_example());
        assert_abs_diff_eq!(chebyshev_fit(&d.z).r, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(chebyshev_fit(&d.c).r, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn chebyshev_residual_attains_radius_with_both_signs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let n = rng.random_range(2..=5);
            let m = rng.random_range(2..=5);
            let k = Array2::from_shape_fn((n, m), |_| rng.random_range(-4.0..4.0));
            let fit = chebyshev_fit(&k);
            let res = fit.residual(&k);
            let max_abs = res.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            assert_abs_diff_eq!(max_abs, fit.r, epsilon = 1e-9);
            if fit.r > 1e-9 {
                let hits_hi = res.iter().filter(|v| **v >= fit.r - 1e-9).count();
                let hits_lo = res.iter().filter(|v| **v <= -fit.r + 1e-9).count();
                assert!(hits_hi >= 1 && hits_lo >= 1, "optimum must pinch both sides");
                assert!(
                    hits_hi + hits_lo >= n + m,
                    "vertex optimum should activate at least n+m constraints, got {}",
                    hits_hi + hits_lo
                );
            }
            // independent lower bound: r >= max quadruple / 4
            let (qmax, _) = max_quadruple(&k);
            assert!(fit.r >= qmax / 4.0 - 1e-9);
        }
    }

    #[test]
    fn l2_projection_examples() {
        let t = TrivialMatrix {
            u: arr1(&[1.0, -2.0]),
            v: arr1(&[0.5, 3.0]),
        };
        let (_, residual, distance) = l2_trivial_projection(&t.materialize());
        assert!(residual.iter().all(|v| v.abs() < 1e-12));
        assert_abs_diff_eq!(distance, 0.0, epsilon = 1e-12);

        let k = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        let (_, residual, distance) = l2_trivial_projection(&k);
        assert_eq!(residual, k);
        assert_abs_diff_eq!(distance, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn l2_residual_is_orthogonal_to_trivial_space() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(2..=5);
            let m = rng.random_range(2..=5);
            let k = Array2::from_shape_fn((n, m), |_| rng.random_range(-4.0..4.0));
            let (trivial, residual, distance) = l2_trivial_projection(&k);
            let probe = TrivialMatrix {
                u: Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0)),
                v: Array1::from_shape_fn(m, |_| rng.random_range(-2.0..2.0)),
            };
            let inner: f64 = residual
                .iter()
                .zip(probe.materialize().iter())
                .map(|(a, b)| a * b)
                .sum();
            assert_abs_diff_eq!(inner, 0.0, epsilon = 1e-10);
            // Pythagoras: |K|^2 = |projection|^2 + distance^2
            let norm_k: f64 = k.iter().map(|v| v * v).sum();
            let norm_p: f64 = trivial.materialize().iter().map(|v| v * v).sum();
            let lhs = norm_p + distance * distance;
            assert!((lhs - norm_k).abs() <= 1e-9 * norm_k.max(1.0));
        }
    }

    #[test]
    fn potential_of_coordination_game_is_payoff_matrix_mod_trivial() {
        let a = arr2(&[[3.0, 1.0], [0.0, 2.0]]);
        let g = BimatrixGame::new(a.clone(), a.clone()).unwrap();
        let p = extract_bimatrix_potential(&g, 1e-10).expect("coordination is potential");
        assert!(is_trivial(&(&a - &p), 1e-10));
        assert!(is_trivial(&(g.col_matrix() - &p), 1e-10));
    }

    #[test]
    fn potential_round_trip_recovers_modulo_trivial() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(2..=4);
            let m = rng.random_range(2..=4);
            let p = Array2::from_shape_fn((n, m), |_| rng.random_range(-3.0..3.0));
            let t1 = TrivialMatrix {
                u: Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0)),
                v: Array1::from_shape_fn(m, |_| rng.random_range(-2.0..2.0)),
            };
            let t2 = TrivialMatrix {
                u: Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0)),
                v: Array1::from_shape_fn(m, |_| rng.random_range(-2.0..2.0)),
            };
            let g = BimatrixGame::new(&p + &t1.materialize(), &p + &t2.materialize()).unwrap();
            let p_out = extract_bimatrix_potential(&g, 1e-9).expect("constructed potential game");
            assert!(is_trivial(&(g.row_matrix() - &p_out), 1e-9));
            assert!(is_trivial(&(g.col_matrix() - &p_out), 1e-9));
        }
    }

    #[test]
    fn matching_pennies_is_not_a_potential_game() {
        let a = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        let g = BimatrixGame::new(a.clone(), -a).unwrap();
        assert!(extract_bimatrix_potential(&g, 1e-9).is_none());
    }

    #[test]
    fn coordination_lift_for_two_players_is_the_coordination_game() {
        let p = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        let g = BimatrixGame::new(p.clone(), p.clone()).unwrap().to_normal_form();
        let tensor = p.clone().into_dyn();
        let lifted = potential_coordination_lift(&g, &tensor).unwrap();
        assert_eq!(lifted.payoff_tensor(0), lifted.payoff_tensor(1));
        assert_eq!(lifted.payoff_tensor(0), &tensor);
        // a common-payoff game is its own exact potential
        assert_abs_diff_eq!(potential_deviation(&lifted, &tensor).unwrap(), 0.0);

        let zeros = ArrayD::<f64>::zeros(IxDyn(&[2, 2]));
        let lifted_zero = potential_coordination_lift(&g, &zeros).unwrap();
        assert!(lifted_zero.payoff_tensor(0).iter().all(|&v| v == 0.0));
        assert!(lifted_zero.payoff_tensor(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coordination_lift_validates_shape() {
        let g = worked_example().to_normal_form();
        let wrong = ArrayD::<f64>::zeros(IxDyn(&[2, 2]));
        assert!(matches!(
            potential_coordination_lift(&g, &wrong),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn random_three_player_common_payoff_game_is_its_own_potential() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let counts = vec![2usize, 3, 2];
        let len: usize = counts.iter().product();
        let data: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let p = ArrayD::from_shape_vec(IxDyn(&counts), data).unwrap();
        let zero = NormalFormGame::new(
            counts.clone(),
            vec![ArrayD::zeros(IxDyn(&counts)); 3],
        )
        .unwrap();
        let lifted = potential_coordination_lift(&zero, &p).unwrap();
        assert_abs_diff_eq!(potential_deviation(&lifted, &p).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn quadruples_are_invariant_under_trivial_shifts(
            entries in proptest::collection::vec(-5.0f64..5.0, 9),
            u in proptest::collection::vec(-5.0f64..5.0, 3),
            v in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let k = Array2::from_shape_vec((3, 3), entries).unwrap();
            let t = TrivialMatrix { u: Array1::from(u), v: Array1::from(v) };
            let shifted = &k - &t.materialize();
            for j in 0..3 {
                for j2 in 0..3 {
                    for c in 0..3 {
                        for c2 in 0..3 {
                            let q1 = quadruple_combination(&k, j, j2, c, c2);
                            let q2 = quadruple_combination(&shifted, j, j2, c, c2);
                            prop_assert!((q1 - q2).abs() <= 1e-12);
                        }
                    }
                }
            }
        }

        #[test]
        fn decompose_reconstructs_to_round_off(
            a in proptest::collection::vec(-10.0f64..10.0, 6),
            b in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let a = Array2::from_shape_vec((2, 3), a).unwrap();
            let b = Array2::from_shape_vec((2, 3), b).unwrap();
            let g = BimatrixGame::new(a.clone(), b.clone()).unwrap();
            let d = decompose(&g);
            let a_back = &d.z + &d.c;
            let b_back = &d.c - &d.z;
            for (got, want) in a_back.iter().zip(a.iter()) {
                prop_assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0));
            }
            for (got, want) in b_back.iter().zip(b.iter()) {
                prop_assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0));
            }
        }
    }
}
