//! Shared fixtures for the unit-test suites.

use ndarray::{arr2, Array1, Array2, ArrayD, IxDyn};
use rand::Rng;

use crate::decomposition::TrivialMatrix;
use crate::game::{BimatrixGame, DualPoint, GraphicalGame, NormalFormGame};

/// The running 3x3 example: a game whose coordination part is a trivial
/// matrix plus a quarter of its zero-sum part.
pub fn worked_example() -> BimatrixGame {
    BimatrixGame::new(
        arr2(&[[4.0, 12.0, -6.0], [-8.0, 0.0, 12.0], [14.0, -8.0, 4.0]]),
        arr2(&[[4.0, -4.0, 10.0], [8.0, 0.0, -4.0], [-2.0, 8.0, 4.0]]),
    )
    .unwrap()
}

pub fn matching_pennies() -> BimatrixGame {
    BimatrixGame::new(
        arr2(&[[1.0, -1.0], [-1.0, 1.0]]),
        arr2(&[[-1.0, 1.0], [1.0, -1.0]]),
    )
    .unwrap()
}

pub fn pairwise_matching_pennies(players: usize) -> GraphicalGame {
    let mp = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
    let mut edges = Vec::new();
    for i in 0..players {
        for k in (i + 1)..players {
            edges.push(((i, k), mp.clone()));
            edges.push(((k, i), -mp.clone()));
        }
    }
    GraphicalGame::new(vec![2; players], edges).unwrap()
}

pub fn random_bimatrix<R: Rng>(
    rng: &mut R,
    sizes: std::ops::RangeInclusive<usize>,
    scale: f64,
) -> BimatrixGame {
    let n = rng.random_range(sizes.clone());
    let m = rng.random_range(sizes);
    let a = Array2::from_shape_fn((n, m), |_| rng.random_range(-scale..scale));
    let b = Array2::from_shape_fn((n, m), |_| rng.random_range(-scale..scale));
    BimatrixGame::new(a, b).unwrap()
}

pub fn random_dual_point<R: Rng>(rng: &mut R, counts: &[usize], spread: f64) -> DualPoint {
    DualPoint::new(
        counts
            .iter()
            .map(|&n| Array1::from_shape_fn(n, |_| rng.random_range(-spread..spread)))
            .collect(),
    )
    .unwrap()
}

pub fn random_normal_form<R: Rng>(rng: &mut R, counts: &[usize], scale: f64) -> NormalFormGame {
    let len: usize = counts.iter().product();
    let tensors = (0..counts.len())
        .map(|_| {
            let data: Vec<f64> = (0..len).map(|_| rng.random_range(-scale..scale)).collect();
            ArrayD::from_shape_vec(IxDyn(counts), data).unwrap()
        })
        .collect();
    NormalFormGame::new(counts.to_vec(), tensors).unwrap()
}

/// Random pairwise game with every ordered edge present.
pub fn random_graphical<R: Rng>(rng: &mut R, counts: &[usize], scale: f64) -> GraphicalGame {
    let players = counts.len();
    let mut edges = Vec::new();
    for i in 0..players {
        for k in 0..players {
            if i != k {
                let h = Array2::from_shape_fn((counts[i], counts[k]), |_| {
                    rng.random_range(-scale..scale)
                });
                edges.push(((i, k), h));
            }
        }
    }
    GraphicalGame::new(counts.to_vec(), edges).unwrap()
}

pub fn random_trivial<R: Rng>(rng: &mut R, n: usize, m: usize, scale: f64) -> TrivialMatrix {
    TrivialMatrix {
        u: Array1::from_shape_fn(n, |_| rng.random_range(-scale..scale)),
        v: Array1::from_shape_fn(m, |_| rng.random_range(-scale..scale)),
    }
}
