#![allow(dead_code)]

//! Shared fixtures for the integration suites.

use ndarray::{arr2, Array1, Array2, ArrayD, IxDyn};
use rand::Rng;

use chaoscope_core::{BimatrixGame, DualPoint, GraphicalGame, NormalFormGame, TrivialMatrix};

/// The running 3x3 example whose coordination part is a trivial matrix
/// plus a quarter of its zero-sum part.
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

#[allow(dead_code)]
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

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, m: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| rng.random_range(-scale..scale))
}

pub fn random_bimatrix<R: Rng>(
    rng: &mut R,
    sizes: std::ops::RangeInclusive<usize>,
    scale: f64,
) -> BimatrixGame {
    let n = rng.random_range(sizes.clone());
    let m = rng.random_range(sizes);
    BimatrixGame::new(
        random_matrix(rng, n, m, scale),
        random_matrix(rng, n, m, scale),
    )
    .unwrap()
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

pub fn random_trivial<R: Rng>(rng: &mut R, n: usize, m: usize, scale: f64) -> TrivialMatrix {
    TrivialMatrix {
        u: Array1::from_shape_fn(n, |_| rng.random_range(-scale..scale)),
        v: Array1::from_shape_fn(m, |_| rng.random_range(-scale..scale)),
    }
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

#[allow(dead_code)]
pub fn random_graphical<R: Rng>(rng: &mut R, counts: &[usize], scale: f64) -> GraphicalGame {
    let players = counts.len();
    let mut edges = Vec::new();
    for i in 0..players {
        for k in 0..players {
            if i != k {
                edges.push(((i, k), random_matrix(rng, counts[i], counts[k], scale)));
            }
        }
    }
    GraphicalGame::new(counts.to_vec(), edges).unwrap()
}

/// A random tensor of the given shape.
pub fn random_tensor<R: Rng>(rng: &mut R, counts: &[usize], scale: f64) -> ArrayD<f64> {
    let len: usize = counts.iter().product();
    let data: Vec<f64> = (0..len).map(|_| rng.random_range(-scale..scale)).collect();
    ArrayD::from_shape_vec(IxDyn(counts), data).unwrap()
}
