//! Seeded sampling of the interior region in dual coordinates.
//!
//! Points are drawn in the primal polytope `{x : x_ij >= delta}`, either
//! uniformly (per-player Dirichlet on the shrunken simplex) or on a
//! deterministic lattice that includes the polytope's corners, and mapped
//! to the dual space through the componentwise logarithm, which is a valid
//! softmax preimage.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{DualPoint, RegionSpec};

/// Cap on the number of lattice points a grid plan may enumerate.
const GRID_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SamplePlan {
    /// Uniform draws over the region, reproducible from the seed.
    Random { count: usize, seed: u64 },
    /// Simplex lattice per player with `resolution` subdivisions; includes
    /// every corner of the region.
    Grid { resolution: usize },
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All compositions of `total` into `parts` non-negative summands.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut item = Vec::with_capacity(parts);
            item.push(first);
            item.append(&mut rest);
            out.push(item);
        }
    }
    out
}

fn dirichlet_uniform<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    // normalized unit exponentials sample the simplex uniformly
    let mut draws = Vec::with_capacity(n);
    let mut total = 0.0;
    for _ in 0..n {
        let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
        let e = -u.ln();
        draws.push(e);
        total += e;
    }
    draws.iter().map(|e| e / total).collect()
}

/// Two independent standard normals via Box-Muller.
fn normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// A uniformly random direction on the unit sphere in `dim` dimensions.
pub fn unit_sphere_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    assert!(dim >= 1);
    loop {
        let mut v = Vec::with_capacity(dim);
        while v.len() < dim {
            let (a, b) = normal_pair(rng);
            v.push(a);
            if v.len() < dim {
                v.push(b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn primal_to_dual(per_player: Vec<Vec<f64>>) -> DualPoint {
    DualPoint::new(
        per_player
            .into_iter()
            .map(|x| Array1::from(x.into_iter().map(|v| v.ln()).collect::<Vec<f64>>()))
            .collect(),
    )
    .expect("interior primal points have finite logarithms")
}

/// Dual points whose primal images lie in the region, following the plan.
pub fn sample_region_dual_points(
    counts: &[usize],
    region: &RegionSpec,
    plan: &SamplePlan,
) -> Result<Vec<DualPoint>> {
    let delta = region.delta();
    let max_n = counts.iter().copied().max().unwrap_or(1);
    if delta > 1.0 / max_n as f64 {
        return Err(Error::EmptyRegion {
            delta,
            counts: counts.to_vec(),
        });
    }
    match plan {
        SamplePlan::Random { count, seed } => {
            if *count == 0 {
                return Err(Error::InvalidParameter {
                    name: "count",
                    reason: "sample budget must be positive".into(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut points = Vec::with_capacity(*count);
            for _ in 0..*count {
                let per_player = counts
                    .iter()
                    .map(|&n| {
                        let free = 1.0 - n as f64 * delta;
                        dirichlet_uniform(&mut rng, n)
                            .into_iter()
                            .map(|y| delta + free * y)
                            .collect()
                    })
                    .collect();
                points.push(primal_to_dual(per_player));
            }
            Ok(points)
        }
        SamplePlan::Grid { resolution } => {
            let m = (*resolution).max(1);
            let mut total: usize = 1;
            for &n in counts {
                let per_player = binomial(m + n - 1, n - 1);
                total = total.saturating_mul(per_player);
            }
            if total > GRID_BUDGET {
                return Err(Error::BudgetExceeded {
                    size: total,
                    budget: GRID_BUDGET,
                });
            }
            // per-player lattices, then their cartesian product
            let lattices: Vec<Vec<Vec<f64>>> = counts
                .iter()
                .map(|&n| {
                    let free = 1.0 - n as f64 * delta;
                    compositions(m, n)
                        .into_iter()
                        .map(|ks| {
                            ks.into_iter()
                                .map(|k| delta + free * k as f64 / m as f64)
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let mut points = Vec::with_capacity(total);
            let mut cursor = vec![0usize; counts.len()];
            loop {
                let per_player: Vec<Vec<f64>> = cursor
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| lattices[i][c].clone())
                    .collect();
                points.push(primal_to_dual(per_player));
                // odometer over the per-player lattices
                let mut pos = counts.len();
                loop {
                    if pos == 0 {
                        return Ok(points);
                    }
                    pos -= 1;
                    cursor[pos] += 1;
                    if cursor[pos] < lattices[pos].len() {
                        break;
                    }
                    cursor[pos] = 0;
                }
            }
        }
    }
}
