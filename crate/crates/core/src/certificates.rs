//! Decision procedures that certify chaotic (volume-expanding) behavior.
//!
//! A certificate carries a proven lower bound `cbar_lower` on the
//! volume-change coefficient over the interior region `S^delta` (on `-C`
//! for the optimistic rule) together with the implied Lyapunov exponent
//! `cbar_lower * eps^2 / (2 d)`, where `d` is the dual dimension. Every
//! bound emitted here is conservative: it is derived from the
//! quadruple/Chebyshev inequalities, so grid or random sampling of `C`
//! over the region can never fall below it (up to round-off). The looser
//! headline rates quoted in the published analyses of these criteria are
//! reported alongside as `paper_exponent`; they drop some powers of
//! `delta` relative to the conservative route and are never used as
//! bounds here.

use ndarray::{Array1, Array2, ArrayD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfunction::c_bimatrix;
use crate::decomposition::{
    chebyshev_fit, decompose, is_trivial, l2_trivial_projection, potential_coordination_lift,
    potential_deviation, quadruple_combination,
};
use crate::error::{Error, Result};
use crate::game::{
    AnyGame, BimatrixGame, DualPoint, GraphicalGame, NormalFormGame, ProfileIter, RegionSpec,
};
use crate::sampling::{sample_region_dual_points, SamplePlan};

/// Which learning rule a certificate speaks about. The volume behavior of
/// the optimistic rule is the exact mirror of the plain rule, so `Omwu`
/// certificates bound `-C` where `Mwu` certificates bound `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "MWU")]
    Mwu,
    #[serde(rename = "OMWU")]
    Omwu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Domination,
    Lp,
    GraphicalFamily,
    PotentialNegativity,
}

/// A proven chaos certificate for a region of the dual space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosCertificate {
    pub kind: CertificateKind,
    pub algorithm: Algorithm,
    pub region_delta: f64,
    /// Certified lower bound on `C` (or `-C` for the optimistic rule)
    /// over the region.
    pub cbar_lower: f64,
    /// `cbar_lower * eps^2 / (2 d)` with `d` the dual dimension.
    pub lyapunov_exponent: f64,
    /// The headline rate quoted in the published analysis of this
    /// criterion, reported for comparison; see the module docs for why
    /// it can exceed the certified exponent.
    pub paper_exponent: f64,
}

impl ChaosCertificate {
    fn new(
        kind: CertificateKind,
        algorithm: Algorithm,
        delta: f64,
        cbar_lower: f64,
        epsilon: f64,
        dual_dim: usize,
        paper_exponent: f64,
    ) -> Self {
        ChaosCertificate {
            kind,
            algorithm,
            region_delta: delta,
            cbar_lower,
            lyapunov_exponent: cbar_lower * epsilon * epsilon / (2.0 * dual_dim as f64),
            paper_exponent,
        }
    }
}

/// Result of the exhaustive quadruple comparison of two matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// True iff `|dK| >= |dL|` on every 2x2 sub-pattern.
    pub dominates: bool,
    /// `max |dK| - |dL|` over all quadruples; present only when
    /// domination holds (it is then non-negative).
    pub theta_margin: Option<f64>,
    /// Quadruple `(j, j', k, k')` attaining the margin when domination
    /// holds, or the most violated quadruple otherwise.
    pub witness: [usize; 4],
}

/// Compare `|K|` against `|L|` on every quadruple combination.
pub fn check_domination(k: &Array2<f64>, l: &Array2<f64>) -> Result<DominationReport> {
    if k.dim() != l.dim() {
        return Err(Error::Shape {
            context: "domination check",
            expected: format!("{:?}", k.dim()),
            actual: format!("{:?}", l.dim()),
        });
    }
    let (n, m) = k.dim();
    let mut dominates = true;
    // degenerate quadruples (repeated row or column) are identically
    // zero on both sides, so only the others can decide anything;
    // skipping them also keeps round-off in `a + b - b - a` from
    // fabricating violations
    let mut best_margin = 0.0_f64;
    let mut best_witness = [0, 0, 0, 0];
    let mut worst_violation = f64::NEG_INFINITY;
    let mut violation_witness = [0, 0, 0, 0];
    for j in 0..n {
        for j2 in 0..n {
            if j == j2 {
                continue;
            }
            for c in 0..m {
                for c2 in 0..m {
                    if c == c2 {
                        continue;
                    }
                    let dk = quadruple_combination(k, j, j2, c, c2).abs();
                    let dl = quadruple_combination(l, j, j2, c, c2).abs();
                    let gap = dk - dl;
                    if gap > best_margin {
                        best_margin = gap;
                        best_witness = [j, j2, c, c2];
                    }
                    if gap < 0.0 {
                        dominates = false;
                        if -gap > worst_violation {
                            worst_violation = -gap;
                            violation_witness = [j, j2, c, c2];
                        }
                    }
                }
            }
        }
    }
    Ok(DominationReport {
        dominates,
        theta_margin: if dominates { Some(best_margin) } else { None },
        witness: if dominates {
            best_witness
        } else {
            violation_witness
        },
    })
}

fn validate_region(region: &RegionSpec, counts: &[usize]) -> Result<()> {
    let max_n = counts.iter().copied().max().unwrap_or(1);
    if region.delta() > 1.0 / max_n as f64 {
        return Err(Error::EmptyRegion {
            delta: region.delta(),
            counts: counts.to_vec(),
        });
    }
    Ok(())
}

/// Certify volume expansion via matrix domination: when the zero-sum part
/// dominates the coordination part with margin `theta > 0`, the
/// coefficient is at least `theta^2 delta^4` throughout the region (each
/// of the four primal weights of the witness quadruple is at least
/// `delta`).
pub fn certify_mwu_chaos_domination(
    game: &BimatrixGame,
    region: &RegionSpec,
    epsilon: f64,
) -> Result<Option<ChaosCertificate>> {
    assert!(epsilon > 0.0, "step size must be positive");
    let counts = game.strategy_counts();
    validate_region(region, &counts)?;
    let parts = decompose(game);
    let report = check_domination(&parts.z, &parts.c)?;
    let Some(theta) = report.theta_margin else {
        return Ok(None);
    };
    if theta <= 0.0 {
        return Ok(None);
    }
    let delta = region.delta();
    let dual_dim = counts[0] + counts[1];
    let cbar = theta * theta * delta.powi(4);
    let paper_exponent =
        theta * theta * delta * delta * epsilon * epsilon / (2.0 * dual_dim as f64);
    Ok(Some(ChaosCertificate::new(
        CertificateKind::Domination,
        Algorithm::Mwu,
        delta,
        cbar,
        epsilon,
        dual_dim,
        paper_exponent,
    )))
}

/// Certify volume expansion via the Chebyshev radii of the two parts:
/// on the region, `C_(Z,-Z) >= (r(Z) delta)^2` while `C_(C,-C) <= r(C)^2`,
/// so `(r(Z) delta)^2 > r(C)^2` yields the lower bound
/// `(r(Z) delta)^2 - r(C)^2`.
pub fn certify_mwu_chaos_lp(
    game: &BimatrixGame,
    region: &RegionSpec,
    epsilon: f64,
) -> Result<Option<ChaosCertificate>> {
    assert!(epsilon > 0.0, "step size must be positive");
    let counts = game.strategy_counts();
    validate_region(region, &counts)?;
    let parts = decompose(game);
    let r_z = chebyshev_fit(&parts.z).r;
    let r_c = chebyshev_fit(&parts.c).r;
    let delta = region.delta();
    let lower = (r_z * delta).powi(2) - r_c * r_c;
    if lower <= 0.0 {
        return Ok(None);
    }
    let dual_dim = counts[0] + counts[1];
    // theta solves (r_z delta)^2 = r_c^2 + (theta delta)^2
    let theta = lower.sqrt() / delta;
    let paper_exponent = theta * theta * epsilon * epsilon / (2.0 * dual_dim as f64);
    Ok(Some(ChaosCertificate::new(
        CertificateKind::Lp,
        Algorithm::Mwu,
        delta,
        lower,
        epsilon,
        dual_dim,
        paper_exponent,
    )))
}

/// Per-edge certification of a pairwise-structured game. Every non-zero,
/// non-trivial edge must certify through the domination or Chebyshev
/// criterion; the coefficient of the whole game is the sum of the edge
/// coefficients, so the certified bounds add up. Edges whose matrices are
/// trivial contribute an identically zero coefficient and are skipped.
pub fn certify_graphical_family(
    game: &GraphicalGame,
    region: &RegionSpec,
    epsilon: f64,
) -> Result<Option<ChaosCertificate>> {
    assert!(epsilon > 0.0, "step size must be positive");
    let counts = game.strategy_counts().to_vec();
    validate_region(region, &counts)?;
    let players = game.num_players();
    let delta = region.delta();
    let mut cbar_total = 0.0;
    let mut theta_min = f64::INFINITY;
    let mut certified_edges = 0usize;
    for i in 0..players {
        for k in (i + 1)..players {
            if game.pair_is_zero(i, k) {
                continue;
            }
            let edge = game.edge_bimatrix(i, k);
            let scale = edge.payoff_scale().max(1.0);
            if is_trivial(edge.row_matrix(), 1e-12 * scale)
                && is_trivial(edge.col_matrix(), 1e-12 * scale)
            {
                // trivial edge game: its coefficient vanishes identically
                continue;
            }
            let edge_region = RegionSpec::new(delta)?;
            let cert = match certify_mwu_chaos_domination(&edge, &edge_region, epsilon)? {
                Some(c) => Some(c),
                None => certify_mwu_chaos_lp(&edge, &edge_region, epsilon)?,
            };
            let Some(cert) = cert else {
                return Ok(None);
            };
            // recover the edge theta from the certified bound
            let theta = match cert.kind {
                CertificateKind::Domination => (cert.cbar_lower / delta.powi(4)).sqrt(),
                _ => cert.cbar_lower.sqrt() / delta,
            };
            theta_min = theta_min.min(theta);
            cbar_total += cert.cbar_lower;
            certified_edges += 1;
        }
    }
    if certified_edges == 0 {
        return Ok(None);
    }
    let dual_dim: usize = counts.iter().sum();
    let n_players = players as f64;
    let paper_exponent = n_players * (n_players - 1.0) * theta_min * theta_min * delta * delta
        * epsilon
        * epsilon
        / (4.0 * dual_dim as f64);
    Ok(Some(ChaosCertificate::new(
        CertificateKind::GraphicalFamily,
        Algorithm::Mwu,
        delta,
        cbar_total,
        epsilon,
        dual_dim,
        paper_exponent,
    )))
}

/// Outcome of the potential-game negativity analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialNegativityReport {
    /// Proven certificate, when some player pair's projected matrices
    /// admit a uniformly signed non-trivial direction.
    pub certificate: Option<ChaosCertificate>,
    /// Empirical minimum of `-C` over the sampled region. This is an
    /// estimate, never a certificate.
    pub sampled_min: f64,
}

/// Orthonormal basis of the zero-sum hyperplane of `R^n` (Helmert-style).
fn zero_sum_basis(n: usize) -> Vec<Array1<f64>> {
    (1..n)
        .map(|a| {
            let mut v = Array1::zeros(n);
            for i in 0..a {
                v[i] = 1.0;
            }
            v[a] = -(a as f64);
            let norm = (a as f64 * (a as f64 + 1.0)).sqrt();
            v / norm
        })
        .collect()
}

fn frobenius_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Extract the projected matrices of the potential tensor for the player
/// pair `(i1, i2)`: one `n_{i1} x n_{i2}` slice per strategy profile of
/// the remaining players.
fn projected_matrices(
    potential: &ArrayD<f64>,
    counts: &[usize],
    i1: usize,
    i2: usize,
) -> Vec<Array2<f64>> {
    let others: Vec<usize> = (0..counts.len()).filter(|&r| r != i1 && r != i2).collect();
    let other_counts: Vec<usize> = others.iter().map(|&r| counts[r]).collect();
    let mut out = Vec::new();
    for assignment in ProfileIter::new(&other_counts) {
        let mut profile = vec![0usize; counts.len()];
        for (slot, &player) in others.iter().enumerate() {
            profile[player] = assignment[slot];
        }
        let mut m = Array2::zeros((counts[i1], counts[i2]));
        for j in 0..counts[i1] {
            for l in 0..counts[i2] {
                profile[i1] = j;
                profile[i2] = l;
                m[[j, l]] = potential[profile.as_slice()];
            }
        }
        out.push(m);
    }
    out
}

/// Best uniformly-signed magnitude theta for one player pair: a unit
/// direction in the orthogonal complement of the trivial space on which
/// every projected matrix's coefficient has the same sign, with the
/// largest attained magnitude. Candidate directions are the normalized
/// residuals themselves, their mean, and an axis-aligned product basis.
fn pair_theta(projected: &[Array2<f64>], tol: f64) -> f64 {
    let shape = projected[0].dim();
    let residuals: Vec<(Array2<f64>, f64)> = projected
        .iter()
        .map(|m| {
            let (_, residual, distance) = l2_trivial_projection(m);
            (residual, distance)
        })
        .collect();

    // all projected matrices agree up to trivial shifts: structurally a
    // single edge matrix, whose full residual norm certifies
    let all_equal = projected
        .iter()
        .all(|m| is_trivial(&(m - &projected[0]), tol));
    if all_equal {
        let d = residuals[0].1;
        return if d > tol { d } else { 0.0 };
    }

    let mut candidates: Vec<Array2<f64>> = Vec::new();
    for (residual, distance) in &residuals {
        if *distance > tol {
            candidates.push(residual / *distance);
        }
    }
    let mut mean = Array2::<f64>::zeros(shape);
    for (residual, _) in &residuals {
        mean += residual;
    }
    let mean_norm = frobenius_inner(&mean, &mean).sqrt();
    if mean_norm > tol {
        candidates.push(mean / mean_norm);
    }
    for f in zero_sum_basis(shape.0) {
        for g in zero_sum_basis(shape.1) {
            let mut b = Array2::zeros(shape);
            for j in 0..shape.0 {
                for l in 0..shape.1 {
                    b[[j, l]] = f[j] * g[l];
                }
            }
            candidates.push(b);
        }
    }

    let mut theta: f64 = 0.0;
    for direction in &candidates {
        let coeffs: Vec<f64> = residuals
            .iter()
            .map(|(residual, _)| frobenius_inner(residual, direction))
            .collect();
        let all_nonneg = coeffs.iter().all(|&c| c >= -tol);
        let all_nonpos = coeffs.iter().all(|&c| c <= tol);
        if !(all_nonneg || all_nonpos) {
            continue;
        }
        let magnitude = coeffs.iter().fold(0.0_f64, |a, &c| a.max(c.abs()));
        if magnitude > tol {
            theta = theta.max(magnitude);
        }
    }
    theta
}

/// Certify that the optimistic rule expands volume throughout the region
/// of a potential game: build the common-payoff game of the potential and
/// look for a player pair whose projected matrices are uniformly signed
/// along some non-trivial direction with magnitude `theta`, which forces
/// `C <= -theta^2 delta^(2N-2)` on the region. When no pair certifies,
/// only the sampled minimum of `-C` is reported.
pub fn certify_potential_negativity(
    game: &NormalFormGame,
    potential: &ArrayD<f64>,
    region: &RegionSpec,
    epsilon: f64,
    potential_tol: f64,
    plan: &SamplePlan,
) -> Result<PotentialNegativityReport> {
    assert!(epsilon > 0.0, "step size must be positive");
    let counts = game.strategy_counts().to_vec();
    validate_region(region, &counts)?;
    let deviation = potential_deviation(game, potential)?;
    if deviation > potential_tol {
        return Err(Error::NotPotential { deviation });
    }
    let common = potential_coordination_lift(game, potential)?;
    let players = counts.len();
    let scale = potential.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let tol = 1e-12 * scale;

    let mut theta: f64 = 0.0;
    for i1 in 0..players {
        for i2 in (i1 + 1)..players {
            if counts[i1] < 2 || counts[i2] < 2 {
                continue;
            }
            let projected = projected_matrices(potential, &counts, i1, i2);
            theta = theta.max(pair_theta(&projected, tol));
        }
    }

    let delta = region.delta();
    let dual_dim: usize = counts.iter().sum();
    let certificate = if theta > 0.0 {
        let cbar = theta * theta * delta.powi(2 * players as i32 - 2);
        let exponent = cbar * epsilon * epsilon / (2.0 * dual_dim as f64);
        Some(ChaosCertificate::new(
            CertificateKind::PotentialNegativity,
            Algorithm::Omwu,
            delta,
            cbar,
            epsilon,
            dual_dim,
            exponent,
        ))
    } else {
        None
    };

    let sampled_min = cbar_sample(
        &AnyGame::NormalForm(common),
        region,
        plan,
        Algorithm::Omwu,
    )?;
    Ok(PotentialNegativityReport {
        certificate,
        sampled_min,
    })
}

/// Empirical minimum of `C` (or `-C` for the optimistic rule) over
/// sampled dual points of the region. An estimate, never a certificate.
pub fn cbar_sample(
    game: &AnyGame,
    region: &RegionSpec,
    plan: &SamplePlan,
    algorithm: Algorithm,
) -> Result<f64> {
    let counts = game.strategy_counts();
    validate_region(region, &counts)?;
    let points = sample_region_dual_points(&counts, region, plan)?;
    let values: Vec<f64> = points
        .par_iter()
        .map(|p| game.c_value(p))
        .collect::<Result<Vec<f64>>>()?;
    let signed = |v: f64| match algorithm {
        Algorithm::Mwu => v,
        Algorithm::Omwu => -v,
    };
    Ok(values
        .into_iter()
        .map(signed)
        .fold(f64::INFINITY, f64::min))
}

/// When the zero-sum part fails to dominate the coordination part, the
/// violated quadruple yields nearby dual points with strictly negative
/// coefficient: load mass `(1-eta)/2` on the witness rows and columns and
/// shrink `eta` geometrically until the sign shows. Returns the point and
/// value found, or `None` when domination holds or the search exhausts
/// its schedule.
pub fn find_negative_c_point(game: &BimatrixGame) -> Result<Option<(DualPoint, f64)>> {
    let parts = decompose(game);
    let report = check_domination(&parts.z, &parts.c)?;
    if report.dominates {
        return Ok(None);
    }
    let [j, j2, k, k2] = report.witness;
    let [n, m] = game.strategy_counts();
    let mut eta = 0.1;
    while eta >= 1e-6 {
        let x = witness_mass(n, j, j2, eta);
        let y = witness_mass(m, k, k2, eta);
        let p = DualPoint::new(vec![x.mapv(f64::ln), y.mapv(f64::ln)])
            .expect("interior masses have finite logs");
        let value = c_bimatrix(game, &p);
        if value < 0.0 {
            return Ok(Some((p, value)));
        }
        eta /= 2.0;
    }
    Ok(None)
}

fn witness_mass(n: usize, a: usize, b: usize, eta: f64) -> Array1<f64> {
    let mut x = Array1::zeros(n);
    if n == 2 {
        x[a] = 0.5;
        x[b] = 0.5;
    } else {
        let rest = eta / (n - 2) as f64;
        x.fill(rest);
        x[a] = (1.0 - eta) / 2.0;
        x[b] = (1.0 - eta) / 2.0;
    }
    x
}

/// Verify a certificate against sampling: the sampled minimum of the
/// certified objective must not fall below `cbar_lower` (up to slack).
pub fn certificate_is_sound(
    game: &AnyGame,
    certificate: &ChaosCertificate,
    plan: &SamplePlan,
    slack: f64,
) -> Result<bool> {
    let region = RegionSpec::new(certificate.region_delta)?;
    let sampled = cbar_sample(game, &region, plan, certificate.algorithm)?;
    Ok(sampled >= certificate.cbar_lower - slack)
}
