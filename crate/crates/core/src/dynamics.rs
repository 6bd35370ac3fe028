//! Discrete-time learning dynamics in the dual (cumulative payoff) space.
//!
//! All rules update every player simultaneously. The optimistic rule is a
//! genuine two-step recursion; its one-step surrogate adds the
//! second-order payoff-velocity term instead of looking back, and is the
//! map whose Jacobian carries the optimistic volume behavior.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cfunction::{c_bimatrix, pair_payoff_matrix};
use crate::error::{Error, Result};
use crate::game::{
    dual_to_primal, in_region, AnyGame, BimatrixGame, DualPoint, MixedProfile, RegionSpec,
};
use crate::sampling::unit_sphere_direction;

/// Dual coordinates beyond this magnitude abort a trajectory; in zero-sum
/// play the coordinates grow without bound, and saturating silently would
/// corrupt every statistic downstream.
pub const STATE_GUARD: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Mwu,
    Omwu,
    OmwuSurrogate,
    Ftrl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    Entropic,
    SquaredEuclidean,
}

/// A learning rule with its step size; the regularizer is present exactly
/// for follow-the-regularized-leader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRule {
    kind: RuleKind,
    epsilon: f64,
    regularizer: Option<Regularizer>,
}

impl UpdateRule {
    fn validate_epsilon(epsilon: f64) -> Result<()> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("step size must be positive and finite, got {epsilon}"),
            });
        }
        Ok(())
    }

    pub fn mwu(epsilon: f64) -> Result<Self> {
        Self::validate_epsilon(epsilon)?;
        Ok(UpdateRule {
            kind: RuleKind::Mwu,
            epsilon,
            regularizer: None,
        })
    }

    pub fn omwu(epsilon: f64) -> Result<Self> {
        Self::validate_epsilon(epsilon)?;
        Ok(UpdateRule {
            kind: RuleKind::Omwu,
            epsilon,
            regularizer: None,
        })
    }

    pub fn omwu_surrogate(epsilon: f64) -> Result<Self> {
        Self::validate_epsilon(epsilon)?;
        Ok(UpdateRule {
            kind: RuleKind::OmwuSurrogate,
            epsilon,
            regularizer: None,
        })
    }

    pub fn ftrl(epsilon: f64, regularizer: Regularizer) -> Result<Self> {
        Self::validate_epsilon(epsilon)?;
        Ok(UpdateRule {
            kind: RuleKind::Ftrl,
            epsilon,
            regularizer: Some(regularizer),
        })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn regularizer(&self) -> Option<Regularizer> {
        self.regularizer
    }
}

fn advance(p: &DualPoint, field: &[Array1<f64>], epsilon: f64) -> DualPoint {
    DualPoint::new(
        p.parts()
            .iter()
            .zip(field)
            .map(|(part, u)| part + &(u * epsilon))
            .collect(),
    )
    .expect("finite step from finite state")
}

/// One multiplicative-weights step: `p' = p + eps * U(x(p))`.
pub fn mwu_step(game: &AnyGame, p: &DualPoint, rule: &UpdateRule) -> DualPoint {
    assert_eq!(rule.kind(), RuleKind::Mwu, "rule must be the plain update");
    let x = dual_to_primal(p);
    advance(p, &game.payoff_field(&x), rule.epsilon())
}

/// One optimistic step: `p' = p + eps * (2 U(x(p)) - U(x(p_prev)))`.
/// With `p_prev == p` this is bit-for-bit the plain step.
pub fn omwu_step(
    game: &AnyGame,
    p_curr: &DualPoint,
    p_prev: &DualPoint,
    rule: &UpdateRule,
) -> DualPoint {
    assert_eq!(rule.kind(), RuleKind::Omwu, "rule must be the optimistic update");
    let u_curr = game.payoff_field(&dual_to_primal(p_curr));
    let u_prev = game.payoff_field(&dual_to_primal(p_prev));
    let extrapolated: Vec<Array1<f64>> = u_curr
        .iter()
        .zip(&u_prev)
        .map(|(c, q)| c.mapv(|v| 2.0 * v) - q)
        .collect();
    advance(p_curr, &extrapolated, rule.epsilon())
}

/// The second-order payoff-velocity correction of the optimistic
/// surrogate: for player `i`, strategy `j`,
/// `sum_{k != i, l} x_kl (U^{ik}_{jl} - U^i_j) U^k_l`.
pub(crate) fn surrogate_correction(
    game: &AnyGame,
    x: &MixedProfile,
    field: &[Array1<f64>],
) -> Vec<Array1<f64>> {
    let counts = game.strategy_counts();
    let players = counts.len();
    let mut corr: Vec<Array1<f64>> = counts.iter().map(|&n| Array1::zeros(n)).collect();
    match game {
        AnyGame::Bimatrix(g) => {
            let a = g.row_matrix();
            let b = g.col_matrix();
            for j in 0..counts[0] {
                let mut acc = 0.0;
                for l in 0..counts[1] {
                    acc += x.prob(1, l) * (a[[j, l]] - field[0][j]) * field[1][l];
                }
                corr[0][j] = acc;
            }
            for l in 0..counts[1] {
                let mut acc = 0.0;
                for j in 0..counts[0] {
                    acc += x.prob(0, j) * (b[[j, l]] - field[1][l]) * field[0][j];
                }
                corr[1][l] = acc;
            }
        }
        AnyGame::Graphical(g) => {
            for i in 0..players {
                for k in 0..players {
                    if k == i {
                        continue;
                    }
                    let Some(h) = g.edge(i, k) else { continue };
                    let a_ik = h.dot(x.part(k));
                    for j in 0..counts[i] {
                        let mut acc = 0.0;
                        for l in 0..counts[k] {
                            acc += x.prob(k, l) * (h[[j, l]] - a_ik[j]) * field[k][l];
                        }
                        corr[i][j] += acc;
                    }
                }
            }
        }
        AnyGame::NormalForm(g) => {
            for i in 0..players {
                for k in 0..players {
                    if k == i {
                        continue;
                    }
                    let w_ik = pair_payoff_matrix(g, x, i, k);
                    for j in 0..counts[i] {
                        let mut acc = 0.0;
                        for l in 0..counts[k] {
                            acc += x.prob(k, l) * (w_ik[[j, l]] - field[i][j]) * field[k][l];
                        }
                        corr[i][j] += acc;
                    }
                }
            }
        }
    }
    corr
}

/// One step of the optimistic surrogate map:
/// `p' = p + eps * U + eps^2 * correction` with the payoff-velocity
/// correction above. This is a genuine one-step map and tracks the
/// two-step optimistic trajectory to third order in the step size.
pub fn omwu_surrogate_step(game: &AnyGame, p: &DualPoint, rule: &UpdateRule) -> DualPoint {
    assert_eq!(
        rule.kind(),
        RuleKind::OmwuSurrogate,
        "rule must be the optimistic surrogate"
    );
    let eps = rule.epsilon();
    let x = dual_to_primal(p);
    let field = game.payoff_field(&x);
    let corr = surrogate_correction(game, &x, &field);
    let combined: Vec<Array1<f64>> = field
        .iter()
        .zip(&corr)
        .map(|(u, c)| u + &(c * eps))
        .collect();
    advance(p, &combined, eps)
}

/// Exact Euclidean projection onto the probability simplex by the
/// sort-and-threshold rule; sort ties are broken by index.
pub fn euclidean_simplex_projection(v: &Array1<f64>) -> Array1<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        v[b].partial_cmp(&v[a])
            .expect("finite coordinates")
            .then(a.cmp(&b))
    });
    let mut prefix = 0.0;
    let mut shift = 0.0;
    let mut any = false;
    for (rank, &idx) in order.iter().enumerate() {
        prefix += v[idx];
        let candidate = (1.0 - prefix) / (rank + 1) as f64;
        if v[idx] + candidate > 0.0 {
            shift = candidate;
            any = true;
        }
    }
    debug_assert!(any, "projection support must be non-empty");
    let _ = any;
    v.mapv(|value| (value + shift).max(0.0))
}

/// One follow-the-regularized-leader step. The entropic regularizer
/// reproduces the multiplicative-weights step through the identical
/// arithmetic path; the squared-Euclidean regularizer plays the
/// Euclidean projection of `p` onto the simplex.
pub fn ftrl_step(game: &AnyGame, p: &DualPoint, rule: &UpdateRule) -> DualPoint {
    assert_eq!(rule.kind(), RuleKind::Ftrl, "rule must be FTRL");
    let x = match rule.regularizer().expect("FTRL carries a regularizer") {
        Regularizer::Entropic => dual_to_primal(p),
        Regularizer::SquaredEuclidean => MixedProfile::from_parts_unchecked(
            p.parts().iter().map(euclidean_simplex_projection).collect(),
        ),
    };
    advance(p, &game.payoff_field(&x), rule.epsilon())
}

/// A recorded dual-space trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// `steps + 1` points, starting at the initial condition.
    pub points: Vec<DualPoint>,
    /// First index whose point leaves the region, when a region was
    /// supplied. Recording continues past the exit.
    pub exit_time: Option<usize>,
}

fn guard_state(p: &DualPoint, last_finite_step: usize) -> Result<()> {
    let ok = p
        .parts()
        .iter()
        .all(|part| part.iter().all(|v| v.is_finite() && v.abs() <= STATE_GUARD));
    if ok {
        Ok(())
    } else {
        Err(Error::NonFiniteState { last_finite_step })
    }
}

/// Iterate a rule for `steps` updates, recording every point. The
/// optimistic rule is seeded with a repeated initial point. Aborts with
/// an error if the state overflows the guard.
pub fn run_trajectory(
    game: &AnyGame,
    p0: &DualPoint,
    rule: &UpdateRule,
    steps: usize,
    region: Option<&RegionSpec>,
) -> Result<TrajectoryRecord> {
    assert_eq!(
        game.strategy_counts(),
        p0.strategy_counts(),
        "start point shape does not match the game"
    );
    let mut points = Vec::with_capacity(steps + 1);
    points.push(p0.clone());
    if rule.kind() == RuleKind::Omwu && steps >= 1 {
        points.push(p0.clone());
    }
    while points.len() <= steps {
        let next = match rule.kind() {
            RuleKind::Mwu => mwu_step(game, points.last().unwrap(), rule),
            RuleKind::OmwuSurrogate => omwu_surrogate_step(game, points.last().unwrap(), rule),
            RuleKind::Ftrl => ftrl_step(game, points.last().unwrap(), rule),
            RuleKind::Omwu => {
                let t = points.len() - 1;
                omwu_step(game, &points[t], &points[t - 1], rule)
            }
        };
        guard_state(&next, points.len() - 1)?;
        points.push(next);
    }
    let exit_time = region.and_then(|r| points.iter().position(|p| !in_region(p, r)));
    Ok(TrajectoryRecord { points, exit_time })
}

/// Outcome of a single perturbed start.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub exit_time: Option<usize>,
    /// Largest Euclidean distance of the played mixed profile from the
    /// reference equilibrium along the probe trajectory.
    pub max_primal_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeProbeReport {
    /// True when the volume coefficient at the equilibrium's dual
    /// preimage is positive, which is the regime the probe speaks about.
    /// Probes are recorded either way.
    pub applicable: bool,
    pub c_at_center: f64,
    pub probes: Vec<ProbeOutcome>,
}

/// Probe whether trajectories started near an interior equilibrium leave
/// the region. The equilibrium's dual preimage is the componentwise
/// logarithm; probes start at the given dual distance in seeded uniform
/// directions.
#[allow(clippy::too_many_arguments)]
pub fn equilibrium_escape_probe(
    game: &BimatrixGame,
    x_star: &MixedProfile,
    region: &RegionSpec,
    rule: &UpdateRule,
    steps: usize,
    num_probes: usize,
    probe_radius: f64,
    seed: u64,
) -> Result<EscapeProbeReport> {
    if rule.kind() != RuleKind::Mwu {
        return Err(Error::InvalidParameter {
            name: "rule",
            reason: "the escape probe is defined for the plain multiplicative update".into(),
        });
    }
    if !probe_radius.is_finite() || probe_radius <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "probe_radius",
            reason: "must be positive".into(),
        });
    }
    let counts = game.strategy_counts();
    if x_star.strategy_counts() != counts {
        return Err(Error::Shape {
            context: "equilibrium profile",
            expected: format!("{:?}", counts),
            actual: format!("{:?}", x_star.strategy_counts()),
        });
    }
    for (player, part) in x_star.parts().iter().enumerate() {
        for (index, &value) in part.iter().enumerate() {
            if value <= 0.0 {
                return Err(Error::NotInterior {
                    player,
                    index,
                    value,
                });
            }
        }
    }

    // componentwise log is a valid softmax preimage of the equilibrium
    let center = DualPoint::new(
        x_star
            .parts()
            .iter()
            .map(|part| part.mapv(f64::ln))
            .collect(),
    )?;
    let c_at_center = c_bimatrix(game, &center);
    let applicable = c_at_center > 0.0;

    let any_game = AnyGame::Bimatrix(game.clone());
    let dim = center.dim();
    let center_flat = center.to_flat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(num_probes);
    for _ in 0..num_probes {
        let direction = unit_sphere_direction(&mut rng, dim);
        let start_flat: Vec<f64> = center_flat
            .iter()
            .zip(&direction)
            .map(|(c, d)| c + probe_radius * d)
            .collect();
        let start = DualPoint::from_flat(&counts, &start_flat);
        let record = run_trajectory(&any_game, &start, rule, steps, Some(region))?;
        let max_primal_distance = record
            .points
            .iter()
            .map(|p| dual_to_primal(p).distance(x_star))
            .fold(0.0_f64, f64::max);
        probes.push(ProbeOutcome {
            exit_time: record.exit_time,
            max_primal_distance,
        });
    }
    Ok(EscapeProbeReport {
        applicable,
        c_at_center,
        probes,
    })
}
