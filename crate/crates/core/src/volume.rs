//! Numerical verification of the volume-change theory: Jacobians of the
//! one-step maps, the volume integrand `det(I + eps J)`, extraction of its
//! second-order coefficient, accumulated log-volume along trajectories,
//! and trajectory-divergence statistics for perturbation ensembles.
//!
//! Structured games (two-player and pairwise) get exact closed-form
//! Jacobians; central finite differences are the generic fallback and the
//! cross-check for the closed forms.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cfunction::pair_payoff_matrix;
use crate::dynamics::{
    ftrl_step, mwu_step, omwu_surrogate_step, run_trajectory, surrogate_correction, Regularizer,
    RuleKind, UpdateRule,
};
use crate::error::{Error, Result};
use crate::game::{dual_to_primal, in_region, AnyGame, DualPoint, GraphicalGame, RegionSpec};
use crate::linalg::{det_lu, ols_line_fit, polyfit};
use crate::sampling::unit_sphere_direction;

/// Default central-difference step for numerical Jacobians.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

fn block_offsets(counts: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(counts.len());
    let mut acc = 0;
    for &n in counts {
        offsets.push(acc);
        acc += n;
    }
    offsets
}

/// A one-step update map `p -> p + eps * F(p)` whose displacement field
/// `F` can be evaluated directly (without forming the difference of
/// states, which would waste precision).
pub trait OneStepMap {
    fn epsilon(&self) -> f64;
    fn strategy_counts(&self) -> Vec<usize>;
    /// The drift `F(p)`, flattened over players.
    fn displacement(&self, p: &DualPoint) -> Vec<f64>;
    /// The full update `p + eps * F(p)`.
    fn apply(&self, p: &DualPoint) -> DualPoint;
    /// Closed-form Jacobian of `F` when one is available.
    fn analytic_jacobian(&self, _p: &DualPoint) -> Option<Array2<f64>> {
        None
    }
}

fn flatten(parts: &[Array1<f64>]) -> Vec<f64> {
    let mut flat = Vec::new();
    for part in parts {
        flat.extend(part.iter().copied());
    }
    flat
}

/// Exact Jacobian of the multiplicative-weights drift: block `(i, k)` has
/// entries `x_kl (W^{ik}[j, l] - U^i_j)` for `k != i` and zeros on the
/// diagonal blocks, where `W^{ik}` is the pair-expectation matrix.
fn mwu_analytic_jacobian(game: &AnyGame, p: &DualPoint) -> Array2<f64> {
    let counts = game.strategy_counts();
    let offsets = block_offsets(&counts);
    let d: usize = counts.iter().sum();
    let x = dual_to_primal(p);
    let field = game.payoff_field(&x);
    let mut jac = Array2::zeros((d, d));
    match game {
        AnyGame::Bimatrix(g) => {
            let a = g.row_matrix();
            let b = g.col_matrix();
            for j in 0..counts[0] {
                for l in 0..counts[1] {
                    jac[[j, offsets[1] + l]] = x.prob(1, l) * (a[[j, l]] - field[0][j]);
                    jac[[offsets[1] + l, j]] = x.prob(0, j) * (b[[j, l]] - field[1][l]);
                }
            }
        }
        AnyGame::Graphical(g) => {
            for i in 0..counts.len() {
                for k in 0..counts.len() {
                    if i == k {
                        continue;
                    }
                    let Some(h) = g.edge(i, k) else { continue };
                    let a_ik = h.dot(x.part(k));
                    for j in 0..counts[i] {
                        for l in 0..counts[k] {
                            jac[[offsets[i] + j, offsets[k] + l]] =
                                x.prob(k, l) * (h[[j, l]] - a_ik[j]);
                        }
                    }
                }
            }
        }
        AnyGame::NormalForm(g) => {
            for i in 0..counts.len() {
                for k in 0..counts.len() {
                    if i == k {
                        continue;
                    }
                    let w = pair_payoff_matrix(g, &x, i, k);
                    for j in 0..counts[i] {
                        for l in 0..counts[k] {
                            jac[[offsets[i] + j, offsets[k] + l]] =
                                x.prob(k, l) * (w[[j, l]] - field[i][j]);
                        }
                    }
                }
            }
        }
    }
    jac
}

/// Exact Jacobian of the optimistic-surrogate drift of a pairwise game.
fn surrogate_analytic_jacobian(g: &GraphicalGame, p: &DualPoint, eps: f64) -> Array2<f64> {
    let counts = g.strategy_counts().to_vec();
    let players = counts.len();
    let offsets = block_offsets(&counts);
    let d: usize = counts.iter().sum();
    let x = dual_to_primal(p);

    // edge expectations a^{ik} = H^{ik} x_k and centered edges D^{ik}
    let mut centered: Vec<Vec<Option<Array2<f64>>>> = vec![vec![None; players]; players];
    let mut field: Vec<Array1<f64>> = counts.iter().map(|&n| Array1::zeros(n)).collect();
    for i in 0..players {
        for k in 0..players {
            if i == k {
                continue;
            }
            if let Some(h) = g.edge(i, k) {
                let a_ik = h.dot(x.part(k));
                let mut dm = h.clone();
                for j in 0..counts[i] {
                    for l in 0..counts[k] {
                        dm[[j, l]] -= a_ik[j];
                    }
                }
                field[i] = &field[i] + &a_ik;
                centered[i][k] = Some(dm);
            }
        }
    }
    // mean payoff of each player under x
    let field_mean: Vec<f64> = (0..players)
        .map(|i| x.part(i).dot(&field[i]))
        .collect();

    let zero_block = |rows: usize, cols: usize| Array2::<f64>::zeros((rows, cols));
    let mut jac = Array2::zeros((d, d));
    for i in 0..players {
        // own-block entries are second order: eps * x_{i,j2} *
        // sum_{k != i, l} x_kl D^{ik}[j,l] D^{ki}[l,j2]
        for j in 0..counts[i] {
            for j2 in 0..counts[i] {
                let mut acc = 0.0;
                for k in 0..players {
                    if k == i {
                        continue;
                    }
                    let (Some(d_ik), Some(d_ki)) = (&centered[i][k], &centered[k][i]) else {
                        continue;
                    };
                    for l in 0..counts[k] {
                        acc += x.prob(k, l) * d_ik[[j, l]] * d_ki[[l, j2]];
                    }
                }
                jac[[offsets[i] + j, offsets[i] + j2]] = eps * x.prob(i, j2) * acc;
            }
        }
        for b in 0..players {
            if b == i {
                continue;
            }
            let d_ib = centered[i][b]
                .clone()
                .unwrap_or_else(|| zero_block(counts[i], counts[b]));
            // s_ib[j] = sum_l x_bl D^{ib}[j,l] u_b[l]
            let mut s_ib = vec![0.0; counts[i]];
            for j in 0..counts[i] {
                for l in 0..counts[b] {
                    s_ib[j] += x.prob(b, l) * d_ib[[j, l]] * field[b][l];
                }
            }
            for j in 0..counts[i] {
                for l2 in 0..counts[b] {
                    let mut cross = 0.0;
                    for k in 0..players {
                        if k == i || k == b {
                            continue;
                        }
                        let (Some(d_ik), Some(d_kb)) = (&centered[i][k], &centered[k][b]) else {
                            continue;
                        };
                        for l in 0..counts[k] {
                            cross += x.prob(k, l) * d_ik[[j, l]] * d_kb[[l, l2]];
                        }
                    }
                    let first_order = d_ib[[j, l2]];
                    let second_order = first_order * (field[b][l2] - field_mean[b]) - s_ib[j]
                        + cross;
                    jac[[offsets[i] + j, offsets[b] + l2]] =
                        x.prob(b, l2) * (first_order + eps * second_order);
                }
            }
        }
    }
    jac
}

fn bimatrix_as_graphical(g: &crate::game::BimatrixGame) -> GraphicalGame {
    let counts = g.strategy_counts();
    GraphicalGame::new(
        vec![counts[0], counts[1]],
        vec![
            ((0, 1), g.row_matrix().clone()),
            ((1, 0), g.col_matrix().t().to_owned()),
        ],
    )
    .expect("bimatrix shapes are consistent")
}

/// The multiplicative-weights drift as a one-step map.
pub struct MwuMap<'a> {
    game: &'a AnyGame,
    epsilon: f64,
}

impl<'a> MwuMap<'a> {
    pub fn new(game: &'a AnyGame, epsilon: f64) -> Self {
        MwuMap { game, epsilon }
    }
}

impl OneStepMap for MwuMap<'_> {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn strategy_counts(&self) -> Vec<usize> {
        self.game.strategy_counts()
    }

    fn displacement(&self, p: &DualPoint) -> Vec<f64> {
        flatten(&self.game.payoff_field(&dual_to_primal(p)))
    }

    fn apply(&self, p: &DualPoint) -> DualPoint {
        let rule = UpdateRule::mwu(self.epsilon).expect("validated step size");
        mwu_step(self.game, p, &rule)
    }

    fn analytic_jacobian(&self, p: &DualPoint) -> Option<Array2<f64>> {
        Some(mwu_analytic_jacobian(self.game, p))
    }
}

/// The optimistic-surrogate drift as a one-step map.
pub struct OmwuSurrogateMap<'a> {
    game: &'a AnyGame,
    epsilon: f64,
    graphical: Option<GraphicalGame>,
}

impl<'a> OmwuSurrogateMap<'a> {
    pub fn new(game: &'a AnyGame, epsilon: f64) -> Self {
        let graphical = match game {
            AnyGame::Bimatrix(g) => Some(bimatrix_as_graphical(g)),
            AnyGame::Graphical(g) => Some(g.clone()),
            AnyGame::NormalForm(_) => None,
        };
        OmwuSurrogateMap {
            game,
            epsilon,
            graphical,
        }
    }
}

impl OneStepMap for OmwuSurrogateMap<'_> {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn strategy_counts(&self) -> Vec<usize> {
        self.game.strategy_counts()
    }

    fn displacement(&self, p: &DualPoint) -> Vec<f64> {
        let x = dual_to_primal(p);
        let field = self.game.payoff_field(&x);
        let corr = surrogate_correction(self.game, &x, &field);
        let combined: Vec<Array1<f64>> = field
            .iter()
            .zip(&corr)
            .map(|(u, c)| u + &(c * self.epsilon))
            .collect();
        flatten(&combined)
    }

    fn apply(&self, p: &DualPoint) -> DualPoint {
        let rule = UpdateRule::omwu_surrogate(self.epsilon).expect("validated step size");
        omwu_surrogate_step(self.game, p, &rule)
    }

    fn analytic_jacobian(&self, p: &DualPoint) -> Option<Array2<f64>> {
        self.graphical
            .as_ref()
            .map(|g| surrogate_analytic_jacobian(g, p, self.epsilon))
    }
}

/// Follow-the-regularized-leader as a one-step map. The entropic case is
/// the multiplicative-weights drift; the squared-Euclidean case falls
/// back to finite differences (its projection is piecewise smooth).
pub struct FtrlMap<'a> {
    game: &'a AnyGame,
    epsilon: f64,
    regularizer: Regularizer,
}

impl<'a> FtrlMap<'a> {
    pub fn new(game: &'a AnyGame, epsilon: f64, regularizer: Regularizer) -> Self {
        FtrlMap {
            game,
            epsilon,
            regularizer,
        }
    }
}

impl OneStepMap for FtrlMap<'_> {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn strategy_counts(&self) -> Vec<usize> {
        self.game.strategy_counts()
    }

    fn displacement(&self, p: &DualPoint) -> Vec<f64> {
        let x = match self.regularizer {
            Regularizer::Entropic => dual_to_primal(p),
            Regularizer::SquaredEuclidean => crate::game::MixedProfile::from_parts_unchecked(
                p.parts()
                    .iter()
                    .map(crate::dynamics::euclidean_simplex_projection)
                    .collect(),
            ),
        };
        flatten(&self.game.payoff_field(&x))
    }

    fn apply(&self, p: &DualPoint) -> DualPoint {
        let rule =
            UpdateRule::ftrl(self.epsilon, self.regularizer).expect("validated step size");
        ftrl_step(self.game, p, &rule)
    }

    fn analytic_jacobian(&self, p: &DualPoint) -> Option<Array2<f64>> {
        match self.regularizer {
            Regularizer::Entropic => Some(mwu_analytic_jacobian(self.game, p)),
            Regularizer::SquaredEuclidean => None,
        }
    }
}

/// Build the one-step map of a rule. The two-step optimistic rule has no
/// one-step map; its volume behavior is carried by the surrogate.
pub fn one_step_map<'a>(game: &'a AnyGame, rule: &UpdateRule) -> Result<Box<dyn OneStepMap + 'a>> {
    match rule.kind() {
        RuleKind::Mwu => Ok(Box::new(MwuMap::new(game, rule.epsilon()))),
        RuleKind::OmwuSurrogate => Ok(Box::new(OmwuSurrogateMap::new(game, rule.epsilon()))),
        RuleKind::Ftrl => Ok(Box::new(FtrlMap::new(
            game,
            rule.epsilon(),
            rule.regularizer().expect("FTRL carries a regularizer"),
        ))),
        RuleKind::Omwu => Err(Error::InvalidParameter {
            name: "rule",
            reason: "the two-step optimistic rule has no one-step map; use the surrogate".into(),
        }),
    }
}

/// Central-difference Jacobian of the map's displacement field.
pub fn numerical_jacobian(map: &dyn OneStepMap, p: &DualPoint, fd_step: f64) -> Array2<f64> {
    assert!(fd_step > 0.0, "finite-difference step must be positive");
    let counts = map.strategy_counts();
    let d: usize = counts.iter().sum();
    let flat = p.to_flat();
    let mut jac = Array2::zeros((d, d));
    for b in 0..d {
        let mut plus = flat.clone();
        plus[b] += fd_step;
        let mut minus = flat.clone();
        minus[b] -= fd_step;
        let f_plus = map.displacement(&DualPoint::from_flat(&counts, &plus));
        let f_minus = map.displacement(&DualPoint::from_flat(&counts, &minus));
        for a in 0..d {
            jac[[a, b]] = (f_plus[a] - f_minus[a]) / (2.0 * fd_step);
        }
    }
    jac
}

/// The local volume scale factor `det(I + eps J(p))`, computed by LU
/// factorization with partial pivoting. Uses the closed-form Jacobian
/// when the map provides one, finite differences otherwise.
pub fn volume_integrand(map: &dyn OneStepMap, p: &DualPoint) -> f64 {
    let jac = map
        .analytic_jacobian(p)
        .unwrap_or_else(|| numerical_jacobian(map, p, DEFAULT_FD_STEP));
    let eps = map.epsilon();
    let d = jac.nrows();
    let mut m = Array2::eye(d);
    for a in 0..d {
        for b in 0..d {
            m[[a, b]] += eps * jac[[a, b]];
        }
    }
    det_lu(&m)
}

/// Extraction of the second-order integrand coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CExtraction {
    /// Extrapolated value of `(det(I + eps J) - 1) / eps^2` at `eps -> 0`.
    pub value: f64,
    /// Whether the post-fit residuals shrink at the cubic rate the model
    /// expects; a `false` here flags a ladder whose steps are too large.
    pub converged: bool,
    pub residual_ratios: Vec<f64>,
}

fn rule_with_epsilon(rule: &UpdateRule, epsilon: f64) -> Result<UpdateRule> {
    match rule.kind() {
        RuleKind::Mwu => UpdateRule::mwu(epsilon),
        RuleKind::OmwuSurrogate => UpdateRule::omwu_surrogate(epsilon),
        RuleKind::Ftrl => UpdateRule::ftrl(
            epsilon,
            rule.regularizer().expect("FTRL carries a regularizer"),
        ),
        RuleKind::Omwu => Err(Error::InvalidParameter {
            name: "rule",
            reason: "the two-step optimistic rule has no one-step map; use the surrogate".into(),
        }),
    }
}

/// Fit `(det(I + eps J) - 1) / eps^2` across a decreasing ladder of step
/// sizes and extrapolate to zero. The residuals `|det - 1 - C eps^2|`
/// must shrink cubically between consecutive rungs; if they do not, the
/// result is flagged as non-converged but still returned.
pub fn extract_c_coefficient(
    game: &AnyGame,
    rule: &UpdateRule,
    p: &DualPoint,
    eps_ladder: &[f64],
) -> Result<CExtraction> {
    if eps_ladder.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "eps_ladder",
            reason: "need at least three step sizes".into(),
        });
    }
    for window in eps_ladder.windows(2) {
        if !(window[1] > 0.0 && window[1] < window[0]) {
            return Err(Error::InvalidParameter {
                name: "eps_ladder",
                reason: "step sizes must be positive and strictly decreasing".into(),
            });
        }
    }
    let dets: Vec<f64> = eps_ladder
        .iter()
        .map(|&eps| {
            let scaled = rule_with_epsilon(rule, eps)?;
            let map = one_step_map(game, &scaled)?;
            Ok(volume_integrand(map.as_ref(), p))
        })
        .collect::<Result<Vec<f64>>>()?;
    let values: Vec<f64> = dets
        .iter()
        .zip(eps_ladder)
        .map(|(det, eps)| (det - 1.0) / (eps * eps))
        .collect();
    let degree = (eps_ladder.len() - 1).min(3);
    let coeffs = polyfit(eps_ladder, &values, degree);
    let value = coeffs[0];

    let residuals: Vec<f64> = dets
        .iter()
        .zip(eps_ladder)
        .map(|(det, eps)| (det - 1.0 - value * eps * eps).abs())
        .collect();
    let mut ratios = Vec::new();
    let mut converged = true;
    for i in 0..residuals.len() - 1 {
        // below this floor the residual is round-off, not signal
        if residuals[i] < 1e-13 && residuals[i + 1] < 1e-13 {
            continue;
        }
        let ratio = residuals[i] / residuals[i + 1].max(1e-300);
        let expected = (eps_ladder[i] / eps_ladder[i + 1]).powi(3);
        ratios.push(ratio);
        if !(ratio >= expected / 2.0 && ratio <= expected * 2.0) {
            converged = false;
        }
    }
    Ok(CExtraction {
        value,
        converged,
        residual_ratios: ratios,
    })
}

/// One row of the accumulated log-volume ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeStep {
    /// `ln det(I + eps J)` at the trajectory point of this step.
    pub log_det: f64,
    /// Running sum of the log determinants of all earlier steps.
    pub cumulative: f64,
    pub region_valid: bool,
}

/// Accumulated log-volume along a trajectory. Entry `t` describes the
/// state after `t` updates, so `cumulative` approximates the log volume
/// ratio of an infinitesimal ball transported for `t` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeLedger {
    pub steps: Vec<VolumeStep>,
    /// Final trajectory point; resuming from here with the final
    /// cumulative value continues the ledger bit-for-bit.
    pub final_point: DualPoint,
}

impl VolumeLedger {
    pub fn final_cumulative(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative)
    }
}

/// [`accumulate_log_volume_from`] starting fresh.
pub fn accumulate_log_volume(
    game: &AnyGame,
    p0: &DualPoint,
    rule: &UpdateRule,
    steps: usize,
    region: Option<&RegionSpec>,
) -> Result<VolumeLedger> {
    accumulate_log_volume_from(game, p0, rule, steps, region, 0.0)
}

/// Walk the trajectory of a one-step rule, recording `ln det(I + eps J)`
/// at every visited point and the running sum seeded with `carry`.
pub fn accumulate_log_volume_from(
    game: &AnyGame,
    p0: &DualPoint,
    rule: &UpdateRule,
    steps: usize,
    region: Option<&RegionSpec>,
    carry: f64,
) -> Result<VolumeLedger> {
    let map = one_step_map(game, rule)?;
    let mut ledger = Vec::with_capacity(steps + 1);
    let mut cumulative = carry;
    let mut point = p0.clone();
    for t in 0..=steps {
        let det = volume_integrand(map.as_ref(), &point);
        if !det.is_finite() || det <= 0.0 {
            return Err(Error::NonFinite {
                context: "volume integrand",
            });
        }
        let log_det = det.ln();
        let region_valid = region.is_none_or(|r| in_region(&point, r));
        ledger.push(VolumeStep {
            log_det,
            cumulative,
            region_valid,
        });
        cumulative += log_det;
        if t < steps {
            let next = map.apply(&point);
            if !next.is_finite() {
                return Err(Error::NonFiniteState {
                    last_finite_step: t,
                });
            }
            point = next;
        }
    }
    Ok(VolumeLedger {
        steps: ledger,
        final_point: point,
    })
}

/// Divergence statistics of a perturbation ensemble around a reference
/// trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    /// Largest dual-space distance from the reference across the
    /// ensemble, per step.
    pub sup_distance: Vec<f64>,
    /// Least-squares slope of `ln sup_distance` over the fit window.
    pub fitted_gamma: f64,
    /// Least-squares intercept of the same fit.
    pub lambda_intercept: f64,
    /// Fit window `[start, end)`: ends at the first exit of the reference
    /// or any member; starts after a transient discard.
    pub fit_start: usize,
    pub fit_end: usize,
    /// `cbar * eps^2 / (2 d)` for the supplied coefficient bound, if any.
    pub predicted_gamma: Option<f64>,
}

/// Evolve a seeded ensemble of starts on the sphere of radius
/// `ball_radius` around `p0` and fit the exponential divergence rate of
/// the ensemble's sup distance over the in-region window.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_divergence(
    game: &AnyGame,
    p0: &DualPoint,
    rule: &UpdateRule,
    steps: usize,
    region: Option<&RegionSpec>,
    ball_radius: f64,
    ensemble_size: usize,
    seed: u64,
    cbar_hint: Option<f64>,
) -> Result<DivergenceReport> {
    if !ball_radius.is_finite() || ball_radius <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "ball_radius",
            reason: "must be positive".into(),
        });
    }
    if ensemble_size < 2 {
        return Err(Error::InvalidParameter {
            name: "ensemble_size",
            reason: "need at least two members".into(),
        });
    }
    let counts = game.strategy_counts();
    let d: usize = counts.iter().sum();
    let reference = run_trajectory(game, p0, rule, steps, region)?;

    let flat0 = p0.to_flat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<DualPoint> = (0..ensemble_size)
        .map(|_| {
            let dir = unit_sphere_direction(&mut rng, d);
            let flat: Vec<f64> = flat0
                .iter()
                .zip(&dir)
                .map(|(c, v)| c + ball_radius * v)
                .collect();
            DualPoint::from_flat(&counts, &flat)
        })
        .collect();
    let members: Vec<_> = starts
        .par_iter()
        .map(|start| run_trajectory(game, start, rule, steps, region))
        .collect::<Result<Vec<_>>>()?;

    let sup_distance: Vec<f64> = (0..=steps)
        .map(|t| {
            members
                .iter()
                .map(|m| m.points[t].distance(&reference.points[t]))
                .fold(0.0_f64, f64::max)
        })
        .collect();

    let mut fit_end = steps + 1;
    for record in std::iter::once(&reference).chain(members.iter()) {
        if let Some(exit) = record.exit_time {
            fit_end = fit_end.min(exit);
        }
    }
    if fit_end == 0 {
        return Err(Error::InvalidParameter {
            name: "ball_radius",
            reason: "the ensemble starts outside the region".into(),
        });
    }
    let mut fit_start = fit_end / 10;
    if fit_end - fit_start < 2 {
        fit_start = 0;
    }
    let (fitted_gamma, lambda_intercept) = if fit_end - fit_start >= 2 {
        let xs: Vec<f64> = (fit_start..fit_end).map(|t| t as f64).collect();
        let ys: Vec<f64> = sup_distance[fit_start..fit_end]
            .iter()
            .map(|&v| v.max(1e-300).ln())
            .collect();
        ols_line_fit(&xs, &ys)
    } else {
        (0.0, sup_distance[0].max(1e-300).ln())
    };

    let predicted_gamma =
        cbar_hint.map(|cbar| cbar * rule.epsilon() * rule.epsilon() / (2.0 * d as f64));
    Ok(DivergenceReport {
        sup_distance,
        fitted_gamma,
        lambda_intercept,
        fit_start,
        fit_end,
        predicted_gamma,
    })
}
