//! Game representations and the dual/primal geometry of learning dynamics.
//!
//! Players accumulate payoffs in the dual space (one real vector per player);
//! the softmax map sends a dual point to the mixed-strategy profile actually
//! played. All payoff evaluation is exact summation over discrete profiles,
//! so every quantity here is deterministic given the same input bits.

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Default cap on dense profile-space expansion (number of tensor entries
/// per player).
pub const DEFAULT_EXPANSION_BUDGET: usize = 10_000_000;

fn check_finite_slice(values: &[f64], context: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

/// Iterates over all strategy profiles for the given strategy counts in
/// row-major (last player fastest) order. An empty `counts` yields the
/// single empty profile.
pub struct ProfileIter {
    counts: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl ProfileIter {
    pub fn new(counts: &[usize]) -> Self {
        let done = counts.contains(&0);
        ProfileIter {
            counts: counts.to_vec(),
            current: vec![0; counts.len()],
            done,
        }
    }
}

impl Iterator for ProfileIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let item = self.current.clone();
        // odometer increment
        let mut pos = self.counts.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.counts[pos] {
                break;
            }
            self.current[pos] = 0;
        }
        Some(item)
    }
}

/// Dense N-player normal-form game: one payoff tensor per player, each of
/// shape `n_1 x ... x n_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    strategy_counts: Vec<usize>,
    payoffs: Vec<ArrayD<f64>>,
}

impl NormalFormGame {
    pub fn new(strategy_counts: Vec<usize>, payoffs: Vec<ArrayD<f64>>) -> Result<Self> {
        if strategy_counts.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "num_players",
                reason: format!("need at least 2 players, got {}", strategy_counts.len()),
            });
        }
        if strategy_counts.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "strategy_counts",
                reason: "every player needs at least one strategy".into(),
            });
        }
        if payoffs.len() != strategy_counts.len() {
            return Err(Error::Shape {
                context: "normal-form payoffs",
                expected: format!("{} tensors", strategy_counts.len()),
                actual: format!("{} tensors", payoffs.len()),
            });
        }
        for tensor in &payoffs {
            if tensor.shape() != strategy_counts.as_slice() {
                return Err(Error::Shape {
                    context: "payoff tensor",
                    expected: format!("{:?}", strategy_counts),
                    actual: format!("{:?}", tensor.shape()),
                });
            }
            if !tensor.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "payoff tensor",
                });
            }
        }
        Ok(NormalFormGame {
            strategy_counts,
            payoffs,
        })
    }

    pub fn num_players(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn payoff_tensor(&self, player: usize) -> &ArrayD<f64> {
        &self.payoffs[player]
    }

    pub fn payoff(&self, player: usize, profile: &[usize]) -> f64 {
        self.payoffs[player][IxDyn(profile)]
    }

    /// Number of pure strategy profiles.
    pub fn profile_count(&self) -> usize {
        self.strategy_counts.iter().product()
    }
}

/// Two-player game given by the row player's and column player's payoff
/// matrices, both `n_1 x n_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    a: Array2<f64>,
    b: Array2<f64>,
}

impl BimatrixGame {
    pub fn new(a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Shape {
                context: "bimatrix game",
                expected: format!("{:?}", a.dim()),
                actual: format!("{:?}", b.dim()),
            });
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidParameter {
                name: "bimatrix shape",
                reason: "matrices must be non-empty".into(),
            });
        }
        if !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "bimatrix game",
            });
        }
        Ok(BimatrixGame { a, b })
    }

    /// Payoff matrix of the row player.
    pub fn row_matrix(&self) -> &Array2<f64> {
        &self.a
    }

    /// Payoff matrix of the column player.
    pub fn col_matrix(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn strategy_counts(&self) -> [usize; 2] {
        [self.a.nrows(), self.a.ncols()]
    }

    pub fn to_normal_form(&self) -> NormalFormGame {
        let shape = vec![self.a.nrows(), self.a.ncols()];
        let t_a = ArrayD::from_shape_vec(IxDyn(&shape), self.a.iter().copied().collect()).unwrap();
        let t_b = ArrayD::from_shape_vec(IxDyn(&shape), self.b.iter().copied().collect()).unwrap();
        NormalFormGame::new(shape, vec![t_a, t_b]).expect("valid bimatrix expands cleanly")
    }

    /// Largest absolute payoff entry; used to scale tolerances.
    pub fn payoff_scale(&self) -> f64 {
        self.a
            .iter()
            .chain(self.b.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Multi-player game whose payoffs decompose over ordered player pairs:
/// player `i` receives `sum_k H^{ik}[s_i, s_k]`. A missing edge matrix is
/// the zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalGame {
    strategy_counts: Vec<usize>,
    edges: BTreeMap<(usize, usize), Array2<f64>>,
}

impl GraphicalGame {
    pub fn new(
        strategy_counts: Vec<usize>,
        edges: Vec<((usize, usize), Array2<f64>)>,
    ) -> Result<Self> {
        if strategy_counts.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "num_players",
                reason: format!("need at least 2 players, got {}", strategy_counts.len()),
            });
        }
        if strategy_counts.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "strategy_counts",
                reason: "every player needs at least one strategy".into(),
            });
        }
        let players = strategy_counts.len();
        let mut map = BTreeMap::new();
        for ((i, k), matrix) in edges {
            if i >= players || k >= players || i == k {
                return Err(Error::InvalidParameter {
                    name: "edge",
                    reason: format!("invalid ordered pair ({i}, {k}) for {players} players"),
                });
            }
            let expected = (strategy_counts[i], strategy_counts[k]);
            if matrix.dim() != expected {
                return Err(Error::Shape {
                    context: "edge matrix",
                    expected: format!("{:?}", expected),
                    actual: format!("{:?}", matrix.dim()),
                });
            }
            if !matrix.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "edge matrix",
                });
            }
            map.insert((i, k), matrix);
        }
        Ok(GraphicalGame {
            strategy_counts,
            edges: map,
        })
    }

    pub fn num_players(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    /// The matrix of payoffs to player `i` against player `k`, or `None`
    /// if the edge is absent (zero).
    pub fn edge(&self, i: usize, k: usize) -> Option<&Array2<f64>> {
        self.edges.get(&(i, k))
    }

    /// Materialized `H^{ik}`, substituting zeros for an absent edge.
    pub fn edge_or_zero(&self, i: usize, k: usize) -> Array2<f64> {
        match self.edge(i, k) {
            Some(m) => m.clone(),
            None => Array2::zeros((self.strategy_counts[i], self.strategy_counts[k])),
        }
    }

    /// The two-player game played along the pair `(i, k)`: payoffs
    /// `(H^{ik}, (H^{ki})^T)`.
    pub fn edge_bimatrix(&self, i: usize, k: usize) -> BimatrixGame {
        let h_ik = self.edge_or_zero(i, k);
        let h_ki_t = self.edge_or_zero(k, i).t().to_owned();
        BimatrixGame::new(h_ik, h_ki_t).expect("edge shapes agree by construction")
    }

    /// True when both matrices of the pair `(i, k)` are absent or zero.
    pub fn pair_is_zero(&self, i: usize, k: usize) -> bool {
        let zero = |m: Option<&Array2<f64>>| m.is_none_or(|m| m.iter().all(|v| *v == 0.0));
        zero(self.edge(i, k)) && zero(self.edge(k, i))
    }

    pub fn payoff(&self, player: usize, profile: &[usize]) -> f64 {
        let mut total = 0.0;
        for k in 0..self.strategy_counts.len() {
            if k == player {
                continue;
            }
            if let Some(h) = self.edge(player, k) {
                total += h[[profile[player], profile[k]]];
            }
        }
        total
    }
}

/// Cumulative-payoff coordinates: one real vector per player.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    parts: Vec<Array1<f64>>,
}

impl DualPoint {
    pub fn new(parts: Vec<Array1<f64>>) -> Result<Self> {
        for part in &parts {
            check_finite_slice(part.as_slice().unwrap(), "dual point")?;
        }
        Ok(DualPoint { parts })
    }

    /// Origin of the dual space for the given strategy counts (the uniform
    /// profile in primal coordinates).
    pub fn zeros(counts: &[usize]) -> Self {
        DualPoint {
            parts: counts.iter().map(|&n| Array1::zeros(n)).collect(),
        }
    }

    pub fn parts(&self) -> &[Array1<f64>] {
        &self.parts
    }

    pub fn part(&self, player: usize) -> &Array1<f64> {
        &self.parts[player]
    }

    pub fn num_players(&self) -> usize {
        self.parts.len()
    }

    pub fn strategy_counts(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.len()).collect()
    }

    /// Total dual dimension `d = sum_i n_i`.
    pub fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.dim());
        for part in &self.parts {
            flat.extend(part.iter().copied());
        }
        flat
    }

    pub fn from_flat(counts: &[usize], flat: &[f64]) -> Self {
        assert_eq!(counts.iter().sum::<usize>(), flat.len());
        let mut parts = Vec::with_capacity(counts.len());
        let mut offset = 0;
        for &n in counts {
            parts.push(Array1::from(flat[offset..offset + n].to_vec()));
            offset += n;
        }
        DualPoint { parts }
    }

    pub fn is_finite(&self) -> bool {
        self.parts.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Euclidean distance in the flattened dual coordinates.
    pub fn distance(&self, other: &DualPoint) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.parts.iter().zip(&other.parts) {
            for (x, y) in a.iter().zip(b.iter()) {
                let d = x - y;
                acc += d * d;
            }
        }
        acc.sqrt()
    }
}

/// One mixed strategy per player; every vector lies on its simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    parts: Vec<Array1<f64>>,
}

impl MixedProfile {
    const SIMPLEX_TOL: f64 = 1e-12;

    pub fn new(parts: Vec<Array1<f64>>) -> Result<Self> {
        for (player, part) in parts.iter().enumerate() {
            check_finite_slice(part.as_slice().unwrap(), "mixed profile")?;
            let sum: f64 = part.sum();
            if part.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > Self::SIMPLEX_TOL {
                return Err(Error::InvalidParameter {
                    name: "mixed profile",
                    reason: format!(
                        "player {player} vector is not on the simplex (sum {sum})"
                    ),
                });
            }
        }
        Ok(MixedProfile { parts })
    }

    pub fn uniform(counts: &[usize]) -> Self {
        MixedProfile {
            parts: counts
                .iter()
                .map(|&n| Array1::from_elem(n, 1.0 / n as f64))
                .collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(parts: Vec<Array1<f64>>) -> Self {
        MixedProfile { parts }
    }

    pub fn parts(&self) -> &[Array1<f64>] {
        &self.parts
    }

    pub fn part(&self, player: usize) -> &Array1<f64> {
        &self.parts[player]
    }

    pub fn prob(&self, player: usize, strategy: usize) -> f64 {
        self.parts[player][strategy]
    }

    pub fn strategy_counts(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.len()).collect()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for part in &self.parts {
            flat.extend(part.iter().copied());
        }
        flat
    }

    /// Euclidean distance in the flattened primal coordinates.
    pub fn distance(&self, other: &MixedProfile) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.parts.iter().zip(&other.parts) {
            for (x, y) in a.iter().zip(b.iter()) {
                let d = x - y;
                acc += d * d;
            }
        }
        acc.sqrt()
    }
}

/// The interior slice of the primal space: every strategy of every player
/// must carry probability at least `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    delta: f64,
}

impl RegionSpec {
    /// A region threshold without reference to a particular game. Must lie
    /// strictly between 0 and 1.
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("must be in (0, 1), got {delta}"),
            });
        }
        Ok(RegionSpec { delta })
    }

    /// A region threshold validated against the strategy counts of a game:
    /// the region is nonempty iff `delta <= 1/max_i n_i`.
    pub fn for_game(delta: f64, counts: &[usize]) -> Result<Self> {
        let region = Self::new(delta)?;
        let max_n = counts.iter().copied().max().unwrap_or(1);
        if delta > 1.0 / max_n as f64 {
            return Err(Error::EmptyRegion {
                delta,
                counts: counts.to_vec(),
            });
        }
        Ok(region)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Softmax per player, computed with max-subtraction so the result is
/// overflow-free and exactly invariant under per-player uniform shifts.
pub fn dual_to_primal(p: &DualPoint) -> MixedProfile {
    let parts = p
        .parts()
        .iter()
        .map(|part| {
            let max = part.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let exps: Array1<f64> = part.mapv(|v| (v - max).exp());
            let total = exps.sum();
            exps / total
        })
        .collect();
    MixedProfile::from_parts_unchecked(parts)
}

/// True iff every primal coordinate of `x(p)` is at least `delta`.
/// The comparison is inclusive, so the boundary belongs to the region.
pub fn in_region(p: &DualPoint, region: &RegionSpec) -> bool {
    let x = dual_to_primal(p);
    x.parts()
        .iter()
        .all(|part| part.iter().all(|&v| v >= region.delta()))
}

/// Expected payoff to the first focal player when each focal player is
/// pinned to the listed strategy and everyone else randomizes according
/// to `x`. Exact summation over the residual profile space.
pub fn expected_payoff(
    game: &NormalFormGame,
    x: &MixedProfile,
    focal: &[(usize, usize)],
) -> Result<f64> {
    assert!(!focal.is_empty(), "need at least one focal player");
    let counts = game.strategy_counts();
    let mut pinned: Vec<Option<usize>> = vec![None; counts.len()];
    for &(player, strategy) in focal {
        if player >= counts.len() {
            return Err(Error::IndexOutOfRange {
                context: "focal player",
                player,
                index: player,
                limit: counts.len(),
            });
        }
        if strategy >= counts[player] {
            return Err(Error::IndexOutOfRange {
                context: "focal strategy",
                player,
                index: strategy,
                limit: counts[player],
            });
        }
        if pinned[player].is_some() {
            return Err(Error::DuplicateFocalPlayer { player });
        }
        pinned[player] = Some(strategy);
    }

    let payoff_to = focal[0].0;
    let free_players: Vec<usize> = (0..counts.len()).filter(|i| pinned[*i].is_none()).collect();
    let free_counts: Vec<usize> = free_players.iter().map(|&i| counts[i]).collect();

    let mut profile: Vec<usize> = pinned.iter().map(|s| s.unwrap_or(0)).collect();
    let mut total = 0.0;
    for residual in ProfileIter::new(&free_counts) {
        let mut weight = 1.0;
        for (slot, &player) in free_players.iter().enumerate() {
            profile[player] = residual[slot];
            weight *= x.prob(player, residual[slot]);
        }
        total += weight * game.payoff(payoff_to, &profile);
    }
    Ok(total)
}

/// Expand a pairwise-structured game into dense payoff tensors, refusing
/// when any tensor would exceed `budget` entries.
pub fn graphical_to_normal_form_with_budget(
    game: &GraphicalGame,
    budget: usize,
) -> Result<NormalFormGame> {
    let counts = game.strategy_counts().to_vec();
    let mut size: usize = 1;
    for &n in &counts {
        size = size.checked_mul(n).ok_or(Error::BudgetExceeded {
            size: usize::MAX,
            budget,
        })?;
    }
    if size > budget {
        return Err(Error::BudgetExceeded { size, budget });
    }
    let mut tensors = Vec::with_capacity(counts.len());
    for player in 0..counts.len() {
        let mut data = Vec::with_capacity(size);
        for profile in ProfileIter::new(&counts) {
            data.push(game.payoff(player, &profile));
        }
        tensors.push(ArrayD::from_shape_vec(IxDyn(&counts), data).unwrap());
    }
    NormalFormGame::new(counts, tensors)
}

/// [`graphical_to_normal_form_with_budget`] with the default budget.
pub fn graphical_to_normal_form(game: &GraphicalGame) -> Result<NormalFormGame> {
    graphical_to_normal_form_with_budget(game, DEFAULT_EXPANSION_BUDGET)
}

/// A game in any of the three supported representations.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyGame {
    Bimatrix(BimatrixGame),
    NormalForm(NormalFormGame),
    Graphical(GraphicalGame),
}

impl AnyGame {
    pub fn strategy_counts(&self) -> Vec<usize> {
        match self {
            AnyGame::Bimatrix(g) => g.strategy_counts().to_vec(),
            AnyGame::NormalForm(g) => g.strategy_counts().to_vec(),
            AnyGame::Graphical(g) => g.strategy_counts().to_vec(),
        }
    }

    pub fn num_players(&self) -> usize {
        self.strategy_counts().len()
    }

    /// Total dual dimension `d = sum_i n_i`.
    pub fn dual_dim(&self) -> usize {
        self.strategy_counts().iter().sum()
    }

    /// The expected payoff to every (player, strategy) pair under `x`:
    /// the drift field of the learning dynamics.
    pub fn payoff_field(&self, x: &MixedProfile) -> Vec<Array1<f64>> {
        match self {
            AnyGame::Bimatrix(g) => {
                let u1 = g.row_matrix().dot(x.part(1));
                let u2 = g.col_matrix().t().dot(x.part(0));
                vec![u1, u2]
            }
            AnyGame::Graphical(g) => {
                let n = g.num_players();
                (0..n)
                    .map(|i| {
                        let mut u = Array1::zeros(g.strategy_counts()[i]);
                        for k in 0..n {
                            if k == i {
                                continue;
                            }
                            if let Some(h) = g.edge(i, k) {
                                u = u + h.dot(x.part(k));
                            }
                        }
                        u
                    })
                    .collect()
            }
            AnyGame::NormalForm(g) => (0..g.num_players())
                .map(|i| {
                    Array1::from(
                        (0..g.strategy_counts()[i])
                            .map(|j| {
                                expected_payoff(g, x, &[(i, j)])
                                    .expect("indices are in range by construction")
                            })
                            .collect::<Vec<f64>>(),
                    )
                })
                .collect(),
        }
    }
}
