//! Volume-expansion analysis of learning dynamics in finite games.
//!
//! The crate decomposes games into zero-sum and coordination parts,
//! evaluates the volume-change coefficient `C` that governs whether
//! multiplicative-weights style dynamics locally expand or contract
//! dual-space volume, issues conservative chaos certificates over
//! interior regions, simulates the dynamics, and verifies the theory
//! numerically through Jacobian determinants, accumulated log-volume and
//! trajectory-divergence ensembles.

pub mod cfunction;
pub mod certificates;
pub mod decomposition;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod sampling;
pub mod volume;

#[cfg(test)]
pub(crate) mod test_util;

pub use cfunction::{
    c_bimatrix, c_bimatrix_expectation_form, c_graphical, c_multi, c_split,
    c_zero_sum_quadruple, induced_graphical_game,
};
pub use certificates::{
    cbar_sample, certificate_is_sound, certify_graphical_family, certify_mwu_chaos_domination,
    certify_mwu_chaos_lp, certify_potential_negativity, check_domination, find_negative_c_point,
    Algorithm, CertificateKind, ChaosCertificate, DominationReport, PotentialNegativityReport,
};
pub use decomposition::{
    chebyshev_fit, decompose, extract_bimatrix_potential, is_trivial, l2_trivial_projection,
    max_quadruple, potential_coordination_lift, potential_deviation, quadruple_combination,
    ChebyshevFit, Decomposition, TrivialMatrix,
};
pub use dynamics::{
    equilibrium_escape_probe, euclidean_simplex_projection, ftrl_step, mwu_step, omwu_step,
    omwu_surrogate_step, run_trajectory, EscapeProbeReport, ProbeOutcome, Regularizer, RuleKind,
    TrajectoryRecord, UpdateRule,
};
pub use error::{Error, Result};
pub use game::{
    dual_to_primal, expected_payoff, graphical_to_normal_form,
    graphical_to_normal_form_with_budget, in_region, AnyGame, BimatrixGame, DualPoint,
    GraphicalGame, MixedProfile, NormalFormGame, RegionSpec,
};
pub use sampling::{sample_region_dual_points, SamplePlan};
pub use volume::{
    accumulate_log_volume, accumulate_log_volume_from, ensemble_divergence,
    extract_c_coefficient, numerical_jacobian, one_step_map, volume_integrand, CExtraction,
    DivergenceReport, FtrlMap, MwuMap, OmwuSurrogateMap, OneStepMap, VolumeLedger, VolumeStep,
};

/// Cap the worker threads used by the data-parallel loops (sampling
/// sweeps, ensembles). Must be called before any parallel work; a second
/// call fails and is reported, never fatal to correctness.
pub fn set_worker_threads(threads: usize) -> std::result::Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
}
