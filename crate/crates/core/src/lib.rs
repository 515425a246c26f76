//! Likelihood inference for parametrized Gibbs families on subshifts of
//! finite type.
//!
//! Potentials are locally constant, so the transfer operator is a finite
//! matrix and pressures, eigenmeasures, cylinder probabilities and
//! asymptotic covariances are computed exactly up to eigen-solver tolerance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod hypothesis;
pub mod inference;
pub mod model_file;
pub mod models;
pub mod sampling;
pub mod shift;
pub mod thermo;

pub use asymptotics::{
    confidence_region, efficiency_diagnostic, gaussian_draw, ks_distance, limit_law_sample,
    mises_eigendata, quantile, weighted_chisq_sample, ConfidenceRegion, GMatrix, LimitSample,
};
pub use error::{Error, Result};
pub use hypothesis::{
    calibrate_np_constant, lr_test_influence, lr_test_simple, np_test, TestResult,
};
pub use inference::{
    mle, mle_with_fixed, moment_covariance, mpe, pressure_root, EstimationResult, MleConfig,
};
pub use model_file::{parse_sample, read_sample, FamilyKind, ModelFile};
pub use models::{bernoulli_family, markov_family, markov_to_theta, theta_to_markov};
pub use sampling::{empirical_moments, sample_path, sample_paths, MomentVector, SampleSeq};
pub use shift::{
    assemble_potential, birkhoff_sum, enumerate_admissible_words, LocallyConstantFn,
    ParameterPoint, PotentialFamily, SubshiftSpec, Word,
};
pub use thermo::{
    asymptotic_covariance, cohomology_independence_check, cylinder_log_prob, integrate,
    invariant_cylinder_prob, oracle_cylinder_prob, pressure, pressure_gradient,
    second_derivative_check, solve_gibbs, CovarianceMatrix, GibbsModel, GibbsSystem,
    TransferMatrix, DEFAULT_TOL,
};
