//! Likelihood-ratio tests: a simple null, vanishing influence of one
//! direction, and the two-point Neyman–Pearson test.

use rayon::prelude::*;

use crate::asymptotics::{limit_law_sample, quantile_sorted};
use crate::error::{Error, Result};
use crate::inference::{mle_from_summary, MleConfig, SampleSummary};
use crate::sampling::PathSampler;
use crate::shift::{ParameterPoint, PotentialFamily, SubshiftSpec, Word};
use crate::thermo::{
    cohomology_independence_check, CovarianceMatrix, GibbsModel, GibbsSystem, DEFAULT_TOL,
};

/// Minimum covariance eigenvalue for the null family to count as
/// cohomologically independent.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Likelihood ratio `L⁰ / L`.
    pub statistic: f64,
    /// `log L⁰ − log L`, kept because the ratio itself underflows easily.
    pub log_statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    /// Nominal level; `None` when the constant was supplied directly.
    pub alpha: Option<f64>,
    /// `z` with `critical_value = 1/(1+z)`.
    pub z_used: f64,
    pub theta_hat: Option<ParameterPoint>,
    pub theta_null_hat: Option<ParameterPoint>,
    pub loglik_null: f64,
    pub loglik_alt: f64,
}

impl TestResult {
    fn build(
        loglik_null: f64,
        loglik_alt: f64,
        z: f64,
        alpha: Option<f64>,
        theta_hat: Option<ParameterPoint>,
        theta_null_hat: Option<ParameterPoint>,
    ) -> Result<Self> {
        if !(1.0 + z > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "critical point z = {z} gives no valid constant"
            )));
        }
        let log_statistic = loglik_null - loglik_alt;
        let log_c = -(1.0 + z).ln();
        Ok(TestResult {
            statistic: log_statistic.exp(),
            log_statistic,
            critical_value: log_c.exp(),
            reject: log_statistic <= log_c,
            alpha,
            z_used: z,
            theta_hat,
            theta_null_hat,
            loglik_null,
            loglik_alt,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must be in (0,1), got {alpha}"
        )))
    }
}

/// Upper-tail point `z` with `P(Ξ ≥ z) ≈ α` under `Σ`.
pub fn xi_critical_point(
    sigma: &CovarianceMatrix,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let mut xi = limit_law_sample(sigma, reps, seed)?.xi_draws;
    xi.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&xi, 1.0 - alpha))
}

/// Same as [`xi_critical_point`] with the covariance of `model` at `theta`.
pub fn model_critical_point(
    model: &GibbsModel,
    theta: &[f64],
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    let sys = model.solve(theta, DEFAULT_TOL)?;
    xi_critical_point(&model.covariance(&sys)?, alpha, reps, seed)
}

/// Test of `θ = θ₀`. The critical value uses the exact covariance at `θ₀`.
#[allow(clippy::too_many_arguments)]
pub fn lr_test_simple(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
    theta0: &ParameterPoint,
    alpha: f64,
    cfg: &MleConfig,
    reps: usize,
    seed: u64,
) -> Result<TestResult> {
    let model = GibbsModel::new(spec, fam)?;
    let z = model_critical_point(&model, theta0.as_slice(), alpha, reps, seed)?;
    lr_test_simple_with(
        &model,
        &SampleSummary::new(&model, w)?,
        theta0,
        alpha,
        z,
        cfg,
    )
}

/// [`lr_test_simple`] with a precomputed critical point, for repeated use
/// on many samples.
pub fn lr_test_simple_with(
    model: &GibbsModel,
    data: &SampleSummary,
    theta0: &ParameterPoint,
    alpha: f64,
    z: f64,
    cfg: &MleConfig,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if theta0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: theta0.dim(),
        });
    }
    let full = mle_from_summary(model, data, cfg, None)?;
    let sys0 = model.solve(theta0.as_slice(), DEFAULT_TOL)?;
    TestResult::build(
        data.loglik(&sys0),
        full.loglik,
        z,
        Some(alpha),
        Some(full.theta_hat),
        Some(theta0.clone()),
    )
}

/// Test of `θ_k = 0` (`k` 0-based). The null is fitted over the remaining
/// coordinates and the critical value uses the covariance at the null fit.
#[allow(clippy::too_many_arguments)]
pub fn lr_test_influence(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
    k: usize,
    alpha: f64,
    cfg: &MleConfig,
    reps: usize,
    seed: u64,
) -> Result<TestResult> {
    let model = GibbsModel::new(spec, fam)?;
    let data = SampleSummary::new(&model, w)?;
    lr_test_influence_with(&model, &data, k, alpha, cfg, reps, seed)
}

pub fn lr_test_influence_with(
    model: &GibbsModel,
    data: &SampleSummary,
    k: usize,
    alpha: f64,
    cfg: &MleConfig,
    reps: usize,
    seed: u64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let d = model.dim();
    if k >= d {
        return Err(Error::InvalidArgument(format!(
            "coordinate {k} out of range for d = {d}"
        )));
    }
    let mut pinned = vec![None; d];
    pinned[k] = Some(0.0);
    let null = mle_from_summary(model, data, cfg, Some(&pinned))?;
    if d > 1 {
        let spec = model.spec();
        let reduced = model.family().without_direction(spec, k)?;
        let rest: Vec<f64> = null
            .theta_hat
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, v)| *v)
            .collect();
        let check = cohomology_independence_check(
            spec,
            &reduced,
            &ParameterPoint::new(rest)?,
            INDEPENDENCE_TOL,
        )?;
        if !check.independent {
            return Err(Error::DependentDirections {
                min_eigenvalue: check.min_eigenvalue,
            });
        }
    }
    let z = model_critical_point(model, null.theta_hat.as_slice(), alpha, reps, seed)?;
    let full = mle_from_summary(model, data, cfg, None)?;
    TestResult::build(
        null.loglik,
        full.loglik,
        z,
        Some(alpha),
        Some(full.theta_hat),
        Some(null.theta_hat),
    )
}

fn two_point_systems(
    model: &GibbsModel,
    theta0: &ParameterPoint,
    theta1: &ParameterPoint,
) -> Result<(GibbsSystem, GibbsSystem)> {
    if theta0.dim() != model.dim() || theta1.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: if theta0.dim() != model.dim() {
                theta0.dim()
            } else {
                theta1.dim()
            },
        });
    }
    if theta0 == theta1 {
        return Err(Error::InvalidArgument(
            "the two hypotheses must differ".into(),
        ));
    }
    Ok((
        model.solve(theta0.as_slice(), DEFAULT_TOL)?,
        model.solve(theta1.as_slice(), DEFAULT_TOL)?,
    ))
}

/// Rejects `θ₀` in favour of `θ₁` when `ν_θ₀([w]) / ν_θ₁([w]) ≤ c`.
pub fn np_test(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
    theta0: &ParameterPoint,
    theta1: &ParameterPoint,
    c: f64,
) -> Result<TestResult> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "constant must be positive, got {c}"
        )));
    }
    let model = GibbsModel::new(spec, fam)?;
    let (s0, s1) = two_point_systems(&model, theta0, theta1)?;
    let data = SampleSummary::new(&model, w)?;
    TestResult::build(
        data.loglik(&s0),
        data.loglik(&s1),
        1.0 / c - 1.0,
        None,
        Some(theta1.clone()),
        Some(theta0.clone()),
    )
}

/// Constant `c` for [`np_test`] with level close to `alpha`: the
/// `alpha`-quantile of the log ratio over `reps` paths of length `n` drawn
/// under `θ₀`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_np_constant(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    theta0: &ParameterPoint,
    theta1: &ParameterPoint,
    n: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let model = GibbsModel::new(spec, fam)?;
    let (s0, s1) = two_point_systems(&model, theta0, theta1)?;
    let sampler = PathSampler::new(&s0);
    let mut ratios = (0..reps as u64)
        .into_par_iter()
        .map(|s| {
            let w = sampler.sample_seq(n, seed, s)?.symbols;
            let data = SampleSummary::new(&model, &w)?;
            Ok(data.loglik(&s0) - data.loglik(&s1))
        })
        .collect::<Result<Vec<f64>>>()?;
    ratios.sort_by(f64::total_cmp);
    // Rejection is `ratio ≤ c`; ties at the quantile are included.
    Ok(quantile_sorted(&ratios, alpha).exp())
}
