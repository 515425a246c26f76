//! The limit law `G(N)⁻¹Nᵗ`, its quadratic form `Ξ`, quantiles, confidence
//! boxes and weighted chi-square limits of Birkhoff-sum products.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{mle_with_model, MleConfig};
use crate::sampling::{stream_rng, PathSampler};
use crate::shift::{LocallyConstantFn, ParameterPoint, PotentialFamily, SubshiftSpec};
use crate::thermo::{integrate, CovarianceMatrix, GibbsModel, GibbsSystem, DEFAULT_TOL};

/// Draws per RNG stream. Chunk `c` of every Monte Carlo routine uses stream
/// `c` of the seed, which keeps parallel output identical to serial output.
pub const CHUNK: usize = 1024;

/// Relative singular-value threshold below which `G(N)` is rejected.
pub const SINGULAR_REL_TOL: f64 = 1e-10;

/// `G(M) = MᵗM − Σ` for a row vector `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GMatrix {
    pub m: Vec<f64>,
    pub sigma: CovarianceMatrix,
    pub g: DMatrix<f64>,
}

impl GMatrix {
    pub fn new(m: &[f64], sigma: &CovarianceMatrix) -> Result<Self> {
        if m.len() != sigma.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma.dim(),
                got: m.len(),
            });
        }
        Ok(GMatrix {
            m: m.to_vec(),
            sigma: sigma.clone(),
            g: outer_minus(m, sigma.matrix()),
        })
    }

    pub fn min_singular_value(&self) -> f64 {
        min_abs_eigenvalue(&self.g)
    }

    /// `(G⁻¹Mᵗ, Ξ(M, M))`, or `None` when `G` is numerically singular.
    pub fn solve(&self) -> Option<(Vec<f64>, f64)> {
        let scale = spectral_norm(self.sigma.matrix());
        solve_g(&self.g, &self.m, scale)
    }
}

fn outer_minus(m: &[f64], sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.len();
    DMatrix::from_fn(d, d, |i, j| m[i] * m[j] - sigma[(i, j)])
}

fn min_abs_eigenvalue(g: &DMatrix<f64>) -> f64 {
    g.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min)
}

fn spectral_norm(s: &DMatrix<f64>) -> f64 {
    s.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

fn solve_g(g: &DMatrix<f64>, m: &[f64], scale: f64) -> Option<(Vec<f64>, f64)> {
    if g.nrows() == 1 {
        let v = g[(0, 0)];
        if v.abs() < SINGULAR_REL_TOL * scale {
            return None;
        }
        let x = m[0] / v;
        return Some((vec![x], m[0] * x));
    }
    if min_abs_eigenvalue(g) < SINGULAR_REL_TOL * scale {
        return None;
    }
    let rhs = DVector::from_column_slice(m);
    let x = g.clone().lu().solve(&rhs)?;
    let xi = rhs.dot(&x);
    Some((x.iter().copied().collect(), xi))
}

/// Square-root factor `A` with `AAᵗ = Σ`, negative eigenvalues clamped.
fn sqrt_factor(sigma: &CovarianceMatrix) -> DMatrix<f64> {
    let eig = sigma.eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let d = sigma.dim();
    let mut a = eig.eigenvectors.clone();
    for j in 0..d {
        let lam = eig.eigenvalues[j];
        let s = if lam < 1e-12 * scale { 0.0 } else { lam.sqrt() };
        for i in 0..d {
            a[(i, j)] *= s;
        }
    }
    a
}

fn normal_vector<R: Rng>(a: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let d = a.nrows();
    let z: DVector<f64> = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
    (a * z).iter().copied().collect()
}

fn chunk_sizes(count: usize) -> Vec<(u64, usize)> {
    (0..count.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(count - c * CHUNK)))
        .collect()
}

/// `count` draws of `N ~ Normal(0, Σ)`.
pub fn gaussian_draw(sigma: &CovarianceMatrix, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
    let a = sqrt_factor(sigma);
    let parts: Vec<Vec<Vec<f64>>> = chunk_sizes(count)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = stream_rng(seed, c);
            (0..len).map(|_| normal_vector(&a, &mut rng)).collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample {
    /// Realisations of `G(N)⁻¹Nᵗ`.
    pub draws: Vec<Vec<f64>>,
    /// `Ξ(N, N) = N G(N)⁻¹ Nᵗ`, same order as `draws`.
    pub xi_draws: Vec<f64>,
    pub seed: u64,
    pub rejected_count: usize,
}

impl LimitSample {
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[i]).collect()
    }

    pub fn rejection_rate(&self) -> f64 {
        self.rejected_count as f64 / (self.rejected_count + self.draws.len()) as f64
    }
}

/// `reps` accepted draws of the limit law under `Σ`. Draws whose `G(N)` has
/// smallest singular value below `1e-10·‖Σ‖` are counted and redrawn from
/// the same stream.
pub fn limit_law_sample(sigma: &CovarianceMatrix, reps: usize, seed: u64) -> Result<LimitSample> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let scale = spectral_norm(sigma.matrix());
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(
            "the limit law needs a nonzero covariance".into(),
        ));
    }
    // A null direction v of Σ makes vᵗG(N)v = 0 for every draw.
    let min_eig = sigma.min_eigenvalue();
    if min_eig <= SINGULAR_REL_TOL * scale {
        return Err(Error::DependentDirections {
            min_eigenvalue: min_eig,
        });
    }
    let a = sqrt_factor(sigma);
    let parts: Vec<(Vec<Vec<f64>>, Vec<f64>, usize)> = chunk_sizes(reps)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = stream_rng(seed, c);
            let mut draws = Vec::with_capacity(len);
            let mut xis = Vec::with_capacity(len);
            let mut rejected = 0;
            while draws.len() < len {
                let n = normal_vector(&a, &mut rng);
                let g = outer_minus(&n, sigma.matrix());
                match solve_g(&g, &n, scale) {
                    Some((x, xi)) => {
                        draws.push(x);
                        xis.push(xi);
                    }
                    None => rejected += 1,
                }
            }
            (draws, xis, rejected)
        })
        .collect();
    let mut out = LimitSample {
        draws: Vec::with_capacity(reps),
        xi_draws: Vec::with_capacity(reps),
        seed,
        rejected_count: 0,
    };
    for (d, x, r) in parts {
        out.draws.extend(d);
        out.xi_draws.extend(x);
        out.rejected_count += r;
    }
    Ok(out)
}

/// Order statistic at 1-based position `⌈q·n⌉` (at least 1).
pub fn quantile(draws: &[f64], q: f64) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty sample".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must be in (0,1), got {q}"
        )));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[quantile_index(sorted.len(), q)])
}

/// Same convention on an already sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    sorted[quantile_index(sorted.len(), q)]
}

fn quantile_index(n: usize, q: f64) -> usize {
    ((q * n as f64).ceil() as usize).clamp(1, n) - 1
}

/// Per-coordinate interval `[θ̂ᵢ − lowerᵢ, θ̂ᵢ + upperᵢ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion {
    pub center: Vec<f64>,
    pub lower_offsets: Vec<f64>,
    pub upper_offsets: Vec<f64>,
    /// Total two-sided mass left outside, split as `α/(2d)` per tail per
    /// coordinate; nominal coverage is `1 − α`.
    pub nominal_alpha: f64,
    pub n: usize,
}

impl ConfidenceRegion {
    pub fn lower(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.lower_offsets)
            .map(|(c, o)| c - o)
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.upper_offsets)
            .map(|(c, o)| c + o)
            .collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        let lo = self.lower();
        let hi = self.upper();
        theta
            .iter()
            .enumerate()
            .all(|(i, t)| *t >= lo[i] && *t <= hi[i])
    }
}

/// Confidence box from the limit law under `Σ̂`.
///
/// With `X = G(N)⁻¹Nᵗ` standing in for `√n(θ̂ − θ)`, coordinate `i` uses
/// the `α/(2d)` and `1 − α/(2d)` quantiles `qlo, qhi` of `Xᵢ`, so that
/// `θᵢ ∈ [θ̂ᵢ − qhi/√n, θ̂ᵢ − qlo/√n]`. Offsets are clamped at zero.
pub fn confidence_region(
    theta_hat: &ParameterPoint,
    sigma_hat: &CovarianceMatrix,
    n: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<ConfidenceRegion> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    let d = theta_hat.dim();
    if sigma_hat.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: sigma_hat.dim(),
        });
    }
    let sample = limit_law_sample(sigma_hat, reps, seed)?;
    let root = (n as f64).sqrt();
    let tail = alpha / (2.0 * d as f64);
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for i in 0..d {
        let mut xs = sample.coordinate(i);
        xs.sort_by(f64::total_cmp);
        let qlo = quantile_sorted(&xs, tail);
        let qhi = quantile_sorted(&xs, 1.0 - tail);
        lower.push((qhi / root).max(0.0));
        upper.push((-qlo / root).max(0.0));
    }
    Ok(ConfidenceRegion {
        center: theta_hat.to_vec(),
        lower_offsets: lower,
        upper_offsets: upper,
        nominal_alpha: alpha,
        n,
    })
}

/// Eigendata of the kernel `f⊗g + g⊗f` on `L²(μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MisesEigen {
    pub lambda1: f64,
    pub lambda2: f64,
    pub phi1: LocallyConstantFn,
    pub phi2: LocallyConstantFn,
}

fn product(spec: &SubshiftSpec, f: &LocallyConstantFn, g: &LocallyConstantFn) -> LocallyConstantFn {
    LocallyConstantFn::from_fn(spec, f.depth().max(g.depth()), |w| f.eval(w) * g.eval(w))
}

/// Eigenvalues `∫fg ± ‖f‖‖g‖` and `L²(μ)`-normalised eigenfunctions
/// `∝ f/‖f‖ ± g/‖g‖` after centring both functions under `μ`. An
/// eigenfunction whose direction degenerates (`f ∥ ∓g`) is returned as
/// zero.
pub fn mises_eigendata(
    f: &LocallyConstantFn,
    g: &LocallyConstantFn,
    sys: &GibbsSystem,
) -> Result<MisesEigen> {
    let spec = sys.graph().spec().clone();
    let fc = f.shifted(integrate(sys, f)?);
    let gc = g.shifted(integrate(sys, g)?);
    let nf = integrate(sys, &product(&spec, &fc, &fc))?.max(0.0).sqrt();
    let ng = integrate(sys, &product(&spec, &gc, &gc))?.max(0.0).sqrt();
    if nf <= 1e-300 || ng <= 1e-300 {
        return Err(Error::InvalidArgument(
            "both functions need positive L² norm after centring".into(),
        ));
    }
    let inner = integrate(sys, &product(&spec, &fc, &gc))?;
    let rho = (inner / (nf * ng)).clamp(-1.0, 1.0);
    let a = fc.scaled(1.0 / nf);
    let b = gc.scaled(1.0 / ng);
    let unit = |sign: f64| -> LocallyConstantFn {
        let len = (2.0 + 2.0 * sign * rho).max(0.0).sqrt();
        if len < 1e-12 {
            LocallyConstantFn::from_fn(&spec, a.depth().max(b.depth()), |_| 0.0)
        } else {
            a.combine(&spec, 1.0 / len, &b, sign / len)
        }
    };
    Ok(MisesEigen {
        lambda1: inner + nf * ng,
        lambda2: inner - nf * ng,
        phi1: unit(1.0),
        phi2: unit(-1.0),
    })
}

/// Weights `(λ₁, λ₂)` of the weighted chi-square limit of
/// `(1/n)·S_n f̃·S_n g̃` for an i.i.d. (product) measure.
///
/// The product is the V-statistic of the symmetrised kernel
/// `½(f⊗g + g⊗f)`, so the weights are half those of [`mises_eigendata`].
/// For dependent measures the limit weights involve long-run covariances
/// and this function does not apply.
pub fn product_limit_weights(
    f: &LocallyConstantFn,
    g: &LocallyConstantFn,
    sys: &GibbsSystem,
) -> Result<(f64, f64)> {
    let e = mises_eigendata(&f.scaled(0.5), g, sys)?;
    Ok((e.lambda1, e.lambda2))
}

/// Draws of `λ₁Z₁² + λ₂Z₂²` with independent standard normals.
pub fn weighted_chisq_sample(lambda1: f64, lambda2: f64, reps: usize, seed: u64) -> Vec<f64> {
    let parts: Vec<Vec<f64>> = chunk_sizes(reps)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = stream_rng(seed, c);
            (0..len)
                .map(|_| {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    lambda1 * z1 * z1 + lambda2 * z2 * z2
                })
                .collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        best = best.max((i as f64 / n - j as f64 / m).abs());
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    /// `n · mean ‖θ̂ − θ‖²` over simulated fits.
    pub lhs: f64,
    /// Monte Carlo mean of `‖G(N)⁻¹Nᵗ‖²`.
    pub rhs: f64,
    pub reps: usize,
    pub limit_reps: usize,
}

/// Compares the scaled mean squared error of the estimator with the second
/// moment of the limit law.
pub fn efficiency_diagnostic(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    theta: &ParameterPoint,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<EfficiencyReport> {
    let model = GibbsModel::new(spec, fam)?;
    let sys = model.solve(theta.as_slice(), DEFAULT_TOL)?;
    let sigma = model.covariance(&sys)?;
    if sigma.min_eigenvalue() <= 1e-10 * sigma.norm_max().max(1e-300) {
        return Err(Error::DependentDirections {
            min_eigenvalue: sigma.min_eigenvalue(),
        });
    }
    let sampler = PathSampler::new(&sys);
    let cfg = MleConfig::for_sample_size(n);
    let errs: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let w = sampler.sample_seq(n, seed, s)?.symbols;
            let fit = mle_with_model(&model, &w, &cfg, None)?;
            Ok(fit
                .theta_hat
                .as_slice()
                .iter()
                .zip(theta.as_slice())
                .map(|(a, b)| (a - b).powi(2))
                .sum())
        })
        .collect::<Result<Vec<_>>>()?;
    let lhs = n as f64 * errs.iter().sum::<f64>() / reps as f64;
    let limit_reps = 10_000;
    let sample = limit_law_sample(&sigma, limit_reps, seed.wrapping_add(1))?;
    let rhs = sample
        .draws
        .iter()
        .map(|d| d.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / limit_reps as f64;
    Ok(EfficiencyReport {
        lhs,
        rhs,
        reps,
        limit_reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::bernoulli_family;

    fn cov(rows: &[Vec<f64>]) -> CovarianceMatrix {
        CovarianceMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn gaussian_moments() {
        let draws = gaussian_draw(&cov(&[vec![1.0, 0.0], vec![0.0, 1.0]]), 3, 100_000).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let c = draws.iter().map(|d| d[i] * d[j]).sum::<f64>() / draws.len() as f64;
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c - target).abs() < 0.02);
            }
        }
        let zero = gaussian_draw(&cov(&[vec![0.0, 0.0], vec![0.0, 0.0]]), 3, 10).unwrap();
        assert!(zero.iter().flatten().all(|v| *v == 0.0));
        let line = gaussian_draw(&cov(&[vec![1.0, 2.0], vec![2.0, 4.0]]), 3, 100).unwrap();
        assert!(line.iter().all(|d| (d[1] - 2.0 * d[0]).abs() < 1e-9));
        assert!(CovarianceMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn scalar_limit_law_closed_form() {
        let g = GMatrix::new(&[2.0], &cov(&[vec![1.0]])).unwrap();
        assert!((g.solve().unwrap().0[0] - 2.0 / 3.0).abs() < 1e-15);

        let s2 = 0.7;
        let sigma = cov(&[vec![s2]]);
        let sample = limit_law_sample(&sigma, 5000, 21).unwrap();
        let normals = gaussian_draw(&sigma, 21, 5000).unwrap();
        assert_eq!(sample.rejected_count, 0);
        for (x, n) in sample.draws.iter().zip(&normals) {
            let n = n[0];
            assert_eq!(x[0], n / (n * n - s2));
        }
    }

    #[test]
    fn xi_is_negative_inside_unit_band() {
        let sample = limit_law_sample(&cov(&[vec![1.0]]), 100_000, 4).unwrap();
        let neg = sample.xi_draws.iter().filter(|v| **v < 0.0).count() as f64 / 1e5;
        // P(|N| < 1) = 0.6827
        assert!((neg - 0.6827).abs() < 0.005);
    }

    #[test]
    fn quantile_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.5).unwrap(), 50.0);
        assert_eq!(quantile(&v, 1e-9).unwrap(), 1.0);
        assert!(quantile(&[], 0.5).is_err());
        let z: Vec<f64> = gaussian_draw(&cov(&[vec![1.0]]), 9, 100_000)
            .unwrap()
            .into_iter()
            .map(|d| d[0])
            .collect();
        assert!((quantile(&z, 0.975).unwrap() - 1.96).abs() < 0.02);
        let mut prev = f64::NEG_INFINITY;
        for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let x = quantile(&z, q).unwrap();
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn rejections_are_rare() {
        let sigmas = [
            vec![vec![1.0, 0.3], vec![0.3, 0.5]],
            vec![
                vec![2.0, -0.4, 0.1],
                vec![-0.4, 1.0, 0.2],
                vec![0.1, 0.2, 0.7],
            ],
        ];
        for s in &sigmas {
            let sample = limit_law_sample(&cov(s), 200_000, 17).unwrap();
            assert!(sample.rejection_rate() <= 1e-3);
        }
    }

    #[test]
    fn exchangeable_coordinates() {
        let sample =
            limit_law_sample(&cov(&[vec![0.8, 0.0], vec![0.0, 0.8]]), 100_000, 31).unwrap();
        let ks = ks_distance(&sample.coordinate(0), &sample.coordinate(1));
        assert!(ks <= 0.02, "ks = {ks}");
    }

    #[test]
    fn region_scales_with_root_n() {
        let sigma = cov(&[vec![0.25]]);
        let t = ParameterPoint::new(vec![0.0]).unwrap();
        let a = confidence_region(&t, &sigma, 1000, 0.1, 20_000, 5).unwrap();
        let b = confidence_region(&t, &sigma, 4000, 0.1, 20_000, 5).unwrap();
        assert!((a.lower_offsets[0] / 2.0 - b.lower_offsets[0]).abs() < 1e-12);
        assert!((a.upper_offsets[0] / 2.0 - b.upper_offsets[0]).abs() < 1e-12);
        assert!(a.lower_offsets[0] > 0.0 && a.upper_offsets[0] > 0.0);
    }

    #[test]
    fn mises_examples() {
        let (spec, fam) = bernoulli_family(3).unwrap();
        let model = GibbsModel::new(&spec, &fam).unwrap();
        let sys = model.solve(&[0.4, -0.2], DEFAULT_TOL).unwrap();
        let f = LocallyConstantFn::indicator(&spec, &[0]);
        let g = LocallyConstantFn::from_table(
            &spec,
            2,
            &[0.1, 1.0, -0.3, 0.0, 0.5, 2.0, -1.0, 0.2, 0.7],
        )
        .unwrap();
        let fc = f.shifted(integrate(&sys, &f).unwrap());
        let norm2 = integrate(&sys, &product(&spec, &fc, &fc)).unwrap();

        let same = mises_eigendata(&f, &f, &sys).unwrap();
        assert!((same.lambda1 - 2.0 * norm2).abs() < 1e-12);
        assert!(same.lambda2.abs() < 1e-12);
        let neg = mises_eigendata(&f, &f.scaled(-1.0), &sys).unwrap();
        assert!(neg.lambda1.abs() < 1e-12);
        assert!((neg.lambda2 + 2.0 * norm2).abs() < 1e-12);

        let e = mises_eigendata(&f, &g, &sys).unwrap();
        let ip = |a: &LocallyConstantFn, b: &LocallyConstantFn| {
            integrate(&sys, &product(&spec, a, b)).unwrap()
        };
        assert!((ip(&e.phi1, &e.phi1) - 1.0).abs() < 1e-10);
        assert!((ip(&e.phi2, &e.phi2) - 1.0).abs() < 1e-10);
        assert!(ip(&e.phi1, &e.phi2).abs() < 1e-10);
        assert!(mises_eigendata(&LocallyConstantFn::constant(&spec, 1.0), &g, &sys).is_err());
    }

    #[test]
    fn weighted_chisq_means() {
        let x = weighted_chisq_sample(1.0, 0.0, 100_000, 2);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        assert!((m - 1.0).abs() < 0.02);
        let x = weighted_chisq_sample(0.7, -0.4, 100_000, 2);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        assert!((m - 0.3).abs() < 0.02);
    }

    #[test]
    fn efficiency_lhs_and_scaling() {
        let (spec, fam) = bernoulli_family(2).unwrap();
        let theta = ParameterPoint::new(vec![0.2]).unwrap();
        let r = efficiency_diagnostic(&spec, &fam, &theta, 2048, 200, 8).unwrap();
        let pi = 0.2f64.exp() / (1.0 + 0.2f64.exp());
        let fisher = 1.0 / (pi * (1.0 - pi));
        assert!(
            (r.lhs / fisher - 1.0).abs() < 0.25,
            "lhs {} vs {fisher}",
            r.lhs
        );

        let c = 2.0;
        let scaled = PotentialFamily::new(
            &spec,
            fam.base().clone(),
            vec![fam.directions()[0].scaled(c)],
        )
        .unwrap();
        let t2 = ParameterPoint::new(vec![0.2 / c]).unwrap();
        let s = efficiency_diagnostic(&spec, &scaled, &t2, 2048, 200, 8).unwrap();
        assert!((s.lhs * c * c / r.lhs - 1.0).abs() < 1e-6);
        assert!((s.rhs * c * c / r.rhs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singular_covariance_is_rejected() {
        let sigma = cov(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            limit_law_sample(&sigma, 10, 1),
            Err(Error::DependentDirections { .. })
        ));
    }

    #[test]
    fn ks_distance_basics() {
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_distance(&[1.0, 2.0, 3.0, 4.0], &[2.5]) - 0.5).abs() < 1e-15);
    }
}
