//! Estimators: the constrained maximum-likelihood estimator, the
//! maximum-potential estimator, a lag-window moment covariance and the
//! pressure-root solver.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::empirical_moments;
use crate::shift::{ParameterPoint, PotentialFamily, SubshiftSpec, Word};
use crate::thermo::{CovarianceMatrix, GibbsModel, GibbsSystem, DEFAULT_TOL};

/// Relative eigenvalue cutoff separating the covariance null space.
pub const RANK_TOL: f64 = 1e-9;

/// Settings of the constrained maximum-likelihood estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct MleConfig {
    /// Control parameter: the moment constraint is `|α − ∫F̄dμ|∞ ≤ η²` and
    /// the default box is `[−1/η, 1/η]^d`.
    pub eta: f64,
    /// Per-coordinate `(lo, hi)` bounds replacing the default box.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Number of lattice starts; `None` means `3^min(d,4)`.
    pub grid_starts: Option<usize>,
    /// Add the maximum-potential estimate as an extra start.
    pub mpe_start: bool,
    /// Stop when the projected gradient falls below this in max-norm.
    pub opt_tol: f64,
    pub max_iter: usize,
    /// Whether the `f₀` component enters the moment constraint.
    pub constrain_base: bool,
    pub solver_tol: f64,
}

impl MleConfig {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "eta must be positive, got {eta}"
            )));
        }
        Ok(MleConfig {
            eta,
            bounds: None,
            grid_starts: None,
            mpe_start: true,
            opt_tol: 1e-9,
            max_iter: 200,
            constrain_base: true,
            solver_tol: DEFAULT_TOL,
        })
    }

    /// Default schedule `η_n = max(n^{−1/4}, 0.05)`.
    pub fn default_eta(n: usize) -> f64 {
        (n.max(1) as f64).powf(-0.25).max(0.05)
    }

    pub fn for_sample_size(n: usize) -> Self {
        Self::new(Self::default_eta(n)).expect("schedule is positive")
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn bounds_for(&self, d: usize) -> Result<Vec<(f64, f64)>> {
        match &self.bounds {
            Some(b) => {
                if b.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: b.len(),
                    });
                }
                if b.iter()
                    .any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
                {
                    return Err(Error::InvalidArgument(
                        "box bounds must be finite with lo < hi".into(),
                    ));
                }
                Ok(b.clone())
            }
            None => Ok(vec![(-1.0 / self.eta, 1.0 / self.eta); d]),
        }
    }

    pub fn moment_tolerance(&self) -> f64 {
        self.eta * self.eta
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        if !(self.opt_tol > 0.0) {
            return Err(Error::InvalidArgument("opt_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub theta_hat: ParameterPoint,
    pub loglik: f64,
    pub converged: bool,
    /// The box or the moment constraint binds at the estimate.
    pub constraint_active: bool,
    pub box_active: bool,
    pub moment_active: bool,
    /// `max |αᵢ − ∫fᵢ dμ|` over the constrained components.
    pub moment_violation: f64,
    /// Max-norm of the log-likelihood gradient projected on the free
    /// search directions.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub starts: usize,
    /// The directions were cohomologically dependent and the search was
    /// restricted to the complement of the covariance null space.
    pub rank_deficient: bool,
    pub n_used: usize,
}

/// Sufficient statistics of an observed word for the exact likelihood.
#[derive(Debug, Clone)]
pub struct SampleSummary {
    n: usize,
    windows: f64,
    sums: Vec<f64>,
    last: usize,
    alpha: Vec<f64>,
}

impl SampleSummary {
    pub fn new(model: &GibbsModel, w: &Word) -> Result<Self> {
        w.check(model.spec())?;
        let (sums, last) = model.window_sums(w)?;
        let alpha = empirical_moments(model.spec(), model.family(), w)?.alpha;
        Ok(SampleSummary {
            n: w.len(),
            windows: (w.len() - model.order()) as f64,
            sums,
            last,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Empirical moments `(α⁰, …, α^d)`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `log ν_θ([w])` from a solved system at θ.
    pub fn loglik(&self, sys: &GibbsSystem) -> f64 {
        let t = sys.theta().as_slice();
        let linear: f64 = self.sums[0]
            + t.iter()
                .zip(&self.sums[1..])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        -self.windows * sys.pressure() + linear + sys.nu()[self.last].ln()
    }
}

struct Eval {
    sys: GibbsSystem,
    loglik: f64,
    violation: f64,
}

struct Problem<'a> {
    model: &'a GibbsModel,
    data: &'a SampleSummary,
    cfg: &'a MleConfig,
    bounds: Vec<(f64, f64)>,
    base: Vec<f64>,
    basis: DMatrix<f64>,
    // Which of the d+1 moment components enter the constraint.
    constrained: Vec<bool>,
}

impl Problem<'_> {
    fn eval(&self, theta: &[f64], warm: Option<&GibbsSystem>) -> Result<Eval> {
        let sys = self.model.solve_warm(theta, self.cfg.solver_tol, warm)?;
        let loglik = self.data.loglik(&sys);
        let means = self.model.all_means(&sys);
        let violation = means
            .iter()
            .zip(&self.data.alpha)
            .zip(&self.constrained)
            .filter(|(_, on)| **on)
            .map(|((m, a), _)| (m - a).abs())
            .fold(0.0, f64::max);
        Ok(Eval {
            sys,
            loglik,
            violation,
        })
    }

    fn feasible(&self, e: &Eval) -> bool {
        e.violation <= self.cfg.moment_tolerance() * (1.0 + 1e-12)
    }

    fn in_box(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(&self.bounds)
            .all(|(t, (lo, hi))| *t >= lo - 1e-12 && *t <= hi + 1e-12)
    }

    fn clamp(&self, theta: &mut [f64]) {
        for (t, (lo, hi)) in theta.iter_mut().zip(&self.bounds) {
            *t = t.clamp(*lo, *hi);
        }
    }

    // Gradient of the log-likelihood along each column of `basis`; the
    // final-word term by central differences.
    fn directional_gradient(
        &self,
        theta: &[f64],
        e: &Eval,
        dirs: &DMatrix<f64>,
    ) -> Result<DVector<f64>> {
        let means = self.model.gradient(&e.sys);
        let full: Vec<f64> = (0..theta.len())
            .map(|i| self.data.sums[i + 1] - self.data.windows * means[i])
            .collect();
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = 1e-5 * (1.0 + norm);
        let mut g = DVector::zeros(dirs.ncols());
        for j in 0..dirs.ncols() {
            let col = dirs.column(j);
            let lin: f64 = col.iter().zip(&full).map(|(a, b)| a * b).sum();
            let shifted = |s: f64| -> Result<f64> {
                let t: Vec<f64> = theta
                    .iter()
                    .zip(col.iter())
                    .map(|(t, c)| t + s * c)
                    .collect();
                let sys = self
                    .model
                    .solve_warm(&t, self.cfg.solver_tol, Some(&e.sys))?;
                Ok(sys.nu()[self.data.last].ln())
            };
            let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
            g[j] = lin + fd;
        }
        Ok(g)
    }

    fn theta_of(&self, u: &DVector<f64>) -> Vec<f64> {
        let step = &self.basis * u;
        self.base
            .iter()
            .zip(step.iter())
            .map(|(b, s)| b + s)
            .collect()
    }

    fn run(&self, start: Vec<f64>) -> Result<Option<Outcome>> {
        let mut theta = start;
        self.clamp(&mut theta);
        let mut cur = self.eval(&theta, None)?;
        if !self.feasible(&cur) {
            return Ok(None);
        }
        let d = theta.len();
        let k = self.basis.ncols();
        let mut converged = false;
        let mut moment_blocked = false;
        let mut iterations = 0;
        let mut grad_norm = f64::INFINITY;
        let mut active: Vec<usize> = Vec::new();

        while iterations < self.cfg.max_iter {
            iterations += 1;
            let sigma = self.model.covariance(&cur.sys)?;
            let fisher = sigma.matrix() * self.data.windows;
            let g_basis = self.directional_gradient(&theta, &cur, &self.basis)?;
            let h_basis = self.basis.transpose() * &fisher * &self.basis;

            // Active set: coordinates at a bound that the Newton step would
            // push outward are frozen.
            active.clear();
            let mut null = DMatrix::<f64>::identity(k, k);
            let (dirs_u, g_red, h_red) = loop {
                let g_red = null.transpose() * &g_basis;
                let h_red = null.transpose() * &h_basis * &null;
                let step_red = solve_spd(&h_red, &g_red);
                let step = &self.basis * (&null * &step_red);
                let mut added = false;
                for i in 0..d {
                    if active.contains(&i) {
                        continue;
                    }
                    let (lo, hi) = self.bounds[i];
                    let at_lo = theta[i] <= lo + 1e-12 * (1.0 + lo.abs());
                    let at_hi = theta[i] >= hi - 1e-12 * (1.0 + hi.abs());
                    if (at_lo && step[i] < 0.0) || (at_hi && step[i] > 0.0) {
                        active.push(i);
                        added = true;
                    }
                }
                if !added {
                    break (null, g_red, h_red);
                }
                null = restricted_null(&self.basis, &active, k);
                if null.ncols() == 0 {
                    break (null, DVector::zeros(0), DMatrix::zeros(0, 0));
                }
            };
            grad_norm = g_red.amax();
            if dirs_u.ncols() == 0 || grad_norm <= self.cfg.opt_tol {
                converged = true;
                break;
            }
            let newton = &self.basis * (&dirs_u * solve_spd(&h_red, &g_red));
            let ascent = &self.basis * (&dirs_u * &g_red);
            let mut moved = false;
            for (attempt, dir) in [newton, ascent].into_iter().enumerate() {
                let slope: f64 = if attempt == 0 {
                    g_red.dot(&solve_spd(&h_red, &g_red))
                } else {
                    g_red.dot(&g_red)
                };
                let mut t = 1.0f64;
                for i in 0..d {
                    let (lo, hi) = self.bounds[i];
                    if dir[i] > 0.0 {
                        t = t.min((hi - theta[i]) / dir[i]);
                    } else if dir[i] < 0.0 {
                        t = t.min((lo - theta[i]) / dir[i]);
                    }
                }
                t = t.max(0.0);
                if attempt == 1 {
                    // Scale the raw gradient step to a Newton-sized length.
                    let len = dir.amax();
                    if len > 0.0 {
                        t = t.min(1.0 / len);
                    }
                }
                for _ in 0..40 {
                    let mut cand: Vec<f64> = theta
                        .iter()
                        .zip(dir.iter())
                        .map(|(a, b)| a + t * b)
                        .collect();
                    self.clamp(&mut cand);
                    let e = self.eval(&cand, Some(&cur.sys))?;
                    if !self.feasible(&e) {
                        moment_blocked = true;
                        t *= 0.5;
                        continue;
                    }
                    let slack = 1e-12 * cur.loglik.abs().max(1.0);
                    if e.loglik >= cur.loglik + 1e-4 * t * slope - slack {
                        let change = cand
                            .iter()
                            .zip(&theta)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        theta = cand;
                        cur = e;
                        moved = change > 0.0;
                        if change
                            <= 1e-12 * (1.0 + theta.iter().map(|v| v.abs()).fold(0.0, f64::max))
                        {
                            converged = true;
                        }
                        break;
                    }
                    t *= 0.5;
                }
                if moved || converged {
                    break;
                }
            }
            if converged {
                break;
            }
            if !moved {
                // Blocked by the nonlinear constraint: a boundary point of
                // the feasible set where no ascent direction stays inside.
                converged = moment_blocked;
                break;
            }
            moment_blocked = false;
        }
        Ok(Some(Outcome {
            theta,
            loglik: cur.loglik,
            violation: cur.violation,
            box_active: !active.is_empty(),
            moment_blocked,
            converged,
            iterations,
            grad_norm,
        }))
    }
}

struct Outcome {
    theta: Vec<f64>,
    loglik: f64,
    violation: f64,
    box_active: bool,
    moment_blocked: bool,
    converged: bool,
    iterations: usize,
    grad_norm: f64,
}

fn solve_spd(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if h.nrows() == 0 {
        return DVector::zeros(0);
    }
    let ridge = 1e-12 * h.diagonal().abs().max().max(1e-300);
    let reg = h + DMatrix::identity(h.nrows(), h.ncols()) * ridge;
    match reg.clone().cholesky() {
        Some(c) => c.solve(g),
        None => reg
            .pseudo_inverse(1e-14)
            .map(|p| p * g)
            .unwrap_or_else(|_| g.clone()),
    }
}

// Orthonormal basis of {u : (B u)_i = 0 for i in active}.
fn restricted_null(basis: &DMatrix<f64>, active: &[usize], k: usize) -> DMatrix<f64> {
    let rows = DMatrix::from_fn(active.len(), k, |r, c| basis[(active[r], c)]);
    let gram = rows.transpose() * rows;
    let eig = gram.symmetric_eigen();
    let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] < 1e-10).collect();
    DMatrix::from_fn(k, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

/// Orthonormal basis of the search space over the free coordinates,
/// dropping the covariance null space. Returns the basis and whether any
/// direction was dropped.
fn search_basis(model: &GibbsModel, free: &[usize], at: &[f64]) -> Result<(DMatrix<f64>, bool)> {
    let d = model.dim();
    let k = free.len();
    if k == 0 {
        return Ok((DMatrix::zeros(d, 0), false));
    }
    let sys = model.solve(at, DEFAULT_TOL)?;
    let sigma = model.covariance(&sys)?;
    let sub = DMatrix::from_fn(k, k, |i, j| sigma.get(free[i], free[j]));
    let eig = sub.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..k)
        .filter(|&i| top > 0.0 && eig.eigenvalues[i] > RANK_TOL * top)
        .collect();
    if keep.len() == k {
        let b = DMatrix::from_fn(d, k, |r, c| if r == free[c] { 1.0 } else { 0.0 });
        return Ok((b, false));
    }
    let mut b = DMatrix::zeros(d, keep.len());
    for (c, &idx) in keep.iter().enumerate() {
        for (r, &f) in free.iter().enumerate() {
            b[(f, c)] = eig.eigenvectors[(r, idx)];
        }
    }
    Ok((b, true))
}

/// Constrained MLE over the feasible set, with `fixed[i] = Some(v)` pinning
/// coordinate `i` to `v`.
///
/// A pinned coordinate also drops its moment component from the
/// constraint, so the result is the estimator of the reduced family.
pub fn mle_with_model(
    model: &GibbsModel,
    w: &Word,
    cfg: &MleConfig,
    fixed: Option<&[Option<f64>]>,
) -> Result<EstimationResult> {
    let data = SampleSummary::new(model, w)?;
    mle_from_summary(model, &data, cfg, fixed)
}

pub fn mle_from_summary(
    model: &GibbsModel,
    data: &SampleSummary,
    cfg: &MleConfig,
    fixed: Option<&[Option<f64>]>,
) -> Result<EstimationResult> {
    cfg.validate()?;
    let d = model.dim();
    let bounds = cfg.bounds_for(d)?;
    let fixed: Vec<Option<f64>> = match fixed {
        Some(f) if f.len() != d => {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.len(),
            })
        }
        Some(f) => f.to_vec(),
        None => vec![None; d],
    };
    let mut base = vec![0.0; d];
    for (i, f) in fixed.iter().enumerate() {
        if let Some(v) = f {
            let (lo, hi) = bounds[i];
            if *v < lo || *v > hi || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "fixed value {v} for coordinate {i} lies outside the box"
                )));
            }
            base[i] = *v;
        } else {
            let (lo, hi) = bounds[i];
            base[i] = 0.0f64.clamp(lo, hi);
        }
    }
    let free: Vec<usize> = (0..d).filter(|&i| fixed[i].is_none()).collect();
    let constrained: Vec<bool> = std::iter::once(cfg.constrain_base)
        .chain(fixed.iter().map(|f| f.is_none()))
        .collect();
    if free.is_empty() {
        return pinned_point(model, data, cfg, base, &constrained);
    }
    let (basis, rank_deficient) = search_basis(model, &free, &base)?;
    let axis_aligned = !rank_deficient;
    // Subspace runs through the pinned values with the free part projected
    // away from the null space.
    if rank_deficient {
        for &i in &free {
            base[i] = 0.0;
        }
    }
    let problem = Problem {
        model,
        data,
        cfg,
        bounds: bounds.clone(),
        base: base.clone(),
        basis: basis.clone(),
        constrained,
    };

    let k = basis.ncols();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let lattice_dims = k.min(4);
    let count = cfg.grid_starts.unwrap_or(3usize.pow(lattice_dims as u32));
    for idx in 0..3usize.pow(lattice_dims as u32) {
        if starts.len() >= count {
            break;
        }
        let mut u = DVector::zeros(k);
        let mut code = idx;
        for j in 0..lattice_dims {
            let level = (code % 3) as f64 - 1.0;
            code /= 3;
            if axis_aligned {
                let (lo, hi) = bounds[free[j]];
                let mid = 0.5 * (lo + hi);
                u[j] = mid + level * 0.25 * (hi - lo) - base[free[j]];
            } else {
                let half = bounds
                    .iter()
                    .map(|(lo, hi)| 0.5 * (hi - lo))
                    .fold(f64::INFINITY, f64::min);
                u[j] = level * 0.5 * half;
            }
        }
        let theta = problem.theta_of(&u);
        if problem.in_box(&theta) {
            starts.push(theta);
        }
    }
    if starts.is_empty() {
        starts.push(base.clone());
    }
    if cfg.mpe_start {
        if let Ok(m) = mpe_pinned(model, &data.alpha, cfg.opt_tol, &fixed) {
            let t = m.theta_tilde.as_slice();
            let diff = DVector::from_iterator(d, t.iter().zip(&base).map(|(a, b)| a - b));
            let u = basis.transpose() * diff;
            let mut theta = problem.theta_of(&u);
            if !problem.in_box(&theta) {
                // Where the segment from the base point meets the box.
                let step = problem.theta_of(&u);
                let mut s: f64 = 1.0;
                for ((t, b), (lo, hi)) in step.iter().zip(&base).zip(&bounds) {
                    let delta = t - b;
                    if delta > 0.0 {
                        s = s.min((hi - b) / delta);
                    } else if delta < 0.0 {
                        s = s.min((lo - b) / delta);
                    }
                }
                theta = problem.theta_of(&(&u * s.max(0.0)));
                problem.clamp(&mut theta);
            }
            if theta.iter().all(|v| v.is_finite()) {
                starts.push(theta);
            }
        }
    }

    let outcomes: Vec<Result<Option<Outcome>>> =
        starts.par_iter().map(|s| problem.run(s.clone())).collect();
    let mut best: Option<Outcome> = None;
    for o in outcomes {
        let Some(o) = o? else { continue };
        best = match best {
            None => Some(o),
            Some(b) => {
                let tie = 1e-9 * b.loglik.abs().max(1.0);
                let norm = |t: &[f64]| t.iter().map(|v| v * v).sum::<f64>();
                if o.loglik > b.loglik + tie
                    || ((o.loglik - b.loglik).abs() <= tie && norm(&o.theta) < norm(&b.theta))
                {
                    Some(o)
                } else {
                    Some(b)
                }
            }
        };
    }
    let Some(best) = best else {
        // No feasible start: report the least infeasible candidate.
        let mut closest = base.clone();
        let mut violation = f64::INFINITY;
        for s in &starts {
            if let Ok(e) = problem.eval(s, None) {
                if e.violation < violation {
                    violation = e.violation;
                    closest = s.clone();
                }
            }
        }
        return Err(Error::NoFeasibleParameter { closest, violation });
    };

    let moment_active =
        best.moment_blocked || best.violation >= cfg.moment_tolerance() * (1.0 - 1e-9);
    Ok(EstimationResult {
        theta_hat: ParameterPoint::new(best.theta)?,
        loglik: best.loglik,
        converged: best.converged,
        constraint_active: best.box_active || moment_active,
        box_active: best.box_active,
        moment_active,
        moment_violation: best.violation,
        gradient_norm: best.grad_norm,
        iterations: best.iterations,
        starts: starts.len(),
        rank_deficient,
        n_used: data.n,
    })
}

// Every coordinate pinned: the estimate is the pinned point if feasible.
fn pinned_point(
    model: &GibbsModel,
    data: &SampleSummary,
    cfg: &MleConfig,
    theta: Vec<f64>,
    constrained: &[bool],
) -> Result<EstimationResult> {
    let sys = model.solve(&theta, cfg.solver_tol)?;
    let violation = model
        .all_means(&sys)
        .iter()
        .zip(&data.alpha)
        .zip(constrained)
        .filter(|(_, on)| **on)
        .map(|((m, a), _)| (m - a).abs())
        .fold(0.0, f64::max);
    if violation > cfg.moment_tolerance() {
        return Err(Error::NoFeasibleParameter {
            closest: theta,
            violation,
        });
    }
    Ok(EstimationResult {
        loglik: data.loglik(&sys),
        theta_hat: ParameterPoint::new(theta)?,
        converged: true,
        constraint_active: false,
        box_active: false,
        moment_active: false,
        moment_violation: violation,
        gradient_norm: 0.0,
        iterations: 0,
        starts: 1,
        rank_deficient: false,
        n_used: data.n,
    })
}

/// The constrained maximum-likelihood estimate for the word `w`.
pub fn mle(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
    cfg: &MleConfig,
) -> Result<EstimationResult> {
    mle_with_model(&GibbsModel::new(spec, fam)?, w, cfg, None)
}

/// The same estimator with some coordinates pinned.
pub fn mle_with_fixed(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
    cfg: &MleConfig,
    fixed: &[Option<f64>],
) -> Result<EstimationResult> {
    mle_with_model(&GibbsModel::new(spec, fam)?, w, cfg, Some(fixed))
}

/// Exact `log ν_θ([w])`.
pub fn log_likelihood(model: &GibbsModel, w: &Word, theta: &[f64]) -> Result<f64> {
    let data = SampleSummary::new(model, w)?;
    let sys = model.solve(theta, DEFAULT_TOL)?;
    Ok(data.loglik(&sys))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpeResult {
    pub theta_tilde: ParameterPoint,
    pub objective: f64,
    pub newton_iters: usize,
    pub converged: bool,
    /// Newton steps were taken on the complement of the covariance null
    /// space.
    pub rank_deficient: bool,
    pub gradient_norm: f64,
    /// Largest eigenvalue of the objective Hessian `−Σ` over accepted
    /// iterates.
    pub max_hessian_eigenvalue: f64,
}

const MPE_BOUND: f64 = 50.0;

/// Maximises `⟨α, (1, t)⟩ − P(F_t)` by damped Newton steps.
pub fn mpe_from_moments(model: &GibbsModel, alpha: &[f64], opt_tol: f64) -> Result<MpeResult> {
    mpe_pinned(model, alpha, opt_tol, &vec![None; model.dim()])
}

/// [`mpe_from_moments`] over the coordinates with `fixed[i] = None`, the
/// others held at their pinned values.
pub fn mpe_pinned(
    model: &GibbsModel,
    alpha: &[f64],
    opt_tol: f64,
    fixed: &[Option<f64>],
) -> Result<MpeResult> {
    let d = model.dim();
    if alpha.len() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            got: alpha.len(),
        });
    }
    if fixed.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: fixed.len(),
        });
    }
    let start: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let free: Vec<usize> = (0..d).filter(|&i| fixed[i].is_none()).collect();
    let (basis, rank_deficient) = search_basis(model, &free, &start)?;
    let objective = |sys: &GibbsSystem| -> f64 {
        alpha[0]
            + sys
                .theta()
                .as_slice()
                .iter()
                .zip(&alpha[1..])
                .map(|(t, a)| t * a)
                .sum::<f64>()
            - sys.pressure()
    };
    let mut theta = start;
    let mut sys = model.solve(&theta, DEFAULT_TOL)?;
    let mut obj = objective(&sys);
    if free.is_empty() {
        return Ok(MpeResult {
            theta_tilde: ParameterPoint::new(theta)?,
            objective: obj,
            newton_iters: 0,
            converged: true,
            rank_deficient,
            gradient_norm: 0.0,
            max_hessian_eigenvalue: -model.covariance(&sys)?.min_eigenvalue(),
        });
    }
    let mut iters = 0;
    let mut converged = false;
    let mut grad_norm;
    let mut max_eig = f64::NEG_INFINITY;
    loop {
        let means = model.gradient(&sys);
        let grad = DVector::from_iterator(d, (0..d).map(|i| alpha[i + 1] - means[i]));
        let g = basis.transpose() * &grad;
        grad_norm = g.amax();
        let sigma = model.covariance(&sys)?;
        max_eig = max_eig.max(-sigma.min_eigenvalue());
        if grad_norm <= opt_tol {
            converged = true;
            break;
        }
        if iters >= 200 {
            break;
        }
        iters += 1;
        let h = basis.transpose() * sigma.matrix() * &basis;
        let step = &basis * solve_spd(&h, &g);
        let slope = g.dot(&solve_spd(&h, &g));
        let mut t = 1.0f64;
        let len = step.amax();
        if len > 10.0 {
            t = 10.0 / len;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(a, b)| a + t * b)
                .collect();
            if cand.iter().any(|v| v.abs() > MPE_BOUND) {
                t *= 0.5;
                continue;
            }
            let s = model.solve_warm(&cand, DEFAULT_TOL, Some(&sys))?;
            let o = objective(&s);
            if o >= obj + 1e-4 * t * slope - 1e-14 * obj.abs().max(1.0) {
                theta = cand;
                sys = s;
                obj = o;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Objective is flat to rounding, or the maximiser is beyond the
            // parameter cap.
            converged = grad_norm <= 1e3 * opt_tol;
            break;
        }
    }
    Ok(MpeResult {
        theta_tilde: ParameterPoint::new(theta)?,
        objective: obj,
        newton_iters: iters,
        converged,
        rank_deficient,
        gradient_norm: grad_norm,
        max_hessian_eigenvalue: max_eig,
    })
}

/// Maximum-potential estimate from the empirical moments of `w`.
pub fn mpe(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
    cfg: &MleConfig,
) -> Result<MpeResult> {
    let model = GibbsModel::new(spec, fam)?;
    let alpha = empirical_moments(spec, fam, w)?.alpha;
    mpe_from_moments(&model, &alpha, cfg.opt_tol)
}

/// Lag-window (Bartlett) estimate of the asymptotic covariance from one
/// observed word.
///
/// The window values past the end of `w` come from `anchor` glued after
/// `w`; when the gluing is inadmissible or too short the canonical
/// continuation is used instead. The bandwidth is `⌊n^{1/3}⌋`, and the
/// triangular weights keep the estimate positive semidefinite.
pub fn moment_covariance(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
    anchor: &Word,
) -> Result<CovarianceMatrix> {
    w.check(spec)?;
    let m = fam.common_depth();
    let n = w.len();
    if n < m {
        return Err(Error::WordTooShort { need: m, got: n });
    }
    let s = w.symbols();
    let mut ext = s.to_vec();
    let glue_ok = anchor.check(spec).is_ok()
        && anchor
            .symbols()
            .first()
            .is_some_and(|&c| spec.allows(s[n - 1], c));
    if glue_ok {
        ext.extend(anchor.symbols().iter().take(m - 1));
    }
    if ext.len() < n + m - 1 {
        let last = *ext.last().expect("nonempty");
        let need = n + m - 1 - ext.len();
        ext.extend(spec.canonical_continuation(last, need));
    }
    let d = fam.dim();
    let mut series: Vec<Vec<f64>> = fam
        .directions()
        .iter()
        .map(|f| (0..n).map(|k| f.eval(&ext[k..k + m])).collect())
        .collect();
    for row in series.iter_mut() {
        let mean = row.iter().sum::<f64>() / n as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    let bw = (n as f64).cbrt().floor() as usize;
    let mut sigma = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut total = 0.0;
            for lag in 0..=bw.min(n - 1) {
                let weight = 1.0 - lag as f64 / (bw as f64 + 1.0);
                let mut g = 0.0;
                for k in 0..n - lag {
                    g += series[i][k] * series[j][k + lag];
                }
                if lag == 0 {
                    total += g;
                } else {
                    let mut g2 = 0.0;
                    for k in 0..n - lag {
                        g2 += series[j][k] * series[i][k + lag];
                    }
                    total += weight * (g + g2);
                }
            }
            sigma[(i, j)] = total / n as f64;
        }
    }
    Ok(CovarianceMatrix::from_matrix_unchecked(sigma))
}

/// Parameter `θ⁰` with `P(F_{θ⁰}) = 0` for a one-parameter family.
pub fn pressure_root(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    interval: (f64, f64),
    tol: f64,
) -> Result<f64> {
    if fam.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: fam.dim(),
        });
    }
    let (mut lo, mut hi) = interval;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(
            "need lo < hi and a positive tolerance".into(),
        ));
    }
    let model = GibbsModel::new(spec, fam)?;
    let eval = |t: f64| -> Result<(f64, f64)> {
        let sys = model.solve(&[t], DEFAULT_TOL)?;
        Ok((sys.pressure(), model.gradient(&sys)[0]))
    };
    let (mut p_lo, g_lo) = eval(lo)?;
    let (mut p_hi, g_hi) = eval(hi)?;
    if p_lo == 0.0 {
        return Ok(lo);
    }
    if p_hi == 0.0 {
        return Ok(hi);
    }
    if p_lo.signum() == p_hi.signum() {
        return Err(Error::RootFinding(format!(
            "pressure has the same sign at both ends ({p_lo:e}, {p_hi:e})"
        )));
    }
    let slope_sign = g_lo.signum();
    let monotone = |g: f64| g.abs() > 1e-12 && g.signum() == slope_sign;
    if !monotone(g_lo) || !monotone(g_hi) {
        return Err(Error::RootFinding(
            "pressure is not strictly monotone on the interval".into(),
        ));
    }
    for _ in 0..200 {
        let secant = hi - p_hi * (hi - lo) / (p_hi - p_lo);
        let mid = 0.5 * (lo + hi);
        // Secant when it lands well inside the bracket, bisection otherwise.
        let t = if secant > lo + 0.05 * (hi - lo) && secant < hi - 0.05 * (hi - lo) {
            secant
        } else {
            mid
        };
        let (p, g) = eval(t)?;
        if !monotone(g) {
            return Err(Error::RootFinding(format!(
                "derivative of the pressure changes sign near {t}"
            )));
        }
        if p.abs() <= tol {
            return Ok(t);
        }
        if p.signum() == p_lo.signum() {
            lo = t;
            p_lo = p;
        } else {
            hi = t;
            p_hi = p;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::RootFinding("no convergence in 200 steps".into()))
}
