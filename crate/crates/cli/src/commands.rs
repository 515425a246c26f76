use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gibbsfit::asymptotics::quantile_sorted;
use gibbsfit::hypothesis::INDEPENDENCE_TOL;
use gibbsfit::model_file::format_sample;
use gibbsfit::{
    calibrate_np_constant, cohomology_independence_check, confidence_region, limit_law_sample,
    lr_test_influence, lr_test_simple, mle, mpe, np_test, pressure_root, read_sample, sample_path,
    Error, GibbsModel, MleConfig, ModelFile, ParameterPoint, Result, TestResult, Word, DEFAULT_TOL,
};

use crate::report::Report;
use crate::{Cli, Command};

const QUANTILE_LEVELS: [f64; 7] = [0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975];

pub fn run(cli: &Cli) -> Result<()> {
    let model = load_model(cli)?;
    let name = command_name(&cli.command);
    let mut r = Report::new(name, cli.seed);
    r.put(
        "model",
        cli.model.as_deref().map(path_text).unwrap_or_default(),
    );
    match &cli.command {
        Command::Simulate { n, theta } => return simulate(cli, &model, *n, theta.as_deref(), r),
        Command::LimitSample { theta } => return limit_sample(cli, &model, theta.as_deref(), r),
        Command::Fit => fit(cli, &model, &mut r)?,
        Command::Mpe => run_mpe(cli, &model, &mut r)?,
        Command::TestSimple { theta0 } => test_simple(cli, &model, theta0.as_deref(), &mut r)?,
        Command::TestInfluence { coord } => test_influence(cli, &model, *coord, &mut r)?,
        Command::NpTest { theta0, theta1, c } => run_np(cli, &model, theta0, theta1, *c, &mut r)?,
        Command::Ci => ci(cli, &model, &mut r)?,
        Command::Pressure { theta } => pressure(&model, theta.as_deref(), &mut r)?,
        Command::Dimroot { lo, hi, tol } => dimroot(&model, *lo, *hi, *tol, &mut r)?,
        Command::ValidateModel { theta } => return validate(cli, &model, theta.as_deref(), r),
    }
    emit(cli, &r)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate { .. } => "simulate",
        Command::Fit => "fit",
        Command::Mpe => "mpe",
        Command::TestSimple { .. } => "test-simple",
        Command::TestInfluence { .. } => "test-influence",
        Command::NpTest { .. } => "np-test",
        Command::Ci => "ci",
        Command::Pressure { .. } => "pressure",
        Command::Dimroot { .. } => "dimroot",
        Command::LimitSample { .. } => "limit-sample",
        Command::ValidateModel { .. } => "validate-model",
    }
}

fn path_text(p: &Path) -> String {
    p.display().to_string()
}

fn load_model(cli: &Cli) -> Result<ModelFile> {
    let path = cli
        .model
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
    ModelFile::load(path)
}

fn load_data(cli: &Cli, model: &ModelFile, r: &mut Report) -> Result<Word> {
    let path = cli
        .data
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--data is required".into()))?;
    let w = read_sample(path, &model.spec)?;
    r.put("data", path_text(path)).put("n", w.len());
    Ok(w)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn emit(cli: &Cli, r: &Report) -> Result<()> {
    let text = r.render(cli.json);
    match &cli.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Report goes to stdout even when `--out` names an artefact file.
fn emit_stdout(cli: &Cli, r: &Report) {
    print!("{}", r.render(cli.json));
}

/// Explicit parameter, else the model's, else an error.
fn parameter(model: &ModelFile, given: Option<&[f64]>) -> Result<ParameterPoint> {
    let p = match given {
        Some(t) => ParameterPoint::new(t.to_vec())?,
        None => model.require_theta()?.clone(),
    };
    check_dim(model, &p)?;
    Ok(p)
}

fn check_dim(model: &ModelFile, p: &ParameterPoint) -> Result<()> {
    if p.dim() != model.family.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.family.dim(),
            got: p.dim(),
        });
    }
    Ok(())
}

fn config(cli: &Cli, model: &ModelFile, n: usize) -> Result<MleConfig> {
    let cfg = match cli.eta {
        Some(eta) => MleConfig::new(eta)?,
        None => MleConfig::for_sample_size(n),
    };
    Ok(match &model.bounds {
        Some(b) => cfg.with_bounds(b.clone()),
        None => cfg,
    })
}

fn simulate(
    cli: &Cli,
    model: &ModelFile,
    n: usize,
    theta: Option<&[f64]>,
    mut r: Report,
) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("--n must be at least 1".into()));
    }
    let p = parameter(model, theta)?;
    let gm = GibbsModel::new(&model.spec, &model.family)?;
    let sys = gm.solve(p.as_slice(), DEFAULT_TOL)?;
    let seq = sample_path(&sys, n, cli.seed)?;
    let header = vec![
        format!("gibbsfit {} simulate", env!("CARGO_PKG_VERSION")),
        format!("seed={} n={n}", cli.seed),
        format!("theta={}", join(p.as_slice())),
    ];
    let text = format_sample(&seq.symbols, &header);
    match &cli.out {
        Some(path) => {
            write_file(path, &text)?;
            r.put("n", n)
                .put("theta", p.to_vec())
                .put("out", path_text(path));
            emit_stdout(cli, &r);
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn fit(cli: &Cli, model: &ModelFile, r: &mut Report) -> Result<()> {
    let w = load_data(cli, model, r)?;
    let cfg = config(cli, model, w.len())?;
    let est = mle(&model.spec, &model.family, &w, &cfg)?;
    r.put("eta", cfg.eta)
        .put("theta_hat", est.theta_hat.to_vec())
        .put("loglik", est.loglik)
        .put("converged", est.converged)
        .put("constraint_active", est.constraint_active)
        .put("box_active", est.box_active)
        .put("moment_active", est.moment_active)
        .put("moment_violation", est.moment_violation)
        .put("gradient_norm", est.gradient_norm)
        .put("iterations", est.iterations)
        .put("starts", est.starts)
        .put("rank_deficient", est.rank_deficient);
    if model.kind == gibbsfit::FamilyKind::Markov {
        let p = gibbsfit::theta_to_markov(&model.spec, &est.theta_hat)?;
        r.matrix("transition_hat", &p);
    }
    Ok(())
}

fn run_mpe(cli: &Cli, model: &ModelFile, r: &mut Report) -> Result<()> {
    let w = load_data(cli, model, r)?;
    let cfg = config(cli, model, w.len())?;
    let est = mpe(&model.spec, &model.family, &w, &cfg)?;
    r.put("theta_tilde", est.theta_tilde.to_vec())
        .put("objective", est.objective)
        .put("newton_iters", est.newton_iters)
        .put("converged", est.converged)
        .put("rank_deficient", est.rank_deficient)
        .put("gradient_norm", est.gradient_norm);
    Ok(())
}

fn put_test(r: &mut Report, t: &TestResult) {
    r.put("statistic", t.statistic)
        .put("log_statistic", t.log_statistic)
        .put("z", t.z_used)
        .put("critical_value", t.critical_value)
        .put("reject", t.reject)
        .put("loglik_null", t.loglik_null)
        .put("loglik_alt", t.loglik_alt);
    if let Some(th) = &t.theta_null_hat {
        r.put("theta_null", th.to_vec());
    }
    if let Some(th) = &t.theta_hat {
        r.put("theta_alt", th.to_vec());
    }
}

fn test_simple(cli: &Cli, model: &ModelFile, theta0: Option<&[f64]>, r: &mut Report) -> Result<()> {
    let p0 = parameter(model, theta0)?;
    let w = load_data(cli, model, r)?;
    let cfg = config(cli, model, w.len())?;
    let t = lr_test_simple(
        &model.spec,
        &model.family,
        &w,
        &p0,
        cli.alpha,
        &cfg,
        cli.reps,
        cli.seed,
    )?;
    r.put("alpha", cli.alpha).put("reps", cli.reps);
    put_test(r, &t);
    Ok(())
}

fn test_influence(cli: &Cli, model: &ModelFile, coord: usize, r: &mut Report) -> Result<()> {
    let d = model.family.dim();
    if coord == 0 || coord > d {
        return Err(Error::InvalidArgument(format!(
            "--coord must be in 1..={d}, got {coord}"
        )));
    }
    let w = load_data(cli, model, r)?;
    let cfg = config(cli, model, w.len())?;
    let t = lr_test_influence(
        &model.spec,
        &model.family,
        &w,
        coord - 1,
        cli.alpha,
        &cfg,
        cli.reps,
        cli.seed,
    )?;
    r.put("coord", coord)
        .put("alpha", cli.alpha)
        .put("reps", cli.reps);
    put_test(r, &t);
    Ok(())
}

fn run_np(
    cli: &Cli,
    model: &ModelFile,
    theta0: &[f64],
    theta1: &[f64],
    c: Option<f64>,
    r: &mut Report,
) -> Result<()> {
    let p0 = parameter(model, Some(theta0))?;
    let p1 = parameter(model, Some(theta1))?;
    let w = load_data(cli, model, r)?;
    let (c, calibrated) = match c {
        Some(c) => (c, false),
        None => (
            calibrate_np_constant(
                &model.spec,
                &model.family,
                &p0,
                &p1,
                w.len(),
                cli.alpha,
                cli.reps,
                cli.seed,
            )?,
            true,
        ),
    };
    let t = np_test(&model.spec, &model.family, &w, &p0, &p1, c)?;
    r.put("c", c).put("calibrated", calibrated);
    if calibrated {
        r.put("alpha", cli.alpha).put("reps", cli.reps);
    }
    put_test(r, &t);
    Ok(())
}

fn ci(cli: &Cli, model: &ModelFile, r: &mut Report) -> Result<()> {
    let w = load_data(cli, model, r)?;
    let cfg = config(cli, model, w.len())?;
    let est = mle(&model.spec, &model.family, &w, &cfg)?;
    let gm = GibbsModel::new(&model.spec, &model.family)?;
    let sigma = gm.covariance(&gm.solve(est.theta_hat.as_slice(), DEFAULT_TOL)?)?;
    let region = confidence_region(
        &est.theta_hat,
        &sigma,
        w.len(),
        cli.alpha,
        cli.reps,
        cli.seed,
    )?;
    r.put("alpha", cli.alpha)
        .put("reps", cli.reps)
        .put("theta_hat", est.theta_hat.to_vec())
        .put("lower", region.lower())
        .put("upper", region.upper())
        .put("constraint_active", est.constraint_active);
    r.matrix("sigma_hat", &sigma.to_rows());
    Ok(())
}

fn pressure(model: &ModelFile, theta: Option<&[f64]>, r: &mut Report) -> Result<()> {
    let p = match (theta, &model.theta) {
        (None, None) => ParameterPoint::zeros(model.family.dim()),
        _ => parameter(model, theta)?,
    };
    let gm = GibbsModel::new(&model.spec, &model.family)?;
    let sys = gm.solve(p.as_slice(), DEFAULT_TOL)?;
    r.put("theta", p.to_vec())
        .put("pressure", sys.pressure())
        .put("lambda", sys.lambda())
        .put("gradient", gm.gradient(&sys));
    r.matrix("covariance", &gm.covariance(&sys)?.to_rows());
    r.put("order", sys.order())
        .put(
            "states",
            sys.transfer_matrix()
                .index()
                .iter()
                .map(|w| {
                    w.to_one_based()
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<String>()
                })
                .collect::<Vec<_>>(),
        )
        .put("phi", sys.phi().to_vec())
        .put("nu", sys.nu().to_vec())
        .put("mu", sys.mu().to_vec());
    Ok(())
}

fn dimroot(model: &ModelFile, lo: f64, hi: f64, tol: f64, r: &mut Report) -> Result<()> {
    let t0 = pressure_root(&model.spec, &model.family, (lo, hi), tol)?;
    let gm = GibbsModel::new(&model.spec, &model.family)?;
    let sys = gm.solve(&[t0], DEFAULT_TOL)?;
    r.put("interval", vec![lo, hi])
        .put("theta0", t0)
        .put("pressure_at_root", sys.pressure());
    Ok(())
}

fn limit_sample(cli: &Cli, model: &ModelFile, theta: Option<&[f64]>, mut r: Report) -> Result<()> {
    let p = parameter(model, theta)?;
    let gm = GibbsModel::new(&model.spec, &model.family)?;
    let sigma = gm.covariance(&gm.solve(p.as_slice(), DEFAULT_TOL)?)?;
    let s = limit_law_sample(&sigma, cli.reps, cli.seed)?;
    r.put("theta", p.to_vec()).put("reps", cli.reps);
    r.matrix("sigma", &sigma.to_rows());
    r.put("rejected", s.rejected_count)
        .put("quantile_levels", QUANTILE_LEVELS.to_vec());
    let levels = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        QUANTILE_LEVELS
            .iter()
            .map(|&q| quantile_sorted(&v, q))
            .collect::<Vec<_>>()
    };
    for i in 0..p.dim() {
        r.put(&format!("quantiles_x{}", i + 1), levels(s.coordinate(i)));
    }
    r.put("quantiles_xi", levels(s.xi_draws.clone()));
    if let Some(path) = &cli.out {
        let mut csv = String::new();
        let cols: Vec<String> = (1..=p.dim()).map(|i| format!("x{i}")).collect();
        let _ = writeln!(csv, "{},xi", cols.join(","));
        for (x, xi) in s.draws.iter().zip(&s.xi_draws) {
            let _ = writeln!(csv, "{},{xi}", join(x));
        }
        write_file(path, &csv)?;
        r.put("out", path_text(path));
    }
    emit_stdout(cli, &r);
    Ok(())
}

fn validate(cli: &Cli, model: &ModelFile, theta: Option<&[f64]>, mut r: Report) -> Result<()> {
    let p = match (theta, &model.theta) {
        (None, None) => ParameterPoint::zeros(model.family.dim()),
        _ => parameter(model, theta)?,
    };
    let check = cohomology_independence_check(&model.spec, &model.family, &p, INDEPENDENCE_TOL)?;
    r.put("alphabet", model.spec.alphabet_size())
        .put("dim", model.family.dim())
        .put("depth", model.family.common_depth())
        .put("kind", format!("{:?}", model.kind).to_lowercase())
        .put("theta", p.to_vec())
        .put("independent", check.independent)
        .put("min_eigenvalue", check.min_eigenvalue);
    emit(cli, &r)?;
    if check.independent {
        Ok(())
    } else {
        Err(Error::DependentDirections {
            min_eigenvalue: check.min_eigenvalue,
        })
    }
}
