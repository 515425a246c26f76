mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "gibbsfit",
    version,
    about = "Likelihood inference for Gibbs families on subshifts of finite type"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Model definition (TOML).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,

    /// Sample file: whitespace-separated 1-based symbols.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Monte Carlo draws for critical values and confidence regions.
    #[arg(long, global = true, default_value_t = 20_000)]
    pub reps: usize,

    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,

    /// Moment tolerance of the estimator; defaults to max(n^-1/4, 0.05).
    #[arg(long, global = true)]
    pub eta: Option<f64>,

    /// Size of the worker pool.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file. `simulate` writes the sample there, `limit-sample` a CSV
    /// of draws; other commands write their report.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Print the report as one JSON object instead of key=value lines.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sample path from the model at its parameter.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Constrained maximum-likelihood estimate.
    Fit,
    /// Maximum-potential estimate.
    Mpe,
    /// Likelihood-ratio test of a simple hypothesis θ = θ₀.
    TestSimple {
        /// Null parameter; the model's theta by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta0: Option<Vec<f64>>,
    },
    /// Likelihood-ratio test that coordinate `coord` (1-based) has no influence.
    TestInfluence {
        #[arg(long)]
        coord: usize,
    },
    /// Neyman-Pearson test of θ₀ against θ₁.
    NpTest {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        theta0: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        theta1: Vec<f64>,
        /// Likelihood-ratio threshold; calibrated by simulation under θ₀ if absent.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Confidence box around the estimate.
    Ci,
    /// Pressure, gradient, covariance and eigendata.
    Pressure {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Zero of the pressure of a one-parameter family.
    Dimroot {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Draws from the limit law of the rescaled estimator.
    LimitSample {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Parse the model and check that its directions are independent.
    ValidateModel {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
}

fn fail(category: &str, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error[{category}]: {msg}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            return fail("usage", text.trim_end().trim_start_matches("error: "));
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail("argument", "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail("internal", e);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.category(), e),
    }
}
