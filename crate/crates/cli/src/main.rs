use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array1;
use nsprox_cli::bench::run_benchmark;
use nsprox_cli::config::BenchmarkConfig;
use nsprox_cli::diagnostics::{off_by_lambda_prox, run_diagnostics, DiagnosticOptions};
use nsprox_core::{Constraint, HalfspacePair, McpParams, Penalty, ScadParams};

#[derive(Parser)]
#[command(name = "nsprox", version, about = "Stochastic proximal solvers for nonsmooth nonconvex composite problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver and seed listed in a TOML config and write trace CSVs.
    Bench {
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the self-check suites and print a pass/fail table.
    Diag {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace the prox with a wrong one to confirm the suite fails.
        #[arg(long)]
        corrupt_prox: bool,
    },
    /// Apply a prox or projection to a vector and print the result.
    Prox {
        #[arg(long, value_enum)]
        kind: OperatorKind,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 2.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Halfspace normal, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        normal: Vec<f64>,
        /// Halfspace bound c in |a^T w| <= c.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorKind {
    Zero,
    Mcp,
    Scad,
    Simplex,
    SimplexAugmented,
    NonnegBall,
    Halfspace,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bench { config, output_dir } => {
            let mut config = BenchmarkConfig::load(&config)?;
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            let summaries = run_benchmark(&config)?;
            for s in &summaries {
                println!(
                    "{} seed {}: phi {:.6e}, stationarity {:.3e}, gradient calls {}",
                    s.solver, s.seed, s.final_phi, s.final_stationarity, s.gradient_calls
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Diag { quick, seed, corrupt_prox } => {
            let mut options = DiagnosticOptions { seed, quick, ..Default::default() };
            if corrupt_prox {
                options.prox = Box::new(off_by_lambda_prox);
            }
            let report = run_diagnostics(&options);
            print!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Prox { kind, kappa, nu, lambda, normal, bound, values } => {
            let v = Array1::from(values);
            let out = apply_operator(kind, kappa, nu, lambda, normal, bound, v)?;
            let text: Vec<String> = out.iter().map(|x| x.to_string()).collect();
            println!("{}", text.join(" "));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn apply_operator(
    kind: OperatorKind,
    kappa: f64,
    nu: f64,
    lambda: f64,
    normal: Vec<f64>,
    bound: Option<f64>,
    v: Array1<f64>,
) -> Result<Array1<f64>> {
    let penalty = match kind {
        OperatorKind::Zero => Some(Penalty::Zero),
        OperatorKind::Mcp => Some(Penalty::Mcp(McpParams::new(kappa, nu)?)),
        OperatorKind::Scad => Some(Penalty::Scad(ScadParams::new(kappa, nu)?)),
        _ => None,
    };
    if let Some(p) = penalty {
        if !(lambda > 0.0 && lambda.is_finite()) {
            bail!("lambda must be positive and finite, got {lambda}");
        }
        return Ok(v.mapv(|w| p.prox(lambda, w)));
    }
    let constraint = match kind {
        OperatorKind::Simplex => Constraint::Simplex { augmented: false },
        OperatorKind::SimplexAugmented => Constraint::Simplex { augmented: true },
        OperatorKind::NonnegBall => Constraint::NonnegBall,
        OperatorKind::Halfspace => {
            let c = bound.context("--bound is required for a halfspace")?;
            if normal.len() != v.len() {
                bail!("--normal has {} entries but the vector has {}", normal.len(), v.len());
            }
            Constraint::HalfspacePair(HalfspacePair::new(Array1::from(normal), c)?)
        }
        _ => unreachable!("penalties handled above"),
    };
    Ok(constraint.project(v.view())?)
}
