//! Benchmark runs: one trace CSV per (solver, seed) plus a summary table.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ndarray::Array1;
use nsprox_core::applications::pca_default_penalty;
use nsprox_core::{
    build_fair_classification, build_pca, build_portfolio, solve, CompositeProblem, RunReport, SampleSpace,
};
use rayon::prelude::*;

use crate::config::{BenchmarkConfig, DataSpec, ProblemSpec, StartPoint};
use crate::dataset::{read_sparse_dataset, Dataset};

pub const TRACE_HEADER: &str = "iter,grad_calls,prox_calls,phi,stationarity,elapsed_s";
pub const SUMMARY_FILE: &str = "summary.csv";
const SUMMARY_HEADER: &str = "solver,algorithm,seed,budget,final_phi,final_stationarity,theory_stationarity,\
output_nonzeros,gradient_calls,prox_g_calls,prox_h_calls,raw_gradient_evals,trace_file";

/// Outcome of one (solver, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub solver: String,
    pub algorithm: String,
    pub seed: u64,
    pub budget: u64,
    pub final_phi: f64,
    pub final_stationarity: f64,
    pub theory_stationarity: f64,
    /// Non-zero count of the theory output `zeta(w^R)`.
    pub output_nonzeros: usize,
    pub gradient_calls: u64,
    pub prox_g_calls: u64,
    pub prox_h_calls: u64,
    pub raw_gradient_evals: u64,
    pub trace_file: PathBuf,
}

fn load_dataset(data: &DataSpec) -> Result<Dataset> {
    if let Some(syn) = &data.synthetic {
        let generated = syn.generate()?;
        return Ok(Dataset { samples: generated.samples, labels: None, feature_names: None });
    }
    let path = data.path.as_ref().ok_or_else(|| anyhow!("problem data has no source"))?;
    Ok(read_sparse_dataset(path, data.max_n, data.max_d)?)
}

/// Builds the configured problem and its starting point.
pub fn build_problem(spec: &ProblemSpec) -> Result<(CompositeProblem, Array1<f64>)> {
    let data = load_dataset(spec.data()).context("loading problem data")?;
    let problem = match spec {
        ProblemSpec::Pca { regularizer, .. } => {
            let penalty = regularizer.unwrap_or_else(|| pca_default_penalty(data.dim()));
            build_pca(data.samples, penalty)?
        }
        ProblemSpec::Fair { sensitive_index, c, g1, g2, positive_label, .. } => {
            let labels = data.labels.as_ref().ok_or_else(|| anyhow!("fair classification needs labelled data"))?;
            let labels: Array1<f64> = match positive_label {
                Some(p) => labels.iter().map(|&y| if y == *p { 1.0 } else { -1.0 }).collect(),
                None => Array1::from(labels.clone()),
            };
            let x = data.samples.to_dense();
            build_fair_classification(x.view(), labels.view(), *sensitive_index, *c, *g1, *g2)?
        }
        ProblemSpec::Portfolio { psi1, psi2, regularizer, .. } => {
            build_portfolio(data.samples.to_dense(), *psi1, *psi2, *regularizer)?
        }
    };
    let d = problem.dim();
    let start = match spec.start() {
        StartPoint::Origin => problem.constraint().feasible_origin(d)?,
        StartPoint::Uniform => {
            let w = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
            problem.constraint().project(w.view())?
        }
    };
    Ok((problem, start))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trace_csv(report: &RunReport) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in &report.trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6}",
            t.iteration,
            t.gradient_calls,
            t.prox_calls,
            t.phi,
            fmt_opt(t.stationarity),
            t.elapsed_seconds
        );
    }
    out
}

fn summary_csv(runs: &[RunSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.solver,
            r.algorithm,
            r.seed,
            r.budget,
            r.final_phi,
            r.final_stationarity,
            r.theory_stationarity,
            r.output_nonzeros,
            r.gradient_calls,
            r.prox_g_calls,
            r.prox_h_calls,
            r.raw_gradient_evals,
            r.trace_file.file_name().and_then(|f| f.to_str()).unwrap_or_default()
        );
    }
    out
}

pub fn trace_file_name(solver: &str, seed: u64) -> String {
    format!("{solver}_seed{seed}.csv")
}

/// Runs every (solver, seed) pair in Trace mode, writing each trace as soon
/// as its run finishes and the summary at the end. Failed runs are reported
/// after the summary of the successful ones has been written.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<RunSummary>> {
    config.validate()?;
    let (problem, start) = build_problem(&config.problem)?;
    std::fs::create_dir_all(&config.output_dir).with_context(|| format!("creating {}", config.output_dir.display()))?;
    let n = match problem.sample_space() {
        SampleSpace::FiniteSum(n) => Some(n),
        SampleSpace::General => None,
    };
    let jobs: Vec<_> = config.solvers.iter().flat_map(|s| config.seeds.iter().map(move |&seed| (s, seed))).collect();
    log::info!("{} runs on a problem of dimension {}", jobs.len(), problem.dim());

    let results: Vec<Result<RunSummary>> = jobs
        .par_iter()
        .map(|&(spec, seed)| {
            let name = spec.name();
            let run = || -> Result<RunSummary> {
                let solver = spec.solver_config(seed, n)?;
                let report = solve(&problem, &solver, Some(&start))?;
                let trace_file = config.output_dir.join(trace_file_name(&name, seed));
                write_atomic(&trace_file, &trace_csv(&report))?;
                let last = report.trace.last();
                log::info!("{name} seed {seed}: {} gradient calls", report.counters.gradient_calls);
                Ok(RunSummary {
                    solver: name.clone(),
                    algorithm: report.algorithm.name().to_string(),
                    seed,
                    budget: solver.budget,
                    final_phi: last.map_or(f64::NAN, |t| t.phi),
                    final_stationarity: last.and_then(|t| t.stationarity).unwrap_or(f64::NAN),
                    theory_stationarity: report.stationarity,
                    output_nonzeros: report.theory_output.iter().filter(|&&v| v != 0.0).count(),
                    gradient_calls: report.counters.gradient_calls,
                    prox_g_calls: report.counters.prox_g_calls,
                    prox_h_calls: report.counters.prox_h_calls,
                    raw_gradient_evals: report.counters.raw_gradient_evals,
                    trace_file,
                })
            };
            run().with_context(|| format!("{name} seed {seed}"))
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => runs.push(s),
            Err(e) => failures.push(format!("{e:#}")),
        }
    }
    write_atomic(&config.output_dir.join(SUMMARY_FILE), &summary_csv(&runs))?;
    if !failures.is_empty() {
        bail!("{} of {} runs failed:\n  {}", failures.len(), jobs.len(), failures.join("\n  "));
    }
    Ok(runs)
}
