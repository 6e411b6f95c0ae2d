//! Benchmark configuration, read from TOML.
//!
//! ```toml
//! output_dir = "results"
//! seeds = [0, 1, 2]
//!
//! [problem]
//! kind = "pca"                 # pca | fair | portfolio
//! start = "uniform"            # uniform | origin
//! regularizer = { kind = "mcp", kappa = 0.02, nu = 1.0 }
//!
//! [problem.data]
//! synthetic = { dim = 50, samples = 2000, sparsity = 0.1, seed = 7 }
//! # or: path = "train.svm", max_n = 5000, max_d = 784
//!
//! [[solvers]]
//! algorithm = "mbspa"          # mbspa | vrspa | vrspa2 | baseline
//! gradient_calls = 2_000_000   # or budget = <iterations>
//! trace_every = 50
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nsprox_core::applications::SyntheticPca;
use nsprox_core::solvers::budget_for_gradient_calls;
use nsprox_core::{Algorithm, McpParams, OutputMode, Penalty, ScadParams, SolverConfig};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverSpec>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticPca>,
    pub max_n: Option<usize>,
    pub max_d: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPoint {
    /// `1/sqrt(d)` in every coordinate, projected onto the constraint.
    #[default]
    Uniform,
    /// The origin projected onto the constraint.
    Origin,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    Pca {
        data: DataSpec,
        /// Defaults to MCP with `kappa = 1/d`, `nu = 1`.
        regularizer: Option<Penalty>,
        #[serde(default)]
        start: StartPoint,
    },
    Fair {
        data: DataSpec,
        sensitive_index: usize,
        c: f64,
        g1: McpParams,
        g2: ScadParams,
        /// Label mapped to `+1`; every other label becomes `-1`. Without it the
        /// labels must already be `+-1`.
        positive_label: Option<f64>,
        #[serde(default)]
        start: StartPoint,
    },
    Portfolio {
        data: DataSpec,
        psi1: f64,
        psi2: f64,
        #[serde(default = "zero_penalty")]
        regularizer: Penalty,
        #[serde(default)]
        start: StartPoint,
    },
}

fn zero_penalty() -> Penalty {
    Penalty::Zero
}

impl ProblemSpec {
    pub fn data(&self) -> &DataSpec {
        match self {
            ProblemSpec::Pca { data, .. } | ProblemSpec::Fair { data, .. } | ProblemSpec::Portfolio { data, .. } => {
                data
            }
        }
    }

    pub fn start(&self) -> StartPoint {
        match self {
            ProblemSpec::Pca { start, .. } | ProblemSpec::Fair { start, .. } | ProblemSpec::Portfolio { start, .. } => {
                *start
            }
        }
    }
}

/// One solver entry; unset fields take the solver defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub algorithm: Algorithm,
    /// File-name stem for this solver's traces; defaults to the algorithm name.
    pub name: Option<String>,
    /// Iteration budget `N`.
    pub budget: Option<u64>,
    /// Gradient-call budget, converted to the largest `N` that fits.
    pub gradient_calls: Option<u64>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub trace_every: Option<u64>,
    pub snapshot_cache_limit: Option<usize>,
}

impl SolverSpec {
    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.algorithm.name().to_string())
    }

    /// Trace-mode solver configuration for `seed`; `n` is the component count
    /// when the problem is a finite sum.
    pub fn solver_config(&self, seed: u64, n: Option<usize>) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(self.algorithm, 1).with_seed(seed).with_mode(OutputMode::Trace);
        if let Some(v) = self.theta {
            c.theta = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.tau {
            c.tau = v;
        }
        if let Some(v) = self.trace_every {
            c.trace_every = v;
        }
        if let Some(v) = self.snapshot_cache_limit {
            c.snapshot_cache_limit = v;
        }
        c.budget = match (self.budget, self.gradient_calls) {
            (Some(b), None) => b,
            (None, Some(calls)) => budget_for_gradient_calls(self.algorithm, c.alpha, n, calls)
                .with_context(|| format!("solver {}: gradient-call budget", self.name()))?,
            _ => bail!("solver {}: set exactly one of `budget` and `gradient_calls`", self.name()),
        };
        if c.budget == 0 {
            bail!("solver {}: budget too small for a single iteration", self.name());
        }
        Ok(c)
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: BenchmarkConfig = toml::from_str(text).context("invalid benchmark config")?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a relative `output_dir` or dataset path is taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        let data = match &mut config.problem {
            ProblemSpec::Pca { data, .. } | ProblemSpec::Fair { data, .. } | ProblemSpec::Portfolio { data, .. } => {
                data
            }
        };
        if let Some(p) = data.path.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            bail!("at least one solver is required");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        let data = self.problem.data();
        match (&data.path, &data.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => bail!("problem data needs exactly one of `path` and `synthetic`"),
        }
        if data.synthetic.is_some() && !matches!(self.problem, ProblemSpec::Pca { .. }) {
            bail!("synthetic data is only available for the pca problem");
        }
        let mut names: Vec<String> = self.solvers.iter().map(SolverSpec::name).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            bail!("duplicate solver name {:?}; set `name` to tell them apart", w[0]);
        }
        for s in &self.solvers {
            if s.name().is_empty() || s.name().contains(['/', '\\']) {
                bail!("solver name {:?} is not a valid file-name stem", s.name());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
output_dir = "out"
seeds = [1, 2]

[problem]
kind = "pca"
regularizer = { kind = "scad", kappa = 0.1, nu = 3.7 }

[problem.data]
synthetic = { dim = 10, samples = 100, sparsity = 0.2, seed = 3 }

[[solvers]]
algorithm = "mbspa"
gradient_calls = 100000

[[solvers]]
algorithm = "vrspa2"
budget = 50
trace_every = 5
"#;

    #[test]
    fn parses_example() {
        let c = BenchmarkConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(c.seeds, vec![1, 2]);
        assert_eq!(c.solvers.len(), 2);
        match &c.problem {
            ProblemSpec::Pca { data, regularizer, start } => {
                let syn = data.synthetic.unwrap();
                assert_eq!((syn.dim, syn.samples, syn.seed), (10, 100, 3));
                assert_eq!(syn.noise, SyntheticPca::default().noise);
                assert_eq!(*regularizer, Some(Penalty::Scad(ScadParams::new(0.1, 3.7).unwrap())));
                assert_eq!(*start, StartPoint::Uniform);
            }
            other => panic!("{other:?}"),
        }
        let sc = c.solvers[1].solver_config(9, Some(100)).unwrap();
        assert_eq!((sc.budget, sc.trace_every, sc.seed), (50, 5, 9));
        let sc = c.solvers[0].solver_config(9, Some(100)).unwrap();
        assert!(sc.budget * nsprox_core::solvers::ceil_pow(sc.budget, 2.0 / 3.0) <= 100_000);
    }

    #[test]
    fn rejects_bad_configs() {
        let no_seeds = EXAMPLE.replace("seeds = [1, 2]", "seeds = []");
        assert!(BenchmarkConfig::from_toml(&no_seeds).is_err());
        let bad_nu = EXAMPLE.replace("nu = 3.7", "nu = 1.5");
        assert!(BenchmarkConfig::from_toml(&bad_nu).is_err());
        let unknown = EXAMPLE.replace("trace_every = 5", "trace_evry = 5");
        assert!(BenchmarkConfig::from_toml(&unknown).is_err());
        let dup = EXAMPLE.replace("vrspa2", "mbspa");
        assert!(BenchmarkConfig::from_toml(&dup).is_err());
        let both = EXAMPLE.replace("budget = 50", "budget = 50\ngradient_calls = 10");
        let c = BenchmarkConfig::from_toml(&both).unwrap();
        assert!(c.solvers[1].solver_config(0, Some(100)).is_err());
    }

    #[test]
    fn fair_and_portfolio_specs() {
        let text = r#"
output_dir = "o"
seeds = [0]
[problem]
kind = "fair"
sensitive_index = 2
c = 0.1
g1 = { kappa = 0.1, nu = 2.0 }
g2 = { kappa = 0.05, nu = 3.7 }
positive_label = 1.0
data = { path = "a.svm", max_n = 10 }
[[solvers]]
algorithm = "baseline"
budget = 3
"#;
        let c = BenchmarkConfig::from_toml(text).unwrap();
        assert!(matches!(c.problem, ProblemSpec::Fair { sensitive_index: 2, .. }));
        let text = text.replace("kind = \"fair\"", "kind = \"portfolio\"\npsi1 = 2.0\npsi2 = 1.0").replace(
            "sensitive_index = 2\nc = 0.1\ng1 = { kappa = 0.1, nu = 2.0 }\ng2 = { kappa = 0.05, nu = 3.7 }\npositive_label = 1.0\n",
            "",
        );
        let c = BenchmarkConfig::from_toml(&text).unwrap();
        assert!(matches!(c.problem, ProblemSpec::Portfolio { regularizer: Penalty::Zero, .. }));
    }
}
