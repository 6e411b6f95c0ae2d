//! Stochastic proximal solvers on the Moreau-envelope majorizer.
//!
//! All solvers minimize `f + g + h` by taking projected gradient steps on
//! `E(w) = f(w) + U(w)`, a smooth majorizer of `f + e_lambda g` anchored at
//! the current iterate, whose gradient is `grad f(w) + (w - zeta(w_k)) / lambda`
//! with `zeta` the proximal point of `lambda g`.
//!
//! * [`Algorithm::Mbspa`] estimates `grad f` with a minibatch of
//!   `M = ceil(N^alpha)` samples per step and `lambda = N^-theta`.
//! * [`Algorithm::Vrspa`] works on finite sums with SVRG-style epochs: a full
//!   snapshot gradient per epoch, `m = ceil(n^alpha)` inner steps each using
//!   `b = m^2` sampled gradient differences, `lambda = (S m)^-theta` and step
//!   `1 / (6 L_lambda)`. [`Algorithm::Vrspa2`] is the same with the step
//!   `1 / L_lambda`.
//! * [`Algorithm::Baseline`] is a deterministic full-gradient comparator on
//!   the minibatch schedule.
//!
//! The convergence guarantees hold for the proximal point of an iterate
//! drawn uniformly at random; [`OutputMode::Theory`] stops there, while
//! [`OutputMode::Trace`] runs the whole budget and records a trajectory. The
//! random output index is drawn before any sampling, so a trace run reports
//! the same theory output as a theory run with the same seed.

mod baseline;
mod mapping;
mod mbspa;
mod trace;
mod vrspa;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, OpCounters};

pub use baseline::run_baseline;
pub use mapping::{gradient_mapping, stationarity_measure, MajorizerState};
pub use mbspa::run_mbspa;
pub use trace::IterationTrace;
pub use vrspa::run_vrspa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mbspa,
    Vrspa,
    Vrspa2,
    Baseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Mbspa, Algorithm::Vrspa, Algorithm::Vrspa2, Algorithm::Baseline];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mbspa => "MBSPA",
            Algorithm::Vrspa => "VRSPA",
            Algorithm::Vrspa2 => "VRSPA2",
            Algorithm::Baseline => "Baseline",
        }
    }

    /// Default `alpha`: `2/3` for the minibatch method, `1/3` for the
    /// variance-reduced ones.
    pub fn default_alpha(&self) -> f64 {
        match self {
            Algorithm::Mbspa | Algorithm::Baseline => 2.0 / 3.0,
            Algorithm::Vrspa | Algorithm::Vrspa2 => 1.0 / 3.0,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// Stop at the random output index.
    Theory,
    /// Run the whole budget and record a trace.
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Iteration budget `N`.
    pub budget: u64,
    pub theta: f64,
    pub alpha: f64,
    pub tau: f64,
    pub seed: u64,
    pub mode: OutputMode,
    pub trace_every: u64,
    /// Recheck `w_next = w - gamma * P_gamma(w, grad)` after every step.
    pub check_mapping_identity: bool,
    /// Largest `n * d` for which VRSPA caches the snapshot component
    /// gradients instead of recomputing them.
    pub snapshot_cache_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::new(Algorithm::Mbspa, 1000)
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, budget: u64) -> Self {
        SolverConfig {
            algorithm,
            budget,
            theta: 1.0 / 3.0,
            alpha: algorithm.default_alpha(),
            tau: 0.0,
            seed: 0,
            mode: OutputMode::Trace,
            trace_every: 1,
            check_mapping_identity: false,
            snapshot_cache_limit: 1 << 25,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: OutputMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_trace_every(mut self, every: u64) -> Self {
        self.trace_every = every;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget N must be positive".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::Config("trace_every must be positive".into()));
        }
        for (name, v) in [("theta", self.theta), ("alpha", self.alpha), ("tau", self.tau)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if self.tau > self.theta {
            return Err(Error::Config(format!("tau ({}) must not exceed theta ({})", self.tau, self.theta)));
        }
        if self.alpha < 0.0 {
            return Err(Error::Config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `gamma_bar = N^-tau`, the stepsize at which stationarity is measured.
    pub fn gamma_bar(&self) -> f64 {
        (self.budget as f64).powf(-self.tau)
    }

    /// Schedule of the minibatch method (also used by the baseline).
    pub fn minibatch_schedule(&self, lipschitz: f64) -> Result<MinibatchSchedule> {
        self.validate()?;
        let n = self.budget as f64;
        let lambda = n.powf(-self.theta);
        let l_lambda = lipschitz + 1.0 / lambda;
        let gamma = 1.0 / l_lambda;
        let s = MinibatchSchedule {
            batch: ceil_pow(self.budget, self.alpha),
            lambda,
            l_lambda,
            gamma,
            gamma_bar: self.gamma_bar(),
        };
        check_steps(s.lambda, s.gamma, s.gamma_bar)?;
        Ok(s)
    }

    /// Schedule of the variance-reduced methods for `n` components.
    pub fn variance_reduced_schedule(&self, lipschitz: f64, n: usize) -> Result<VarianceReducedSchedule> {
        self.validate()?;
        let inner = ceil_pow(n as u64, self.alpha);
        let epochs = self.budget.div_ceil(inner);
        let lambda = ((epochs * inner) as f64).powf(-self.theta);
        let l_lambda = lipschitz + 1.0 / lambda;
        let gamma = match self.algorithm {
            Algorithm::Vrspa => 1.0 / (6.0 * l_lambda),
            _ => 1.0 / l_lambda,
        };
        let s = VarianceReducedSchedule {
            inner,
            batch: inner * inner,
            epochs,
            lambda,
            l_lambda,
            gamma,
            gamma_bar: self.gamma_bar(),
        };
        check_steps(s.lambda, s.gamma, s.gamma_bar)?;
        Ok(s)
    }
}

fn check_steps(lambda: f64, gamma: f64, gamma_bar: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("degenerate schedule: lambda = {lambda}, gamma = {gamma}")));
    }
    if gamma_bar < gamma {
        return Err(Error::Config(format!("gamma_bar ({gamma_bar}) must be at least gamma ({gamma})")));
    }
    Ok(())
}

/// `ceil(base^exp)`, robust to powers that land a rounding error above an
/// integer (e.g. `1000^(2/3)`).
pub fn ceil_pow(base: u64, exp: f64) -> u64 {
    let p = (base as f64).powf(exp);
    let r = p.round();
    let v = if (p - r).abs() <= 1e-9 * r.max(1.0) { r } else { p.ceil() };
    (v as u64).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinibatchSchedule {
    /// Minibatch size `M`.
    pub batch: u64,
    pub lambda: f64,
    pub l_lambda: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReducedSchedule {
    /// Inner steps per epoch `m`.
    pub inner: u64,
    /// Sampled differences per inner step `b = m^2`.
    pub batch: u64,
    /// Number of epochs `S = ceil(N / m)`.
    pub epochs: u64,
    pub lambda: f64,
    pub l_lambda: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
}

/// Closed-form operation counts of a trace-mode run on a problem of
/// dimension `dim` with `n` components.
pub fn expected_counters(config: &SolverConfig, lipschitz: f64, dim: usize, n: Option<usize>) -> Result<OpCounters> {
    let nn = || n.ok_or_else(|| Error::Config(format!("{} needs the component count", config.algorithm)));
    Ok(match config.algorithm {
        Algorithm::Mbspa => {
            let s = config.minibatch_schedule(lipschitz)?;
            OpCounters {
                gradient_calls: config.budget * s.batch,
                prox_g_calls: config.budget,
                prox_h_calls: config.budget,
                raw_gradient_evals: config.budget * s.batch,
            }
        }
        Algorithm::Vrspa | Algorithm::Vrspa2 => {
            let n = nn()? as u64;
            let s = config.variance_reduced_schedule(lipschitz, n as usize)?;
            let steps = s.epochs * s.inner;
            let cached = (n as usize).saturating_mul(dim) <= config.snapshot_cache_limit;
            let differences = steps * s.batch;
            OpCounters {
                gradient_calls: s.epochs * n + differences,
                prox_g_calls: steps,
                prox_h_calls: steps,
                raw_gradient_evals: s.epochs * n + if cached { differences } else { 2 * differences },
            }
        }
        Algorithm::Baseline => {
            let n = nn()? as u64;
            OpCounters {
                gradient_calls: config.budget * n,
                prox_g_calls: config.budget + 1,
                prox_h_calls: config.budget,
                raw_gradient_evals: config.budget * n,
            }
        }
    })
}

/// Largest iteration budget `N` whose trace-mode gradient-call count does
/// not exceed `calls` (at least 1).
pub fn budget_for_gradient_calls(algorithm: Algorithm, alpha: f64, n: Option<usize>, calls: u64) -> Result<u64> {
    let need_n = || n.filter(|&n| n > 0).ok_or_else(|| Error::Config(format!("{algorithm} needs the component count")));
    Ok(match algorithm {
        Algorithm::Mbspa => {
            let cost = |big_n: u64| big_n.saturating_mul(ceil_pow(big_n, alpha));
            let (mut lo, mut hi) = (1u64, calls.max(1));
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                if cost(mid) <= calls {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            lo
        }
        Algorithm::Vrspa | Algorithm::Vrspa2 => {
            let n = need_n()? as u64;
            let m = ceil_pow(n, alpha);
            let per_epoch = n + m * m * m;
            (calls / per_epoch).max(1) * m
        }
        Algorithm::Baseline => (calls / need_n()? as u64).max(1),
    })
}

/// Index of the iterate whose proximal point is the theory output: `epoch`
/// is `R`; `inner` is `T` for the variance-reduced methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputIndex {
    pub epoch: u64,
    pub inner: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    /// Proximal point `zeta(w^R)` of the randomly indexed iterate.
    pub theory_output: Array1<f64>,
    /// The iterate `w^R` itself.
    pub theory_anchor: Array1<f64>,
    pub output_index: OutputIndex,
    pub final_iterate: Array1<f64>,
    pub counters: OpCounters,
    pub trace: Vec<IterationTrace>,
    /// Stationarity measure at the theory output with stepsize `gamma_bar`.
    pub stationarity: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
}

/// Runs the configured algorithm with a ChaCha stream seeded from
/// `config.seed`. `start` defaults to the projection of the origin.
pub fn solve(problem: &CompositeProblem, config: &SolverConfig, start: Option<&Array1<f64>>) -> Result<RunReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.algorithm {
        Algorithm::Mbspa => run_mbspa(problem, config, start, &mut rng),
        Algorithm::Vrspa | Algorithm::Vrspa2 => run_vrspa(problem, config, start, &mut rng),
        Algorithm::Baseline => run_baseline(problem, config, start),
    }
}

fn initial_point(problem: &CompositeProblem, start: Option<&Array1<f64>>) -> Result<Array1<f64>> {
    match start {
        Some(w) => {
            crate::error::check_dim(problem.dim(), w.len())?;
            Ok(w.clone())
        }
        None => problem.constraint().feasible_origin(problem.dim()),
    }
}

fn check_algorithm(config: &SolverConfig, allowed: &[Algorithm], runner: &str) -> Result<()> {
    if allowed.contains(&config.algorithm) {
        Ok(())
    } else {
        Err(Error::Config(format!("{runner} cannot run {}", config.algorithm)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minibatch_schedule_for_n_1000() {
        let s = SolverConfig::new(Algorithm::Mbspa, 1000).minibatch_schedule(2.0).unwrap();
        assert_eq!(s.batch, 100);
        assert_relative_eq!(s.lambda, 0.1, epsilon = 1e-14);
        assert_relative_eq!(s.gamma, 1.0 / 12.0, epsilon = 1e-14);
        assert_eq!(s.gamma_bar, 1.0);
    }

    #[test]
    fn variance_reduced_schedule_example() {
        let s = SolverConfig::new(Algorithm::Vrspa, 100).variance_reduced_schedule(1.0, 1000).unwrap();
        assert_eq!((s.inner, s.batch, s.epochs), (10, 100, 10));
        assert_relative_eq!(s.lambda, 100f64.powf(-1.0 / 3.0), epsilon = 1e-14);
        assert_relative_eq!(s.lambda, 0.21544, epsilon = 1e-5);
        assert_relative_eq!(s.gamma, 1.0 / (6.0 * (1.0 + 1.0 / s.lambda)), epsilon = 1e-14);
        let s2 = SolverConfig::new(Algorithm::Vrspa2, 100).variance_reduced_schedule(1.0, 1000).unwrap();
        assert_relative_eq!(s2.gamma, 6.0 * s.gamma, epsilon = 1e-14);
    }

    #[test]
    fn ceil_pow_handles_rounding() {
        assert_eq!(ceil_pow(1000, 2.0 / 3.0), 100);
        assert_eq!(ceil_pow(1000, 1.0 / 3.0), 10);
        assert_eq!(ceil_pow(125, 1.0 / 3.0), 5);
        assert_eq!(ceil_pow(100, 2.0 / 3.0), 22);
        assert_eq!(ceil_pow(2000, 1.0 / 3.0), 13);
        assert_eq!(ceil_pow(1, 2.0 / 3.0), 1);
    }

    #[test]
    fn config_errors() {
        let mut c = SolverConfig::new(Algorithm::Mbspa, 0);
        assert!(matches!(c.minibatch_schedule(1.0), Err(Error::Config(_))));
        c.budget = 10;
        c.tau = 0.5;
        assert!(matches!(c.minibatch_schedule(1.0), Err(Error::Config(_))));
        c.tau = 0.0;
        c.trace_every = 0;
        assert!(c.minibatch_schedule(1.0).is_err());
        c.trace_every = 1;
        assert!(c.minibatch_schedule(1.0).is_ok());
    }

    #[test]
    fn gradient_budgets() {
        let n = budget_for_gradient_calls(Algorithm::Mbspa, 2.0 / 3.0, None, 2_000_000).unwrap();
        assert!(n * ceil_pow(n, 2.0 / 3.0) <= 2_000_000);
        assert!((n + 1) * ceil_pow(n + 1, 2.0 / 3.0) > 2_000_000);
        let n = budget_for_gradient_calls(Algorithm::Vrspa, 1.0 / 3.0, Some(2000), 2_000_000).unwrap();
        // m = 13, one epoch costs 2000 + 13^3 = 4197 calls
        assert_eq!(n, (2_000_000 / 4197) * 13);
        assert_eq!(budget_for_gradient_calls(Algorithm::Baseline, 0.0, Some(2000), 2_000_000).unwrap(), 1000);
        assert!(budget_for_gradient_calls(Algorithm::Baseline, 0.0, None, 10).is_err());
    }
}
