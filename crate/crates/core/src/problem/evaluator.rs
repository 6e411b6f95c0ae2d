use ndarray::{Array1, ArrayView1};
use rand::RngCore;

use super::{CompositeProblem, OpCounters, SampleSpace};
use crate::error::{check_dim, invalid, Error, Result};
use crate::regularizers::ProxResult;

/// Counted access to a problem's oracles for the duration of one run.
///
/// Every gradient call and proximal operation made by a solver goes through
/// here; diagnostics that should stay out of the complexity counts use the
/// problem directly.
pub struct Evaluator<'a> {
    problem: &'a CompositeProblem,
    counters: OpCounters,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a CompositeProblem) -> Self {
        Evaluator { problem, counters: OpCounters::default() }
    }

    pub fn problem(&self) -> &'a CompositeProblem {
        self.problem
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    fn finite_sum(&self, what: &str) -> Result<usize> {
        match self.problem.sample_space() {
            SampleSpace::FiniteSum(n) => Ok(n),
            SampleSpace::General => Err(Error::UnsupportedAlgorithm {
                algorithm: what.to_string(),
                reason: "requires a finite-sum oracle".to_string(),
            }),
        }
    }

    /// Full gradient of a finite-sum objective; costs `n` gradient calls.
    pub fn full_gradient(&mut self, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        let n = self.finite_sum("full gradient")?;
        check_dim(self.problem.dim(), w.len())?;
        self.record_gradients(n as u64, n as u64);
        Ok(self.problem.smooth().full_gradient(w))
    }

    pub fn component_gradient(&mut self, j: usize, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        let n = self.finite_sum("component gradient")?;
        check_dim(self.problem.dim(), w.len())?;
        if j >= n {
            return invalid(format!("component index {j} out of range for n = {n}"));
        }
        self.record_gradients(1, 1);
        Ok(self.problem.smooth().component_gradient(j, w))
    }

    pub fn sample_gradient(&mut self, rng: &mut dyn RngCore, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.problem.dim(), w.len())?;
        self.record_gradients(1, 1);
        Ok(self.problem.smooth().sample_gradient(rng, w))
    }

    /// Mean of `m` independent stochastic gradients (indices drawn with
    /// replacement in finite-sum mode).
    pub fn minibatch_gradient(&mut self, rng: &mut dyn RngCore, w: ArrayView1<f64>, m: usize) -> Result<Array1<f64>> {
        if m == 0 {
            return invalid("minibatch size must be at least 1");
        }
        check_dim(self.problem.dim(), w.len())?;
        let oracle = self.problem.smooth();
        let mut out = Array1::zeros(self.problem.dim());
        for _ in 0..m {
            oracle.add_sample_gradient(rng, w, 1.0, out.view_mut());
        }
        out /= m as f64;
        self.record_gradients(m as u64, m as u64);
        Ok(out)
    }

    /// Records gradient work done outside the helpers above. `reported`
    /// follows the complexity convention, `raw` counts evaluations.
    pub fn record_gradients(&mut self, reported: u64, raw: u64) {
        self.counters.gradient_calls += reported;
        self.counters.raw_gradient_evals += raw;
    }

    pub fn prox_g(&mut self, lambda: f64, w: ArrayView1<f64>) -> Result<ProxResult> {
        let r = self.problem.regularizer().prox(lambda, w)?;
        self.counters.prox_g_calls += 1;
        Ok(r)
    }

    pub fn project(&mut self, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.problem.dim(), w.len())?;
        let p = self.problem.constraint().project(w)?;
        self.counters.prox_h_calls += 1;
        Ok(p)
    }
}
