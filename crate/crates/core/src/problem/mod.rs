//! Composite problems `Phi(w) = f(w) + g(w) + h(w)` and the smooth-part oracle.

mod evaluator;
mod oracles;

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1, ArrayViewMut1};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::projections::Constraint;
use crate::regularizers::Regularizer;

pub use evaluator::Evaluator;
pub use oracles::{NoisyGradient, ScaledQuadratic};

/// Slack used when deciding whether a point is inside the feasible set for
/// objective evaluation. Projections are exact up to rounding.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// How stochastic gradients of `f` are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSpace {
    /// `f = (1/n) sum_j f_j`; a stochastic gradient is `grad f_j` for a
    /// uniformly drawn `j`.
    FiniteSum(usize),
    /// `f = E[F(w, xi)]` with samples drawn by the oracle itself.
    General,
}

/// Oracle for the smooth part `f` of the objective.
///
/// The methods here are uncounted; solvers go through an [`Evaluator`],
/// which does the gradient-call accounting.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn sample_space(&self) -> SampleSpace;

    fn value(&self, w: ArrayView1<f64>) -> f64;

    /// Adds `scale * grad f_j(w)` to `out`. Only called in finite-sum mode.
    fn add_component_gradient(&self, j: usize, w: ArrayView1<f64>, scale: f64, out: ArrayViewMut1<f64>) {
        let _ = (j, w, scale, out);
        unimplemented!("component gradients require a finite-sum oracle")
    }

    /// Adds `scale * grad F(w, xi)` for one fresh sample `xi` to `out`.
    fn add_sample_gradient(&self, rng: &mut dyn RngCore, w: ArrayView1<f64>, scale: f64, out: ArrayViewMut1<f64>) {
        match self.sample_space() {
            SampleSpace::FiniteSum(n) => {
                let j = rng.random_range(0..n);
                self.add_component_gradient(j, w, scale, out);
            }
            SampleSpace::General => unimplemented!("general-mode oracles must draw their own samples"),
        }
    }

    /// Exact gradient of `f`. The finite-sum default averages the component
    /// gradients in index order.
    fn full_gradient(&self, w: ArrayView1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.dim());
        match self.sample_space() {
            SampleSpace::FiniteSum(n) => {
                for j in 0..n {
                    self.add_component_gradient(j, w, 1.0, out.view_mut());
                }
                out /= n as f64;
            }
            SampleSpace::General => unimplemented!("general-mode oracles must provide the exact gradient"),
        }
        out
    }

    fn component_gradient(&self, j: usize, w: ArrayView1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.dim());
        self.add_component_gradient(j, w, 1.0, out.view_mut());
        out
    }

    fn sample_gradient(&self, rng: &mut dyn RngCore, w: ArrayView1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.dim());
        self.add_sample_gradient(rng, w, 1.0, out.view_mut());
        out
    }
}

/// Smoothness metadata of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessInfo {
    /// Gradient Lipschitz constant of `f` (of every `f_j` in finite-sum mode).
    pub lipschitz: f64,
    /// Bound on `E||grad F(w, xi) - grad f(w)||^2`, when known.
    pub variance_bound: Option<f64>,
}

impl SmoothnessInfo {
    pub fn new(lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return invalid(format!("gradient Lipschitz constant must be positive, got {lipschitz}"));
        }
        Ok(SmoothnessInfo { lipschitz, variance_bound: None })
    }

    pub fn with_variance_bound(mut self, sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq >= 0.0 && sigma_sq.is_finite()) {
            return invalid(format!("variance bound must be non-negative, got {sigma_sq}"));
        }
        self.variance_bound = Some(sigma_sq);
        Ok(self)
    }
}

/// Gradient-call and proximal-operation counts of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    /// Gradient calls in the complexity convention: one per stochastic
    /// gradient, `n` per full gradient, and one per sampled index of a
    /// variance-reduced difference.
    pub gradient_calls: u64,
    pub prox_g_calls: u64,
    pub prox_h_calls: u64,
    /// Component/sample gradient evaluations actually performed.
    pub raw_gradient_evals: u64,
}

impl OpCounters {
    pub fn prox_calls(&self) -> u64 {
        self.prox_g_calls + self.prox_h_calls
    }
}

/// The triple `(f, g, h)` together with the smoothness of `f`.
#[derive(Clone)]
pub struct CompositeProblem {
    smooth: Arc<dyn SmoothOracle>,
    regularizer: Regularizer,
    constraint: Constraint,
    smoothness: SmoothnessInfo,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("sample_space", &self.smooth.sample_space())
            .field("regularizer", &self.regularizer)
            .field("constraint", &self.constraint)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(
        smooth: Arc<dyn SmoothOracle>,
        regularizer: Regularizer,
        constraint: Constraint,
        smoothness: SmoothnessInfo,
    ) -> Result<Self> {
        let d = smooth.dim();
        if d == 0 {
            return invalid("problem dimension must be positive");
        }
        check_dim(d, regularizer.dim())?;
        if !constraint.accepts_dim(d) {
            return invalid(format!("constraint does not act on dimension {d}"));
        }
        if let SampleSpace::FiniteSum(0) = smooth.sample_space() {
            return invalid("finite-sum oracle needs at least one component");
        }
        // re-validate in case the caller built the struct literally
        let smoothness = match smoothness.variance_bound {
            Some(v) => SmoothnessInfo::new(smoothness.lipschitz)?.with_variance_bound(v)?,
            None => SmoothnessInfo::new(smoothness.lipschitz)?,
        };
        Ok(CompositeProblem { smooth, regularizer, constraint, smoothness })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn smooth(&self) -> &dyn SmoothOracle {
        self.smooth.as_ref()
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn smoothness(&self) -> SmoothnessInfo {
        self.smoothness
    }

    pub fn lipschitz(&self) -> f64 {
        self.smoothness.lipschitz
    }

    pub fn sample_space(&self) -> SampleSpace {
        self.smooth.sample_space()
    }

    /// `Phi(w) = f(w) + g(w)` on the feasible set, `+inf` outside it.
    pub fn evaluate_phi(&self, w: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        if !self.constraint.is_feasible(w, FEASIBILITY_TOL) {
            return Ok(f64::INFINITY);
        }
        Ok(self.smooth.value(w) + self.regularizer.value_unchecked(w))
    }

    /// `f(w) + e_lambda g(w) + h(w)`, the objective with `g` replaced by its
    /// Moreau envelope.
    pub fn evaluate_smoothed_phi(&self, lambda: f64, w: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        let envelope = self.regularizer.moreau_envelope(lambda, w)?;
        if !self.constraint.is_feasible(w, FEASIBILITY_TOL) {
            return Ok(f64::INFINITY);
        }
        Ok(self.smooth.value(w) + envelope)
    }
}

pub fn evaluate_phi(problem: &CompositeProblem, w: ArrayView1<f64>) -> Result<f64> {
    problem.evaluate_phi(w)
}

/// Largest observed `||grad f(w) - grad f(x)|| / (L ||w - x||)` over `pairs`
/// random pairs in the box `[-radius, radius]^d`. In finite-sum mode each pair
/// also checks one uniformly drawn component. Values `<= 1` are consistent
/// with the declared constant.
pub fn smoothness_ratio(problem: &CompositeProblem, rng: &mut dyn RngCore, pairs: usize, radius: f64) -> f64 {
    let d = problem.dim();
    let l = problem.lipschitz();
    let oracle = problem.smooth();
    let mut worst = 0.0f64;
    let draw = |rng: &mut dyn RngCore| Array1::from_shape_fn(d, |_| rng.random_range(-radius..=radius));
    for _ in 0..pairs {
        let w = draw(rng);
        let x = draw(rng);
        let dw = &w - &x;
        let dist = dw.dot(&dw).sqrt();
        if dist == 0.0 {
            continue;
        }
        let dg = oracle.full_gradient(w.view()) - oracle.full_gradient(x.view());
        worst = worst.max(dg.dot(&dg).sqrt() / (l * dist));
        if let SampleSpace::FiniteSum(n) = oracle.sample_space() {
            let j = rng.random_range(0..n);
            let dg = oracle.component_gradient(j, w.view()) - oracle.component_gradient(j, x.view());
            worst = worst.max(dg.dot(&dg).sqrt() / (l * dist));
        }
    }
    worst
}

/// Relative error `||grad f(w) - fd|| / ||grad f(w)||` of the exact gradient
/// against central differences with step `h`.
pub fn gradient_fd_error(oracle: &dyn SmoothOracle, w: ArrayView1<f64>, h: f64) -> f64 {
    let g = oracle.full_gradient(w);
    let mut x = w.to_owned();
    let mut err_sq = 0.0;
    for i in 0..w.len() {
        let wi = x[i];
        x[i] = wi + h;
        let up = oracle.value(x.view());
        x[i] = wi - h;
        let down = oracle.value(x.view());
        x[i] = wi;
        let fd = (up - down) / (2.0 * h);
        err_sq += (g[i] - fd).powi(2);
    }
    let norm = g.dot(&g).sqrt();
    if norm == 0.0 {
        err_sq.sqrt()
    } else {
        err_sq.sqrt() / norm
    }
}
