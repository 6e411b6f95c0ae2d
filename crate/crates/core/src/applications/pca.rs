use std::sync::Arc;

use ndarray::{ArrayView1, ArrayViewMut1};

use super::{SampleMatrix, MIN_LIPSCHITZ};
use crate::error::{invalid, Result};
use crate::problem::{CompositeProblem, SampleSpace, SmoothOracle, SmoothnessInfo};
use crate::projections::Constraint;
use crate::regularizers::{McpParams, Penalty, Regularizer};

/// `f(w) = -(1/2n) sum_j (w^T x_j)^2`, with `f_j(w) = -(w^T x_j)^2 / 2`.
#[derive(Debug, Clone)]
pub struct PcaOracle {
    data: SampleMatrix,
}

impl PcaOracle {
    pub fn new(data: SampleMatrix) -> Result<Self> {
        if data.n_samples() == 0 || data.dim() == 0 {
            return invalid("PCA data must contain at least one sample and one feature");
        }
        Ok(PcaOracle { data })
    }

    pub fn data(&self) -> &SampleMatrix {
        &self.data
    }

    /// `max_j ||x_j||^2`, the gradient Lipschitz constant of every `f_j`.
    pub fn component_lipschitz(&self) -> f64 {
        (0..self.data.n_samples()).map(|j| self.data.norm_sq(j)).fold(0.0, f64::max)
    }
}

impl SmoothOracle for PcaOracle {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::FiniteSum(self.data.n_samples())
    }

    fn value(&self, w: ArrayView1<f64>) -> f64 {
        let n = self.data.n_samples();
        let s: f64 = (0..n).map(|j| self.data.dot(j, w).powi(2)).sum();
        -0.5 * s / n as f64
    }

    fn add_component_gradient(&self, j: usize, w: ArrayView1<f64>, scale: f64, out: ArrayViewMut1<f64>) {
        let u = self.data.dot(j, w);
        self.data.add_scaled(j, -scale * u, out);
    }
}

/// Regularizer used for PCA runs when none is configured: MCP with
/// `kappa = 1/d`, `nu = 1`.
pub fn pca_default_penalty(dim: usize) -> Penalty {
    Penalty::Mcp(McpParams::new(1.0 / dim.max(1) as f64, 1.0).expect("positive parameters"))
}

/// Sparse non-negative PCA: `f` as in [`PcaOracle`], `g` the given penalty
/// on every coordinate, `h` the indicator of `{w >= 0, ||w|| <= 1}`.
pub fn build_pca(data: SampleMatrix, penalty: Penalty) -> Result<CompositeProblem> {
    let oracle = PcaOracle::new(data)?;
    let d = oracle.dim();
    let lipschitz = oracle.component_lipschitz().max(MIN_LIPSCHITZ);
    CompositeProblem::new(
        Arc::new(oracle),
        Regularizer::uniform(penalty, d),
        Constraint::NonnegBall,
        SmoothnessInfo::new(lipschitz)?,
    )
}
