use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayViewMut1};

use super::{exp_utility, MIN_LIPSCHITZ};
use crate::error::{invalid, Result};
use crate::problem::{CompositeProblem, SampleSpace, SmoothOracle, SmoothnessInfo};
use crate::projections::Constraint;
use crate::regularizers::{Penalty, Regularizer};

/// `f(w) = -(1/n) sum_j F(w^T r_j)` with the exponential S-shaped utility `F`.
#[derive(Debug, Clone)]
pub struct PortfolioOracle {
    /// `n x d`, row `j` is the return observation `r_j`.
    returns: Array2<f64>,
    psi1: f64,
    psi2: f64,
}

impl PortfolioOracle {
    pub fn new(returns: Array2<f64>, psi1: f64, psi2: f64) -> Result<Self> {
        if returns.nrows() == 0 || returns.ncols() == 0 {
            return invalid("portfolio returns must contain at least one observation and one asset");
        }
        if !(psi1 > 0.0 && psi2 > 0.0 && psi1.is_finite() && psi2.is_finite()) {
            return invalid(format!("utility parameters must be positive, got ({psi1}, {psi2})"));
        }
        if returns.iter().any(|v| !v.is_finite()) {
            return invalid("returns must be finite");
        }
        Ok(PortfolioOracle { returns, psi1, psi2 })
    }

    /// `max(psi1, psi2) * max_j ||r_j||^2`
    pub fn component_lipschitz(&self) -> f64 {
        let max_sq = self.returns.rows().into_iter().map(|r| r.dot(&r)).fold(0.0, f64::max);
        self.psi1.max(self.psi2) * max_sq
    }
}

impl SmoothOracle for PortfolioOracle {
    fn dim(&self) -> usize {
        self.returns.ncols()
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::FiniteSum(self.returns.nrows())
    }

    fn value(&self, w: ArrayView1<f64>) -> f64 {
        let s: f64 = self.returns.rows().into_iter().map(|r| exp_utility(r.dot(&w), self.psi1, self.psi2).0).sum();
        -s / self.returns.nrows() as f64
    }

    fn add_component_gradient(&self, j: usize, w: ArrayView1<f64>, scale: f64, mut out: ArrayViewMut1<f64>) {
        let r = self.returns.row(j);
        let (_, du) = exp_utility(r.dot(&w), self.psi1, self.psi2);
        out.scaled_add(-scale * du, &r);
    }
}

/// Long-only portfolio with budget `sum w <= 1`: minimizes the negated mean
/// utility plus `g`. The slack asset `1 - sum w` is implicit in the
/// constraint.
pub fn build_portfolio(returns: Array2<f64>, psi1: f64, psi2: f64, penalty: Penalty) -> Result<CompositeProblem> {
    let oracle = PortfolioOracle::new(returns, psi1, psi2)?;
    let d = oracle.dim();
    let lipschitz = oracle.component_lipschitz().max(MIN_LIPSCHITZ);
    CompositeProblem::new(
        Arc::new(oracle),
        Regularizer::uniform(penalty, d),
        Constraint::Simplex { augmented: true },
        SmoothnessInfo::new(lipschitz)?,
    )
}
