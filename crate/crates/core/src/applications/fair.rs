use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis};

use super::{smoothed01_loss, MIN_LIPSCHITZ};
use crate::error::{invalid, Result};
use crate::problem::{CompositeProblem, SampleSpace, SmoothOracle, SmoothnessInfo};
use crate::projections::{Constraint, HalfspacePair};
use crate::regularizers::{Block, McpParams, Penalty, Regularizer, ScadParams};

/// Smoothed 0-1 classification loss with per-sample outlier offsets.
///
/// The variable is `w = (v, z)` with `v` the weights over the non-sensitive
/// features and `z` one offset per sample;
/// `f_j(w) = L(y_j (v^T x_j + z_j))`.
#[derive(Debug, Clone)]
pub struct FairClassificationOracle {
    /// `n x p`, the features without the sensitive column.
    features: Array2<f64>,
    labels: Array1<f64>,
}

impl FairClassificationOracle {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    /// Length of the `v` block.
    pub fn n_weights(&self) -> usize {
        self.features.ncols()
    }

    fn augmented_norms_sq(&self) -> impl Iterator<Item = f64> + '_ {
        self.features.rows().into_iter().map(|x| x.dot(&x) + 1.0)
    }

    /// `(3/2) max_j ||[x_j, 1]||^2`, valid for every `f_j`.
    pub fn component_lipschitz(&self) -> f64 {
        1.5 * self.augmented_norms_sq().fold(0.0, f64::max)
    }

    /// `(3/2n) sum_j ||[x_j, 1]||^2`, valid for the average `f`.
    pub fn full_lipschitz(&self) -> f64 {
        1.5 * self.augmented_norms_sq().sum::<f64>() / self.n_samples() as f64
    }

    fn margin(&self, j: usize, w: ArrayView1<f64>) -> f64 {
        let p = self.n_weights();
        self.labels[j] * (self.features.row(j).dot(&w.slice(s![..p])) + w[p + j])
    }
}

impl SmoothOracle for FairClassificationOracle {
    fn dim(&self) -> usize {
        self.n_weights() + self.n_samples()
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::FiniteSum(self.n_samples())
    }

    fn value(&self, w: ArrayView1<f64>) -> f64 {
        let n = self.n_samples();
        (0..n).map(|j| smoothed01_loss(self.margin(j, w)).0).sum::<f64>() / n as f64
    }

    fn add_component_gradient(&self, j: usize, w: ArrayView1<f64>, scale: f64, mut out: ArrayViewMut1<f64>) {
        let (_, dl) = smoothed01_loss(self.margin(j, w));
        if dl == 0.0 {
            return;
        }
        let c = scale * dl * self.labels[j];
        let p = self.n_weights();
        out.slice_mut(s![..p]).scaled_add(c, &self.features.row(j));
        out[p + j] += c;
    }
}

/// `x_hat = (1/n) sum_j (x_a^j - mean(x_a)) x_{-a}^j` for an `n x d'`
/// feature matrix and sensitive column `a`.
pub fn fairness_normal(features: ArrayView2<f64>, sensitive_index: usize) -> Result<Array1<f64>> {
    let (n, d) = features.dim();
    if n == 0 || sensitive_index >= d {
        return invalid(format!("sensitive index {sensitive_index} out of range for {n} x {d} features"));
    }
    let rest = without_column(features, sensitive_index);
    let xa = features.column(sensitive_index);
    let mean = xa.sum() / n as f64;
    let centred = xa.mapv(|v| v - mean);
    Ok(rest.t().dot(&centred) / n as f64)
}

fn without_column(features: ArrayView2<f64>, index: usize) -> Array2<f64> {
    let keep: Vec<usize> = (0..features.ncols()).filter(|&i| i != index).collect();
    features.select(Axis(1), &keep)
}

/// Fair sparse classification with outlier detection.
///
/// `features` is `n x d'` with one sample per row, `labels` are `+-1`.
/// The variable is `(v, z)` with `v` of length `d' - 1`; `g` is MCP on `v`
/// and SCAD on `z`; `h` bounds `|x_hat^T v| <= c`. When `x_hat` vanishes the
/// constraint is vacuous and the problem is left unconstrained.
pub fn build_fair_classification(
    features: ArrayView2<f64>,
    labels: ArrayView1<f64>,
    sensitive_index: usize,
    c: f64,
    g1: McpParams,
    g2: ScadParams,
) -> Result<CompositeProblem> {
    let (n, _) = features.dim();
    if n == 0 {
        return invalid("classification data must contain at least one sample");
    }
    if labels.len() != n {
        return invalid(format!("{} labels for {n} samples", labels.len()));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return invalid("labels must be +1 or -1");
    }
    if !(c > 0.0 && c.is_finite()) {
        return invalid(format!("covariance cap must be positive, got {c}"));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return invalid("features must be finite");
    }
    let x_hat = fairness_normal(features, sensitive_index)?;
    let oracle =
        FairClassificationOracle { features: without_column(features, sensitive_index), labels: labels.to_owned() };
    let p = oracle.n_weights();
    let dim = oracle.dim();
    let constraint = if x_hat.iter().all(|&v| v == 0.0) {
        log::warn!("sensitive attribute is uncorrelated with the features; fairness constraint dropped");
        Constraint::Free
    } else {
        Constraint::HalfspacePair(HalfspacePair::with_offset(x_hat, c, 0)?)
    };
    let regularizer = Regularizer::block_composite(
        dim,
        vec![
            Block { offset: 0, len: p, penalty: Penalty::Mcp(g1) },
            Block { offset: p, len: n, penalty: Penalty::Scad(g2) },
        ],
    )?;
    let lipschitz = oracle.component_lipschitz().max(MIN_LIPSCHITZ);
    CompositeProblem::new(Arc::new(oracle), regularizer, constraint, SmoothnessInfo::new(lipschitz)?)
}
