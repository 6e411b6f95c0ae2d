use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{check_dim, invalid, Result};
use crate::problem::CompositeProblem;
use crate::projections::Constraint;
use crate::regularizers::Regularizer;

/// Gradient mapping `P_gamma(w, s) = (w - proj(w - gamma s)) / gamma`.
///
/// Without a constraint this is `s` itself.
pub fn gradient_mapping(
    constraint: &Constraint,
    gamma: f64,
    w: ArrayView1<f64>,
    s: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dim(w.len(), s.len())?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return invalid(format!("gradient mapping stepsize must be positive, got {gamma}"));
    }
    if let Constraint::Free = constraint {
        return Ok(s.to_owned());
    }
    let mut step = w.to_owned();
    step.scaled_add(-gamma, &s);
    let p = constraint.project(step.view())?;
    let mut out = w.to_owned();
    Zip::from(&mut out).and(&p).for_each(|o, &pi| *o = (*o - pi) / gamma);
    Ok(out)
}

/// Upper bound on `dist(0, G_gamma_bar(zeta))` at `zeta = prox(w_anchor)`.
///
/// Uses the particular subgradient `(w_anchor - zeta) / lambda` of `g` at
/// `zeta`. Oracle calls made here are not counted.
pub fn stationarity_measure(
    problem: &CompositeProblem,
    w_anchor: ArrayView1<f64>,
    lambda: f64,
    gamma_bar: f64,
) -> Result<f64> {
    check_dim(problem.dim(), w_anchor.len())?;
    let zeta = problem.regularizer().prox(lambda, w_anchor)?.zeta;
    let mut s = problem.smooth().full_gradient(zeta.view());
    Zip::from(&mut s).and(&w_anchor).and(&zeta).for_each(|si, &w, &z| *si += (w - z) / lambda);
    let p = gradient_mapping(problem.constraint(), gamma_bar, zeta.view(), s.view())?;
    Ok(p.dot(&p).sqrt())
}

/// Majorizer of `f + e_lambda g` anchored at `w_k`:
///
/// ```text
/// E(w) = f(w) + ||w||^2 / (2 lambda) - D(w_k) - zeta^T (w - w_k) / lambda
/// D(w_k) = w_k^T zeta / lambda - ||zeta||^2 / (2 lambda) - g(zeta)
/// ```
///
/// with `zeta` the proximal point of `lambda g` at `w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorizerState {
    pub anchor: Array1<f64>,
    pub zeta: Array1<f64>,
    pub lambda: f64,
    pub d_value: f64,
}

impl MajorizerState {
    pub fn new(regularizer: &Regularizer, lambda: f64, anchor: ArrayView1<f64>) -> Result<Self> {
        let zeta = regularizer.prox(lambda, anchor)?.zeta;
        let g_zeta = regularizer.value(zeta.view())?;
        let d_value = anchor.dot(&zeta) / lambda - zeta.dot(&zeta) / (2.0 * lambda) - g_zeta;
        Ok(MajorizerState { anchor: anchor.to_owned(), zeta, lambda, d_value })
    }

    /// `grad E(w) = grad f(w) + (w - zeta) / lambda`.
    pub fn gradient(&self, grad_f: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.zeta.len(), w.len())?;
        check_dim(self.zeta.len(), grad_f.len())?;
        let mut out = grad_f.to_owned();
        Zip::from(&mut out).and(&w).and(&self.zeta).for_each(|o, &wi, &z| *o += (wi - z) / self.lambda);
        Ok(out)
    }

    /// `E(w)` given `f(w)`.
    pub fn evaluate(&self, f_value: f64, w: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.zeta.len(), w.len())?;
        let diff = &w - &self.anchor;
        Ok(f_value + w.dot(&w) / (2.0 * self.lambda) - (self.d_value + self.zeta.dot(&diff) / self.lambda))
    }
}

/// Checks the step identity `w_next = w - gamma * P_gamma(w, direction)`.
pub(crate) fn check_step_identity(
    constraint: &Constraint,
    gamma: f64,
    w: ArrayView1<f64>,
    direction: ArrayView1<f64>,
    w_next: ArrayView1<f64>,
) -> Result<()> {
    let p = gradient_mapping(constraint, gamma, w, direction)?;
    let scale = w.iter().chain(w_next.iter()).fold(1.0f64, |m, x| m.max(x.abs()));
    let worst = w
        .iter()
        .zip(p.iter())
        .zip(w_next.iter())
        .map(|((&wi, &pi), &ni)| (wi - gamma * pi - ni).abs())
        .fold(0.0f64, f64::max);
    if worst > 1e-12 * scale {
        return Err(crate::error::Error::Invariant(format!(
            "projected step differs from the gradient-mapping step by {worst:e}"
        )));
    }
    Ok(())
}
