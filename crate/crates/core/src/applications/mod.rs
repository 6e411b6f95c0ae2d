//! Problem builders for sparse non-negative PCA, fair sparse classification
//! with outlier detection, and sparse S-shaped-utility portfolios.

mod data;
mod fair;
mod losses;
mod pca;
mod portfolio;
mod synthetic;

pub use data::{SampleMatrix, SparseSamples};
pub use fair::{build_fair_classification, fairness_normal, FairClassificationOracle};
pub use losses::{exp_utility, smoothed01_loss};
pub use pca::{build_pca, pca_default_penalty, PcaOracle};
pub use portfolio::{build_portfolio, PortfolioOracle};
pub use synthetic::{generate_synthetic_pca, SyntheticData, SyntheticPca};

/// Floor for data-derived Lipschitz constants, so that all-zero data still
/// yields a valid (positive) constant.
const MIN_LIPSCHITZ: f64 = f64::EPSILON;

#[cfg(test)]
pub(crate) mod test_support {
    use ndarray::Array1;
    use rand::RngCore;

    use crate::problem::{gradient_fd_error, smoothness_ratio, CompositeProblem};

    pub fn check_gradient_fd<R: RngCore>(
        problem: &CompositeProblem,
        points: usize,
        tol: f64,
        rng: &mut R,
        mut draw: impl FnMut(&mut R, usize) -> Array1<f64>,
    ) {
        for _ in 0..points {
            let w = draw(rng, problem.dim());
            let err = gradient_fd_error(problem.smooth(), w.view(), 1e-7);
            assert!(err <= tol, "finite-difference error {err} at {w}");
        }
    }

    pub fn check_smoothness<R: RngCore>(problem: &CompositeProblem, pairs: usize, rng: &mut R) {
        let ratio = smoothness_ratio(problem, rng, pairs, 1.0);
        assert!(ratio <= 1.0 + 1e-9, "smoothness ratio {ratio}");
    }
}
