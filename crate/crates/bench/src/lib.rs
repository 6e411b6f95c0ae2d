//! Shared fixtures for the benchmarks.

use ndarray::Array1;
use nsprox_core::{build_pca, CompositeProblem, McpParams, Penalty, SyntheticPca};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Sparse PCA on synthetic data with the default MCP penalty.
pub fn pca_problem(dim: usize, samples: usize) -> CompositeProblem {
    let data = SyntheticPca { dim, samples, ..SyntheticPca::default() }.generate().expect("valid generator settings");
    let penalty = Penalty::Mcp(McpParams::new(1.0 / dim as f64, 1.0).expect("valid parameters"));
    build_pca(data.samples, penalty).expect("non-empty data")
}

/// Reproducible standard normal vector.
pub fn gaussian_vector(dim: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array1::from_shape_fn(dim, |_| StandardNormal.sample(&mut rng))
}

/// The vector with every coordinate `1/sqrt(d)`.
pub fn uniform_start(dim: usize) -> Array1<f64> {
    Array1::from_elem(dim, 1.0 / (dim as f64).sqrt())
}
