use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SampleMatrix;
use crate::error::{invalid, Result};

/// Generative model for synthetic sparse PCA data.
///
/// A planted direction `u` has `max(1, round(sparsity * d))` non-zero
/// coordinates, chosen uniformly, with magnitudes `|N(0,1)|` normalised to
/// unit length, so `u >= 0`. Sample `j` is `a_j u + noise * e_j` with
/// `a_j ~ N(0, signal^2)` and `e_j ~ N(0, I_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticPca {
    pub dim: usize,
    pub samples: usize,
    pub sparsity: f64,
    pub signal: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticPca {
    fn default() -> Self {
        SyntheticPca { dim: 50, samples: 2000, sparsity: 0.1, signal: 2.0, noise: 0.3, seed: 0 }
    }
}

/// Generated samples together with the planted direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub samples: SampleMatrix,
    pub planted: Array1<f64>,
}

impl SyntheticPca {
    pub fn new(dim: usize, samples: usize, sparsity: f64, seed: u64) -> Self {
        SyntheticPca { dim, samples, sparsity, seed, ..SyntheticPca::default() }
    }

    pub fn generate(&self) -> Result<SyntheticData> {
        if self.dim == 0 || self.samples == 0 {
            return invalid("synthetic data needs positive dimension and sample count");
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return invalid(format!("sparsity must lie in [0, 1], got {}", self.sparsity));
        }
        if !(self.signal >= 0.0 && self.noise >= 0.0 && self.signal.is_finite() && self.noise.is_finite()) {
            return invalid("signal and noise levels must be non-negative");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = self.dim;
        let k = ((self.sparsity * d as f64).round() as usize).clamp(1, d);
        let support = rand::seq::index::sample(&mut rng, d, k);
        let mut planted = Array1::zeros(d);
        for i in support.iter() {
            let v: f64 = StandardNormal.sample(&mut rng);
            // keep every support coordinate strictly positive
            planted[i] = v.abs().max(1e-3);
        }
        planted /= planted.dot(&planted).sqrt();
        let mut x = Array2::zeros((self.samples, d));
        for mut row in x.rows_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            let a = self.signal * g;
            for (xi, ui) in row.iter_mut().zip(planted.iter()) {
                let e: f64 = if self.noise > 0.0 { StandardNormal.sample(&mut rng) } else { 0.0 };
                *xi = a * ui + self.noise * e;
            }
        }
        Ok(SyntheticData { samples: SampleMatrix::Dense(x), planted })
    }
}

/// Synthetic PCA samples of dimension `d` with a planted non-negative sparse
/// direction; see [`SyntheticPca`] for the model.
pub fn generate_synthetic_pca(d: usize, n: usize, sparsity: f64, seed: u64) -> Result<SampleMatrix> {
    Ok(SyntheticPca::new(d, n, sparsity, seed).generate()?.samples)
}
