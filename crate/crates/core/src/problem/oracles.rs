use ndarray::{Array1, ArrayView1, ArrayViewMut1, Zip};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{SampleSpace, SmoothOracle};
use crate::error::{invalid, Result};

/// Finite sum of isotropic quadratics `f_j(w) = a_j ||w||^2 / 2`.
#[derive(Debug, Clone)]
pub struct ScaledQuadratic {
    curvatures: Vec<f64>,
    mean_curvature: f64,
    dim: usize,
}

impl ScaledQuadratic {
    pub fn new(curvatures: Vec<f64>, dim: usize) -> Result<Self> {
        if curvatures.is_empty() || dim == 0 {
            return invalid("quadratic oracle needs at least one component and dimension");
        }
        let mean_curvature = curvatures.iter().sum::<f64>() / curvatures.len() as f64;
        Ok(ScaledQuadratic { curvatures, mean_curvature, dim })
    }
}

impl SmoothOracle for ScaledQuadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::FiniteSum(self.curvatures.len())
    }

    fn value(&self, w: ArrayView1<f64>) -> f64 {
        0.5 * self.mean_curvature * w.dot(&w)
    }

    fn add_component_gradient(&self, j: usize, w: ArrayView1<f64>, scale: f64, mut out: ArrayViewMut1<f64>) {
        out.scaled_add(scale * self.curvatures[j], &w);
    }
}

/// General-mode oracle: the exact gradient of a base oracle plus i.i.d.
/// Gaussian noise with standard deviation `noise_std` per coordinate, so the
/// variance bound is `dim * noise_std^2`.
#[derive(Debug, Clone)]
pub struct NoisyGradient<O> {
    base: O,
    noise_std: f64,
}

impl<O: SmoothOracle> NoisyGradient<O> {
    pub fn new(base: O, noise_std: f64) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return invalid(format!("noise level must be non-negative, got {noise_std}"));
        }
        Ok(NoisyGradient { base, noise_std })
    }

    pub fn variance_bound(&self) -> f64 {
        self.base.dim() as f64 * self.noise_std * self.noise_std
    }
}

impl<O: SmoothOracle> SmoothOracle for NoisyGradient<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::General
    }

    fn value(&self, w: ArrayView1<f64>) -> f64 {
        self.base.value(w)
    }

    fn full_gradient(&self, w: ArrayView1<f64>) -> Array1<f64> {
        self.base.full_gradient(w)
    }

    fn add_sample_gradient(&self, rng: &mut dyn RngCore, w: ArrayView1<f64>, scale: f64, mut out: ArrayViewMut1<f64>) {
        let g = self.base.full_gradient(w);
        Zip::from(&mut out).and(&g).for_each(|o, &gi| {
            let eps: f64 = StandardNormal.sample(rng);
            *o += scale * (gi + self.noise_std * eps);
        });
    }
}
