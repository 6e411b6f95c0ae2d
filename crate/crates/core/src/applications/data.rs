use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};

use crate::error::{invalid, Result};

/// Compressed sparse rows, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSamples {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSamples {
    /// Builds from per-sample `(feature, value)` lists; 0-based features.
    pub fn from_rows(dim: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            let mut row = row.clone();
            row.sort_by_key(|&(i, _)| i);
            for (i, v) in row {
                if i >= dim {
                    return invalid(format!("feature index {i} out of range for dimension {dim}"));
                }
                if !v.is_finite() {
                    return invalid("sample values must be finite");
                }
                if v != 0.0 {
                    indices.push(i);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(SparseSamples { dim, indptr, indices, values })
    }

    fn row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[j]..self.indptr[j + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// A data set of `n` samples in `R^d`, stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleMatrix {
    /// `n x d` array, row `j` is sample `j`.
    Dense(Array2<f64>),
    Sparse(SparseSamples),
}

impl SampleMatrix {
    pub fn n_samples(&self) -> usize {
        match self {
            SampleMatrix::Dense(a) => a.nrows(),
            SampleMatrix::Sparse(s) => s.indptr.len() - 1,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SampleMatrix::Dense(a) => a.ncols(),
            SampleMatrix::Sparse(s) => s.dim,
        }
    }

    /// `x_j^T w`
    pub fn dot(&self, j: usize, w: ArrayView1<f64>) -> f64 {
        match self {
            SampleMatrix::Dense(a) => a.row(j).dot(&w),
            SampleMatrix::Sparse(s) => s.row(j).map(|(i, v)| v * w[i]).sum(),
        }
    }

    /// `out += scale * x_j`
    pub fn add_scaled(&self, j: usize, scale: f64, mut out: ArrayViewMut1<f64>) {
        match self {
            SampleMatrix::Dense(a) => out.scaled_add(scale, &a.row(j)),
            SampleMatrix::Sparse(s) => {
                for (i, v) in s.row(j) {
                    out[i] += scale * v;
                }
            }
        }
    }

    pub fn norm_sq(&self, j: usize) -> f64 {
        match self {
            SampleMatrix::Dense(a) => a.row(j).dot(&a.row(j)),
            SampleMatrix::Sparse(s) => s.row(j).map(|(_, v)| v * v).sum(),
        }
    }

    pub fn sample(&self, j: usize) -> Array1<f64> {
        let mut out = Array1::zeros(self.dim());
        self.add_scaled(j, 1.0, out.view_mut());
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            SampleMatrix::Dense(a) => a.clone(),
            SampleMatrix::Sparse(s) => {
                let mut a = Array2::zeros((self.n_samples(), s.dim));
                for j in 0..self.n_samples() {
                    for (i, v) in s.row(j) {
                        a[[j, i]] = v;
                    }
                }
                a
            }
        }
    }
}
