//! Principal component analysis through the SVD of the centered data.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted principal axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d x m`, orthonormal rows.
    pub components: Array2<f64>,
    /// Sample variance (`n - 1` denominator) along each component, descending.
    pub explained_variance: Vec<f64>,
    /// Sum of the per-column sample variances of the fit data.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.explained_variance.len()];
        }
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    /// Keeps the leading `d` components.
    pub fn truncated(&self, d: usize) -> Result<PcaModel> {
        if d == 0 || d > self.n_components() {
            return Err(Error::arg(format!(
                "cannot truncate {} components to {d}",
                self.n_components()
            )));
        }
        Ok(PcaModel {
            mean: self.mean.clone(),
            components: self.components.slice(ndarray::s![..d, ..]).to_owned(),
            explained_variance: self.explained_variance[..d].to_vec(),
            total_variance: self.total_variance,
        })
    }

    /// Projects `x` onto the components: `(x - mean) * components^T`.
    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::shape(format!(
                "PCA fitted on {} features, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        let mut centered = x.to_owned();
        for mut row in centered.rows_mut() {
            for (v, mu) in row.iter_mut().zip(&self.mean) {
                *v -= mu;
            }
        }
        Ok(centered.dot(&self.components.t()))
    }
}

/// Largest number of components `pca_fit` accepts for an `n x m` matrix.
pub fn max_components(n: usize, m: usize) -> usize {
    n.saturating_sub(1).min(m)
}

pub fn pca_fit(x: ArrayView2<f64>, d: usize) -> Result<PcaModel> {
    let (n, m) = x.dim();
    let limit = max_components(n, m);
    if d == 0 || d > limit {
        return Err(Error::arg(format!(
            "PCA target dimension {d} not in 1..={limit} for a {n}x{m} matrix"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("PCA input contains non-finite values"));
    }
    let mean = x.mean_axis(Axis(0)).unwrap();
    let centered = DMatrix::from_fn(n, m, |i, j| x[[i, j]] - mean[j]);
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;

    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("V^T requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut components = Array2::zeros((d, m));
    let mut explained_variance = Vec::with_capacity(d);
    for (r, &src) in order.iter().take(d).enumerate() {
        let row = v_t.row(src);
        // Sign convention: largest-magnitude entry positive (first on ties).
        let mut pivot = 0;
        for j in 1..m {
            if row[j].abs() > row[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..m {
            components[[r, j]] = sign * row[j];
        }
        let s = svd.singular_values[src];
        explained_variance.push(s * s / (n - 1) as f64);
    }

    Ok(PcaModel {
        mean: mean.to_vec(),
        components,
        explained_variance,
        total_variance,
    })
}
