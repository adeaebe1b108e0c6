//! k-mer frequency featurization and per-column standardization.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{DnaRead, GroundTruthDataset};
use crate::error::{Error, Result};

/// Largest supported k-mer length (4^12 columns).
pub const MAX_K: usize = 12;

fn base_digit(b: u8) -> Option<usize> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::arg(format!("k-mer length must be in 1..={MAX_K}, got {k}")));
    }
    Ok(())
}

/// Column label of k-mer index `idx`, e.g. `kmer_name(6, 2) == "CG"`.
pub fn kmer_name(mut idx: usize, k: usize) -> String {
    let mut out = vec![b'A'; k];
    for slot in out.iter_mut().rev() {
        *slot = crate::dataset::BASES[idx % 4];
        idx /= 4;
    }
    String::from_utf8(out).unwrap()
}

fn profile_into(bases: &[u8], k: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    if bases.len() < k {
        return;
    }
    let mask = (1usize << (2 * k)) - 1;
    let mut code = 0usize;
    let windows = bases.len() - k + 1;
    for (i, &b) in bases.iter().enumerate() {
        code = ((code << 2) | base_digit(b).expect("sanitized read")) & mask;
        if i + 1 >= k {
            out[code] += 1.0;
        }
    }
    let inv = 1.0 / windows as f64;
    out.iter_mut().for_each(|v| *v *= inv);
}

/// Overlapping k-mer frequencies of a read, columns in lexicographic `A<C<G<T`
/// order. All zeros when the read is shorter than `k`.
pub fn kmer_profile(read: &DnaRead, k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let mut out = vec![0.0; 1 << (2 * k)];
    profile_into(read.bases.as_bytes(), k, &mut out);
    Ok(out)
}

/// Row-stochastic k-mer frequency matrix of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct KmerMatrix {
    pub values: Array2<f64>,
    pub k: usize,
    pub row_labels: Vec<usize>,
}

impl KmerMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    /// Writes `cluster_id,<kmer columns...>`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        let mut header = vec!["cluster_id".to_string()];
        header.extend((0..self.n_cols()).map(|j| kmer_name(j, self.k)));
        w.write_record(&header)?;
        for (row, label) in self.values.rows().into_iter().zip(&self.row_labels) {
            let mut rec = vec![label.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path.as_ref(), e))
    }
}

pub fn build_kmer_matrix(ds: &GroundTruthDataset, k: usize) -> Result<KmerMatrix> {
    check_k(k)?;
    if ds.is_empty() {
        return Err(Error::arg("cannot featurize an empty dataset"));
    }
    let m = 1usize << (2 * k);
    let mut values = Array2::zeros((ds.len(), m));
    for (mut row, read) in values.axis_iter_mut(Axis(0)).zip(ds.reads()) {
        profile_into(read.bases.as_bytes(), k, row.as_slice_mut().unwrap());
    }
    Ok(KmerMatrix {
        values,
        k,
        row_labels: ds.labels(),
    })
}

/// Column means and population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const CONSTANT_COLUMN_STD: f64 = 1e-12;

impl ScalerStats {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::arg("cannot fit a scaler on zero rows"));
        }
        let mean: Array1<f64> = x.mean_axis(Axis(0)).unwrap();
        let std = x
            .axis_iter(Axis(1))
            .zip(mean.iter())
            .map(|(col, &mu)| {
                let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / col.len() as f64;
                let s = var.sqrt();
                if s < CONSTANT_COLUMN_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(ScalerStats {
            mean: mean.to_vec(),
            std,
        })
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.mean.len() {
            return Err(Error::shape(format!(
                "scaler fitted on {} columns, matrix has {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, mu), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - mu) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, mu), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + mu;
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::shape(format!(
                "scaler fitted on {} columns, row has {}",
                self.mean.len(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, mu), s)| (v - mu) / s)
            .collect())
    }
}

pub fn fit_scaler(x: ArrayView2<f64>) -> Result<ScalerStats> {
    ScalerStats::fit(x)
}

pub fn apply_scaler(stats: &ScalerStats, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    stats.transform(x)
}
