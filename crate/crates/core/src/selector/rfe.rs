//! Recursive feature elimination ranked by the weights of a linear softmax model.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::mlp::softmax_rows;

/// Settings of the linear model retrained on every elimination round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfeParams {
    pub step_fraction: f64,
    pub l2_alpha: f64,
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for RfeParams {
    fn default() -> Self {
        RfeParams {
            step_fraction: 0.1,
            l2_alpha: 0.01,
            learning_rate: 0.05,
            iterations: 300,
        }
    }
}

/// Linear softmax classifier trained full-batch with Adam from zero weights.
/// Returns the `features x classes` weight matrix.
pub fn fit_linear_softmax(x: ArrayView2<f64>, y: &[usize], n_classes: usize, params: &RfeParams) -> Array2<f64> {
    let (n, m) = x.dim();
    let mut onehot = Array2::<f64>::zeros((n, n_classes));
    for (i, &c) in y.iter().enumerate() {
        onehot[[i, c]] = 1.0;
    }
    let mut w = Array2::<f64>::zeros((m, n_classes));
    let mut b = Array1::<f64>::zeros(n_classes);
    let (mut mw, mut vw) = (w.clone(), w.clone());
    let (mut mb, mut vb) = (b.clone(), b.clone());
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    for t in 1..=params.iterations {
        let mut p = x.dot(&w) + &b;
        softmax_rows(&mut p);
        let delta = (p - &onehot) / n as f64;
        let gw = x.t().dot(&delta) + &(&w * params.l2_alpha);
        let gb = delta.sum_axis(Axis(0));
        let lr = params.learning_rate * (1.0 - f64::powi(beta2, t as i32)).sqrt() / (1.0 - f64::powi(beta1, t as i32));
        mw.zip_mut_with(&gw, |m, g| *m = beta1 * *m + (1.0 - beta1) * g);
        vw.zip_mut_with(&gw, |v, g| *v = beta2 * *v + (1.0 - beta2) * g * g);
        mb.zip_mut_with(&gb, |m, g| *m = beta1 * *m + (1.0 - beta1) * g);
        vb.zip_mut_with(&gb, |v, g| *v = beta2 * *v + (1.0 - beta2) * g * g);
        ndarray::Zip::from(&mut w).and(&mw).and(&vw).for_each(|w, m, v| *w -= lr * m / (v.sqrt() + eps));
        ndarray::Zip::from(&mut b).and(&mb).and(&vb).for_each(|b, m, v| *b -= lr * m / (v.sqrt() + eps));
    }
    w
}

/// Boolean mask with exactly `n_keep` surviving features.
pub fn rfe_select(x: ArrayView2<f64>, y: &[usize], n_keep: usize, params: &RfeParams) -> Result<Vec<bool>> {
    let m = x.ncols();
    if n_keep == 0 || n_keep > m {
        return Err(Error::arg(format!("n_keep {n_keep} must be in 1..={m}")));
    }
    if y.len() != x.nrows() {
        return Err(Error::arg(format!("{} labels for {} rows", y.len(), x.nrows())));
    }
    if !(params.step_fraction > 0.0 && params.step_fraction <= 1.0) {
        return Err(Error::arg("step_fraction must be in (0, 1]"));
    }
    let n_classes = y.iter().max().map_or(0, |&c| c + 1);
    let mut distinct = vec![false; n_classes];
    y.iter().for_each(|&c| distinct[c] = true);
    if distinct.iter().filter(|&&d| d).count() < 2 {
        return Err(Error::arg("RFE needs at least two classes"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("RFE input contains non-finite values"));
    }

    let mut surviving: Vec<usize> = (0..m).collect();
    while surviving.len() > n_keep {
        let sub = x.select(Axis(1), &surviving);
        let w = fit_linear_softmax(sub.view(), y, n_classes, params);
        let mut ranked: Vec<(f64, usize)> = w
            .rows()
            .into_iter()
            .enumerate()
            .map(|(pos, row)| (row.dot(&row).sqrt(), pos))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let step = ((params.step_fraction * surviving.len() as f64).ceil() as usize).max(1);
        let drop = step.min(surviving.len() - n_keep);
        let mut removed: Vec<usize> = ranked[..drop].iter().map(|&(_, pos)| pos).collect();
        removed.sort_unstable();
        for pos in removed.into_iter().rev() {
            surviving.remove(pos);
        }
    }
    let mut mask = vec![false; m];
    surviving.into_iter().for_each(|j| mask[j] = true);
    Ok(mask)
}
