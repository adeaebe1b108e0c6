//! Exact t-SNE: dense affinities, Student-t (one degree of freedom) output
//! kernel, momentum gradient descent from a scaled PCA initialization.

use ndarray::{Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::pca;
use crate::rng::derived_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneParams {
    pub perplexity: f64,
    pub n_iter: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    /// Per-coordinate adaptive gains (delta-bar-delta); `0` disables them.
    pub min_gain: f64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            n_iter: 300,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 50,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 20,
            min_gain: 0.01,
        }
    }
}

impl TsneParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.perplexity >= 1.0) {
            return Err(Error::arg(format!("perplexity must be >= 1, got {}", self.perplexity)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::arg("t-SNE learning rate must be positive"));
        }
        Ok(())
    }
}

pub const PERPLEXITY_TOL: f64 = 1e-5;
pub const PERPLEXITY_MAX_STEPS: usize = 64;

/// Pairwise squared Euclidean distances.
pub fn squared_distances(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            let s: f64 = xi.iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d[[i, j]] = s;
            d[[j, i]] = s;
        }
    }
    d
}

/// Conditional distribution `p_{j|i}` over `j != i` whose perplexity matches
/// `perplexity`, found by bisection on the Gaussian precision. Returns the
/// row (with `p_{i|i} = 0`) and the precision used.
pub fn conditional_row(sq_dist: &[f64], i: usize, perplexity: f64) -> (Vec<f64>, f64) {
    let n = sq_dist.len();
    let target = perplexity.ln();
    let d_min = sq_dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut beta = 1.0;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut row = vec![0.0; n];
    for _ in 0..PERPLEXITY_MAX_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..n {
            if j == i {
                row[j] = 0.0;
                continue;
            }
            let shifted = sq_dist[j] - d_min;
            let p = (-beta * shifted).exp();
            row[j] = p;
            sum += p;
            weighted += p * shifted;
        }
        let entropy = sum.ln() + beta * weighted / sum;
        let diff = entropy - target;
        if diff.abs() < PERPLEXITY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_infinite() { beta * 2.0 } else { 0.5 * (beta + hi) };
        } else {
            hi = beta;
            beta = if lo.is_infinite() { beta / 2.0 } else { 0.5 * (beta + lo) };
        }
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= sum);
    (row, beta)
}

/// Symmetrized joint affinities `p_ij = (p_{j|i} + p_{i|j}) / 2n`.
#[derive(Debug, Clone)]
pub struct TsneAffinities {
    pub joint: Array2<f64>,
}

impl TsneAffinities {
    pub fn compute(x: ArrayView2<f64>, perplexity: f64) -> Result<Self> {
        let n = x.nrows();
        if n < 4 {
            return Err(Error::arg(format!("t-SNE needs at least 4 points, got {n}")));
        }
        if !(perplexity >= 1.0) || perplexity >= n as f64 {
            return Err(Error::arg(format!(
                "perplexity {perplexity} must be in [1, n) with n = {n}"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("t-SNE input contains non-finite values"));
        }
        let d = squared_distances(x);
        Ok(Self::from_squared_distances(&d, perplexity))
    }

    pub fn from_squared_distances(d: &Array2<f64>, perplexity: f64) -> Self {
        let n = d.nrows();
        let mut cond = Array2::zeros((n, n));
        for i in 0..n {
            let (row, _) = conditional_row(d.row(i).as_slice().unwrap(), i, perplexity);
            cond.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
        }
        let mut joint = &cond + &cond.t();
        joint /= 2.0 * n as f64;
        TsneAffinities { joint }
    }

    pub fn n(&self) -> usize {
        self.joint.nrows()
    }
}

/// KL(P || Q) and its gradient with respect to the embedding.
///
/// `grad_i = 4 * sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j)`.
pub fn kl_and_gradient(p: &Array2<f64>, y: &Array2<f64>) -> (f64, Array2<f64>) {
    let n = y.nrows();
    let gram = y.dot(&y.t());
    let sq: Vec<f64> = (0..n).map(|i| gram[[i, i]]).collect();
    let mut w = Array2::zeros((n, n));
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d2 = (sq[i] + sq[j] - 2.0 * gram[[i, j]]).max(0.0);
                let v = 1.0 / (1.0 + d2);
                w[[i, j]] = v;
                z += v;
            }
        }
    }
    let mut kl = 0.0;
    // m_ij = (p_ij - q_ij) w_ij
    let mut m = w;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let wij = m[[i, j]];
            let q = wij / z;
            let pij = p[[i, j]];
            if pij > 0.0 {
                kl += pij * (pij / q.max(f64::MIN_POSITIVE)).ln();
            }
            m[[i, j]] = (pij - q) * wij;
        }
    }
    let row_sums = m.sum_axis(Axis(1));
    let my = m.dot(y);
    let mut grad = y.to_owned();
    for (i, mut g) in grad.rows_mut().into_iter().enumerate() {
        let s = row_sums[i];
        for (gv, mv) in g.iter_mut().zip(my.row(i)) {
            *gv = 4.0 * (s * *gv - mv);
        }
    }
    (kl, grad)
}

pub fn kl_divergence(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    kl_and_gradient(p, y).0
}

/// Scales a PCA projection so its first coordinate has standard deviation 1e-4.
pub fn pca_initialization(x: ArrayView2<f64>, target_dim: usize, seed: u64) -> Result<Array2<f64>> {
    let model = pca::pca_fit(x, target_dim)?;
    let y = model.transform(x)?;
    Ok(scale_initialization(y, seed))
}

pub fn scale_initialization(mut y: Array2<f64>, seed: u64) -> Array2<f64> {
    let col = y.column(0);
    let mean = col.sum() / col.len() as f64;
    let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
    if std > 0.0 && std.is_finite() {
        y *= 1e-4 / std;
    } else {
        let mut rng = derived_rng(seed, "tsne_init", &[]);
        y.iter_mut().for_each(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = 1e-4 * z;
        });
    }
    y
}

#[derive(Debug, Clone)]
pub struct TsneRun {
    pub coords: Array2<f64>,
    pub initial_kl: f64,
    pub kl_after_exaggeration: f64,
    pub final_kl: f64,
}

/// Gradient descent on KL(P || Q) starting from `init`.
pub fn optimize(affinities: &TsneAffinities, init: Array2<f64>, params: &TsneParams) -> Result<TsneRun> {
    params.validate()?;
    let n = affinities.n();
    if init.nrows() != n {
        return Err(Error::shape(format!("init has {} rows, expected {n}", init.nrows())));
    }
    let p = &affinities.joint;
    let mut y = init;
    let initial_kl = kl_divergence(p, &y);
    let mut kl_after_exaggeration = initial_kl;
    let mut update = Array2::<f64>::zeros(y.raw_dim());
    let mut gains = Array2::<f64>::ones(y.raw_dim());
    let exaggerated = p * params.early_exaggeration;

    for it in 0..params.n_iter {
        let p_it = if it < params.exaggeration_iters { &exaggerated } else { p };
        let momentum = if it < params.momentum_switch_iter {
            params.initial_momentum
        } else {
            params.final_momentum
        };
        let (_, grad) = kl_and_gradient(p_it, &y);
        if params.min_gain > 0.0 {
            ndarray::Zip::from(&mut gains)
                .and(&grad)
                .and(&update)
                .for_each(|g, &dg, &u| {
                    *g = if (dg > 0.0) != (u > 0.0) { *g + 0.2 } else { *g * 0.8 };
                    if *g < params.min_gain {
                        *g = params.min_gain;
                    }
                });
        }
        ndarray::Zip::from(&mut update)
            .and(&grad)
            .and(&gains)
            .for_each(|u, &dg, &g| *u = momentum * *u - params.learning_rate * g * dg);
        y += &update;
        let mean = y.mean_axis(Axis(0)).unwrap();
        y -= &mean;
        if it + 1 == params.exaggeration_iters {
            kl_after_exaggeration = kl_divergence(p, &y);
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("t-SNE diverged to non-finite coordinates"));
    }
    let final_kl = kl_divergence(p, &y);
    Ok(TsneRun {
        coords: y,
        initial_kl,
        kl_after_exaggeration,
        final_kl,
    })
}
