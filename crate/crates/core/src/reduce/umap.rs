//! UMAP: exact k-nearest-neighbor graph, smooth-kNN membership strengths,
//! fuzzy union, and per-edge SGD with negative sampling on the fuzzy
//! cross-entropy.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derived_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UmapParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    /// Spectral initialization is used up to this target dimension.
    pub spectral_init_max_dim: usize,
}

impl Default for UmapParams {
    fn default() -> Self {
        UmapParams {
            n_neighbors: 15,
            min_dist: 0.1,
            spread: 1.0,
            n_epochs: 200,
            negative_sample_rate: 5,
            spectral_init_max_dim: 50,
        }
    }
}

impl UmapParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors < 2 {
            return Err(Error::arg(format!("n_neighbors must be >= 2, got {}", self.n_neighbors)));
        }
        if !(self.spread > 0.0) || !(self.min_dist >= 0.0) {
            return Err(Error::arg("UMAP needs spread > 0 and min_dist >= 0"));
        }
        if self.n_epochs == 0 {
            return Err(Error::arg("UMAP needs at least one epoch"));
        }
        Ok(())
    }
}

pub const SIGMA_TOL: f64 = 1e-3;
pub const SIGMA_MAX_STEPS: usize = 64;
const MIN_K_DIST_SCALE: f64 = 1e-3;
const GRAD_CLIP: f64 = 4.0;
const REPULSION_EPS: f64 = 1e-3;

/// Exact Euclidean k nearest neighbors of every point, self excluded, nearest
/// first (ties broken by index).
pub fn nearest_neighbors(x: ArrayView2<f64>, k: usize) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let n = x.nrows();
    let d2 = super::tsne::squared_distances(x);
    let mut indices = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| d2[[i, a]].partial_cmp(&d2[[i, b]]).unwrap().then(a.cmp(&b)));
        order.truncate(k);
        dists.push(order.iter().map(|&j| d2[[i, j]].sqrt()).collect());
        indices.push(order);
    }
    (indices, dists)
}

fn membership_sum(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists.iter().map(|&d| (-(d - rho).max(0.0) / sigma).exp()).sum()
}

/// Bisection for `sigma` with `sum_j exp(-max(0, d_j - rho) / sigma) = target`.
pub fn smooth_knn_sigma(dists: &[f64], rho: f64, target: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut mid = 1.0;
    for _ in 0..SIGMA_MAX_STEPS {
        let psum = membership_sum(dists, rho, mid);
        if (psum - target).abs() < SIGMA_TOL {
            break;
        }
        if psum > target {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { 0.5 * (lo + hi) };
        }
    }
    mid
}

/// Per-point `(rho, sigma)`; `sigma` is floored at 1e-3 of the mean
/// neighbor distance.
pub fn smooth_knn(knn_dists: &[Vec<f64>], n_neighbors: usize) -> (Vec<f64>, Vec<f64>) {
    let target = (n_neighbors as f64).log2();
    let all_mean = {
        let total: f64 = knn_dists.iter().flatten().sum();
        let count = knn_dists.iter().map(Vec::len).sum::<usize>().max(1);
        total / count as f64
    };
    let mut rhos = Vec::with_capacity(knn_dists.len());
    let mut sigmas = Vec::with_capacity(knn_dists.len());
    for d in knn_dists {
        let rho = d.first().copied().unwrap_or(0.0);
        let mut sigma = smooth_knn_sigma(d, rho, target);
        let floor = if rho > 0.0 {
            MIN_K_DIST_SCALE * d.iter().sum::<f64>() / d.len() as f64
        } else {
            MIN_K_DIST_SCALE * all_mean
        };
        if sigma < floor {
            sigma = floor;
        }
        rhos.push(rho);
        sigmas.push(sigma);
    }
    (rhos, sigmas)
}

pub fn membership_strength(d: f64, rho: f64, sigma: f64) -> f64 {
    (-(d - rho).max(0.0) / sigma).exp()
}

/// Probabilistic t-conorm combining the two directed memberships.
pub fn fuzzy_union(a_ij: f64, a_ji: f64) -> f64 {
    a_ij + a_ji - a_ij * a_ji
}

/// Symmetric weighted neighbor graph; `edges` lists both directions, sorted
/// by `(head, tail)`.
#[derive(Debug, Clone)]
pub struct UmapGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub rhos: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl UmapGraph {
    pub fn build(x: ArrayView2<f64>, params: &UmapParams) -> Result<Self> {
        params.validate()?;
        let n = x.nrows();
        if n <= params.n_neighbors {
            return Err(Error::arg(format!(
                "UMAP needs more points ({n}) than n_neighbors ({})",
                params.n_neighbors
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("UMAP input contains non-finite values"));
        }
        let (idx, dists) = nearest_neighbors(x, params.n_neighbors);
        let (rhos, sigmas) = smooth_knn(&dists, params.n_neighbors);
        let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for i in 0..n {
            for (&j, &d) in idx[i].iter().zip(&dists[i]) {
                directed.insert((i, j), membership_strength(d, rhos[i], sigmas[i]));
            }
        }
        let mut union: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(i, j), &a) in &directed {
            let b = directed.get(&(j, i)).copied().unwrap_or(0.0);
            union.insert((i, j), fuzzy_union(a, b));
            union.insert((j, i), fuzzy_union(b, a));
        }
        let max_w = union.values().copied().fold(0.0, f64::max);
        let threshold = max_w / params.n_epochs as f64;
        let edges = union
            .into_iter()
            .filter(|&(_, w)| w >= threshold && w > 0.0)
            .map(|((i, j), w)| (i, j, w))
            .collect();
        Ok(UmapGraph { n, edges, rhos, sigmas })
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for &(i, _, w) in &self.edges {
            deg[i] += w;
        }
        deg
    }
}

/// Target low-dimensional membership: 1 below `min_dist`, exponential decay
/// with scale `spread` beyond it.
pub fn membership_curve(x: f64, min_dist: f64, spread: f64) -> f64 {
    if x < min_dist {
        1.0
    } else {
        (-(x - min_dist) / spread).exp()
    }
}

pub fn smooth_curve(x: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * x.powf(2.0 * b))
}

pub const CURVE_FIT_POINTS: usize = 300;

/// Sample grid `linspace(0, 3 * spread, 300)` used for the curve fit.
pub fn curve_fit_grid(spread: f64) -> Vec<f64> {
    let hi = 3.0 * spread;
    (0..CURVE_FIT_POINTS)
        .map(|i| hi * i as f64 / (CURVE_FIT_POINTS - 1) as f64)
        .collect()
}

/// Least-squares fit of `1 / (1 + a x^(2b))` to the membership curve
/// (Levenberg-Marquardt).
pub fn fit_ab(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs = curve_fit_grid(spread);
    let ys: Vec<f64> = xs.iter().map(|&x| membership_curve(x, min_dist, spread)).collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (smooth_curve(x, a, b) - y).powi(2))
            .sum()
    };
    let (mut a, mut b) = (1.0, 1.0);
    let mut lambda = 1e-3;
    let mut cost = sse(a, b);
    for _ in 0..500 {
        // J^T J and J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let t = x.powf(2.0 * b);
            let f = 1.0 / (1.0 + a * t);
            let r = f - y;
            let df_da = -t * f * f;
            let df_db = -a * t * 2.0 * x.ln() * f * f;
            jaa += df_da * df_da;
            jab += df_da * df_db;
            jbb += df_db * df_db;
            ga += df_da * r;
            gb += df_db * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m11 * m22 - jab * jab;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let da = -(m22 * ga - jab * gb) / det;
            let db = -(m11 * gb - jab * ga) / det;
            let (na, nb) = (a + da, b + db);
            if na > 0.0 && nb > 0.0 {
                let c = sse(na, nb);
                if c < cost {
                    let rel = (cost - c) / cost.max(1e-300);
                    a = na;
                    b = nb;
                    cost = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    if rel < 1e-15 {
                        return (a, b);
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

/// Fuzzy cross-entropy of one edge with weight `w`:
/// `-w ln(phi) - (1 - w) ln(1 - phi)`, `phi = 1 / (1 + a r^(2b))`.
pub fn edge_cross_entropy(yi: &[f64], yj: &[f64], w: f64, a: f64, b: f64) -> f64 {
    let d2: f64 = yi.iter().zip(yj).map(|(p, q)| (p - q) * (p - q)).sum();
    let phi = 1.0 / (1.0 + a * d2.powf(b));
    -w * phi.ln() - (1.0 - w) * (1.0 - phi).ln()
}

/// Coefficient `c` with `grad_{y_i}(-ln phi) = c (y_i - y_j)`.
pub fn attractive_coefficient(d2: f64, a: f64, b: f64) -> f64 {
    if d2 <= 0.0 {
        return 0.0;
    }
    2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b))
}

/// Coefficient `c` with `grad_{y_i}(-ln(1 - phi)) = -c (y_i - y_j)`, with `eps`
/// added to the squared distance.
pub fn repulsive_coefficient(d2: f64, a: f64, b: f64, eps: f64) -> f64 {
    2.0 * b / ((eps + d2) * (1.0 + a * d2.powf(b)))
}

/// Gradient of [`edge_cross_entropy`] with respect to `yi`.
pub fn edge_cross_entropy_grad(yi: &[f64], yj: &[f64], w: f64, a: f64, b: f64) -> Vec<f64> {
    let d2: f64 = yi.iter().zip(yj).map(|(p, q)| (p - q) * (p - q)).sum();
    let c = w * attractive_coefficient(d2, a, b) - (1.0 - w) * repulsive_coefficient(d2, a, b, 0.0);
    yi.iter().zip(yj).map(|(p, q)| c * (p - q)).collect()
}

fn orthonormalize(v: &mut Array2<f64>) {
    let (n, q) = v.dim();
    for c in 0..q {
        for _ in 0..2 {
            for prev in 0..c {
                let dot: f64 = (0..n).map(|r| v[[r, c]] * v[[r, prev]]).sum();
                for r in 0..n {
                    v[[r, c]] -= dot * v[[r, prev]];
                }
            }
        }
        let norm: f64 = (0..n).map(|r| v[[r, c]] * v[[r, c]]).sum::<f64>().sqrt();
        if norm > 1e-300 {
            for r in 0..n {
                v[[r, c]] /= norm;
            }
        }
    }
}

const SPECTRAL_ITERS: usize = 300;

/// Eigenvectors 2..=d+1 of the normalized adjacency `D^-1/2 W D^-1/2`
/// (equivalently the smallest non-trivial eigenvectors of the symmetric
/// normalized Laplacian), by block subspace iteration on `(I + N) / 2`
/// followed by a Rayleigh-Ritz step.
pub fn spectral_embedding(graph: &UmapGraph, dim: usize, seed: u64) -> Result<Array2<f64>> {
    let n = graph.n;
    let k = dim + 1;
    if k >= n {
        return Err(Error::arg(format!("spectral init needs dim + 1 < n, got dim {dim}, n {n}")));
    }
    let q = (k + 8).min(n);
    let inv_sqrt_deg: Vec<f64> = graph
        .degrees()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let apply = |v: &Array2<f64>| -> Array2<f64> {
        let mut out = v * 0.5;
        for &(i, j, w) in &graph.edges {
            let s = 0.5 * w * inv_sqrt_deg[i] * inv_sqrt_deg[j];
            for c in 0..v.ncols() {
                out[[i, c]] += s * v[[j, c]];
            }
        }
        out
    };
    let mut rng = derived_rng(seed, "umap_spectral", &[]);
    let mut v = Array2::from_shape_fn((n, q), |_| StandardNormal.sample(&mut rng));
    orthonormalize(&mut v);
    for _ in 0..SPECTRAL_ITERS {
        v = apply(&v);
        orthonormalize(&mut v);
    }
    let sv = apply(&v);
    let h = v.t().dot(&sv);
    let h = DMatrix::from_fn(q, q, |i, j| 0.5 * (h[[i, j]] + h[[j, i]]));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut out = Array2::zeros((n, dim));
    for (c, &src) in order.iter().skip(1).take(dim).enumerate() {
        let vec = eig.eigenvectors.column(src);
        for r in 0..n {
            out[[r, c]] = (0..q).map(|t| v[[r, t]] * vec[t]).sum::<f64>();
        }
    }
    Ok(out)
}

/// Initial layout: spectral up to `spectral_init_max_dim`, uniform on
/// `[-10, 10]^d` beyond; spectral coordinates are expanded to max |x| = 10
/// plus N(0, 1e-4) jitter. Each column is then rescaled to `[0, 10]`.
pub fn initial_layout(graph: &UmapGraph, dim: usize, params: &UmapParams, seed: u64) -> Result<Array2<f64>> {
    let mut rng = derived_rng(seed, "umap_init", &[]);
    let mut y = if dim <= params.spectral_init_max_dim && dim + 1 < graph.n {
        let mut s = spectral_embedding(graph, dim, seed)?;
        let max_abs = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_abs > 0.0 {
            s *= 10.0 / max_abs;
        }
        s.iter_mut().for_each(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += 1e-4 * z;
        });
        s
    } else {
        Array2::from_shape_fn((graph.n, dim), |_| rng.gen_range(-10.0..10.0))
    };
    for mut col in y.columns_mut() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span > 0.0 {
            col.mapv_inplace(|v| 10.0 * (v - lo) / span);
        }
    }
    Ok(y)
}

#[derive(Debug, Clone)]
pub struct UmapRun {
    pub coords: Array2<f64>,
    pub a: f64,
    pub b: f64,
    pub final_cross_entropy: f64,
}

/// Cross-entropy summed over the graph edges.
pub fn graph_cross_entropy(graph: &UmapGraph, y: &Array2<f64>, a: f64, b: f64) -> f64 {
    graph
        .edges
        .iter()
        .map(|&(i, j, w)| {
            let yi = y.row(i);
            let yj = y.row(j);
            let d2: f64 = yi.iter().zip(yj).map(|(p, q)| (p - q) * (p - q)).sum();
            let phi = (1.0 / (1.0 + a * d2.powf(b))).clamp(1e-12, 1.0 - 1e-12);
            -w * phi.ln() - (1.0 - w) * (1.0 - phi).ln()
        })
        .sum()
}

/// Stochastic layout optimization over the graph edges.
pub fn optimize(graph: &UmapGraph, init: Array2<f64>, params: &UmapParams, seed: u64) -> Result<UmapRun> {
    params.validate()?;
    let (a, b) = fit_ab(params.min_dist, params.spread);
    let mut y = init;
    let n = graph.n;
    let dim = y.ncols();
    let n_epochs = params.n_epochs;
    let max_w = graph.edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let epochs_per_sample: Vec<f64> = graph
        .edges
        .iter()
        .map(|&(_, _, w)| {
            let samples = n_epochs as f64 * w / max_w;
            if samples > 0.0 {
                n_epochs as f64 / samples
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let neg_rate = params.negative_sample_rate as f64;
    let epochs_per_negative: Vec<f64> = epochs_per_sample.iter().map(|e| e / neg_rate).collect();
    let mut next_sample = epochs_per_sample.clone();
    let mut next_negative = epochs_per_negative.clone();
    let mut rng = derived_rng(seed, "umap_sgd", &[]);
    let mut current = vec![0.0; dim];
    let mut diff = vec![0.0; dim];

    for epoch in 0..n_epochs {
        let alpha = 1.0 - epoch as f64 / n_epochs as f64;
        let e = epoch as f64;
        for (idx, &(i, j, _)) in graph.edges.iter().enumerate() {
            if next_sample[idx] > e {
                continue;
            }
            current.copy_from_slice(y.row(i).as_slice().unwrap());
            let mut d2 = 0.0;
            for c in 0..dim {
                diff[c] = current[c] - y[[j, c]];
                d2 += diff[c] * diff[c];
            }
            if d2 > 0.0 {
                let coef = attractive_coefficient(d2, a, b);
                for c in 0..dim {
                    let g = (-coef * diff[c]).clamp(-GRAD_CLIP, GRAD_CLIP) * alpha;
                    current[c] += g;
                    y[[j, c]] -= g;
                }
            }
            next_sample[idx] += epochs_per_sample[idx];

            let n_neg = ((e - next_negative[idx]) / epochs_per_negative[idx]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let k = rng.gen_range(0..n);
                if k == i {
                    continue;
                }
                let mut d2 = 0.0;
                for c in 0..dim {
                    diff[c] = current[c] - y[[k, c]];
                    d2 += diff[c] * diff[c];
                }
                let coef = if d2 > 0.0 {
                    repulsive_coefficient(d2, a, b, REPULSION_EPS)
                } else {
                    0.0
                };
                for c in 0..dim {
                    let g = if coef > 0.0 {
                        (coef * diff[c]).clamp(-GRAD_CLIP, GRAD_CLIP)
                    } else {
                        GRAD_CLIP
                    };
                    current[c] += g * alpha;
                }
            }
            next_negative[idx] += n_neg as f64 * epochs_per_negative[idx];
            y.row_mut(i).as_slice_mut().unwrap().copy_from_slice(&current);
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("UMAP layout diverged to non-finite coordinates"));
    }
    let final_cross_entropy = graph_cross_entropy(graph, &y, a, b);
    Ok(UmapRun {
        coords: y,
        a,
        b,
        final_cross_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn union_algebra() {
        assert_eq!(fuzzy_union(1.0, 0.0), 1.0);
        assert_eq!(fuzzy_union(0.0, 0.0), 0.0);
        assert!((fuzzy_union(0.5, 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sigma_hits_target_with_equidistant_neighbors() {
        let rho = 0.3;
        let dists = [rho, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let target = 10f64.log2();
        let sigma = smooth_knn_sigma(&dists, rho, target);
        let residual = (membership_sum(&dists, rho, sigma) - target).abs();
        assert!(residual < 1e-3, "residual {residual}");
        // Closed form: 1 + 9 exp(-(1 - rho)/sigma) = log2(10).
        let exact = -(1.0 - rho) / ((target - 1.0) / 9.0).ln();
        assert!((sigma - exact).abs() / exact < 1e-2);
    }

    #[test]
    fn known_curve_constants() {
        let (a, b) = fit_ab(0.1, 1.0);
        assert!((a - 1.577).abs() < 0.01, "a = {a}");
        assert!((b - 0.895).abs() < 0.01, "b = {b}");
    }

    #[test]
    fn graph_is_symmetric_with_unit_interval_weights() {
        let mut rng = rng_from_seed(4);
        let x = Array2::from_shape_fn((40, 3), |_| rng.gen::<f64>());
        let params = UmapParams { n_neighbors: 5, ..Default::default() };
        let g = UmapGraph::build(x.view(), &params).unwrap();
        let map: BTreeMap<(usize, usize), f64> = g.edges.iter().map(|&(i, j, w)| ((i, j), w)).collect();
        for (&(i, j), &w) in &map {
            assert!((0.0..=1.0).contains(&w));
            assert_eq!(map.get(&(j, i)), Some(&w));
        }
        assert!(UmapGraph::build(x.slice(ndarray::s![..5, ..]), &params).is_err());
    }

    #[test]
    fn single_edge_gradient_matches_central_differences() {
        let (a, b) = fit_ab(0.1, 1.0);
        let mut rng = rng_from_seed(12);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let yi: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let yj: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w: f64 = rng.gen_range(0.05..1.0);
            let grad = edge_cross_entropy_grad(&yi, &yj, w, a, b);
            for c in 0..3 {
                let mut plus = yi.clone();
                plus[c] += h;
                let mut minus = yi.clone();
                minus[c] -= h;
                let numeric = (edge_cross_entropy(&plus, &yj, w, a, b) - edge_cross_entropy(&minus, &yj, w, a, b)) / (2.0 * h);
                worst = worst.max((numeric - grad[c]).abs() / numeric.abs().max(grad[c].abs()).max(1e-8));
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    /// Coarse-to-fine grid search for the least-squares (a, b).
    fn grid_refit(min_dist: f64, spread: f64) -> (f64, f64) {
        let xs = curve_fit_grid(spread);
        let ys: Vec<f64> = xs.iter().map(|&x| membership_curve(x, min_dist, spread)).collect();
        let sse = |a: f64, b: f64| xs.iter().zip(&ys).map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2)).sum::<f64>();
        let (mut best, mut cost) = ((1.0, 1.0), f64::INFINITY);
        let (mut a_lo, mut a_hi, mut b_lo, mut b_hi) = (0.1, 5.0, 0.2, 2.0);
        for _ in 0..4 {
            for i in 0..=60 {
                for j in 0..=60 {
                    let a = a_lo + (a_hi - a_lo) * i as f64 / 60.0;
                    let b = b_lo + (b_hi - b_lo) * j as f64 / 60.0;
                    let c = sse(a, b);
                    if c < cost {
                        cost = c;
                        best = (a, b);
                    }
                }
            }
            let (da, db) = ((a_hi - a_lo) / 15.0, (b_hi - b_lo) / 15.0);
            (a_lo, a_hi, b_lo, b_hi) = (best.0 - da, best.0 + da, best.1 - db, best.1 + db);
        }
        best
    }

    #[test]
    fn fitted_curve_matches_refit_oracle() {
        let (a, b) = fit_ab(0.1, 1.0);
        let (oa, ob) = grid_refit(0.1, 1.0);
        let worst = curve_fit_grid(1.0)
            .into_iter()
            .map(|x| (smooth_curve(x, a, b) - smooth_curve(x, oa, ob)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "max curve deviation {worst}");
    }

    #[test]
    fn sigma_residual_on_random_neighborhoods() {
        let mut rng = rng_from_seed(21);
        let k = 15;
        let target = (k as f64).log2();
        for _ in 0..50 {
            let mut d: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..3.0)).collect();
            d.sort_by(f64::total_cmp);
            let sigma = smooth_knn_sigma(&d, d[0], target);
            assert!((membership_sum(&d, d[0], sigma) - target).abs() < 1e-3);
        }
    }

    #[test]
    fn umap_is_deterministic_and_finite() {
        let mut rng = rng_from_seed(6);
        let x = Array2::from_shape_fn((30, 4), |_| rng.gen::<f64>());
        let spec = crate::reduce::ReductionSpec {
            umap: UmapParams {
                n_neighbors: 5,
                n_epochs: 60,
                ..Default::default()
            },
            ..crate::reduce::ReductionSpec::new(crate::reduce::Method::Umap, 2, 3)
        };
        let a = crate::reduce::reduce(x.view(), &spec).unwrap();
        let b = crate::reduce::reduce(x.view(), &spec).unwrap();
        assert_eq!(a.coords, b.coords);
        assert!(a.coords.iter().all(|v| v.is_finite()));
        assert_eq!(a.coords.dim(), (30, 2));
    }
}
