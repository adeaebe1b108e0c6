//! K-means (Lloyd iterations, k-means++ seeding, restarts) and the
//! majority-label clustering accuracy.

use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KmeansInit {
    KmeansPlusPlus,
    /// `k` distinct points drawn uniformly.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmeansParams {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub init: KmeansInit,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            k: 1,
            n_init: 10,
            max_iter: 300,
            tol: 1e-4,
            seed: 0,
            init: KmeansInit::KmeansPlusPlus,
        }
    }
}

impl KmeansParams {
    pub fn with_k(k: usize, seed: u64) -> Self {
        KmeansParams {
            k,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    /// Majority label per cluster, when labels were supplied.
    pub predictor: Option<Vec<Option<usize>>>,
    /// Inertia after every Lloyd iteration of the selected restart.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row<'a>(x: &'a ArrayView2<f64>, i: usize) -> &'a [f64] {
    x.row(i).to_slice().expect("standard layout")
}

fn seed_plus_plus(x: &ArrayView2<f64>, k: usize, rng: &mut Rng) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut centroids = Array2::zeros((k, d));
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut closest: Vec<f64> = (0..n)
        .map(|i| sq_dist(row(x, i), centroids.row(0).as_slice().unwrap()))
        .collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        let cen = centroids.row(c).to_vec();
        for (i, cl) in closest.iter_mut().enumerate() {
            let d2 = sq_dist(row(x, i), &cen);
            if d2 < *cl {
                *cl = d2;
            }
        }
    }
    centroids
}

fn seed_uniform(x: &ArrayView2<f64>, k: usize, rng: &mut Rng) -> Array2<f64> {
    let idx = rand::seq::index::sample(rng, x.nrows(), k).into_vec();
    let mut centroids = Array2::zeros((k, x.ncols()));
    for (c, &i) in idx.iter().enumerate() {
        centroids.row_mut(c).assign(&x.row(i));
    }
    centroids
}

/// Assigns every point to its nearest centroid (lowest index on ties).
/// Returns assignments and the per-point squared distances.
fn assign(x: &ArrayView2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let n = x.nrows();
    let mut labels = vec![0; n];
    let mut dists = vec![0.0; n];
    let cents: Vec<&[f64]> = centroids.rows().into_iter().map(|r| r.to_slice().unwrap()).collect();
    for i in 0..n {
        let xi = row(x, i);
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (c, cen) in cents.iter().enumerate() {
            let d2 = sq_dist(xi, cen);
            if d2 < best {
                best = d2;
                arg = c;
            }
        }
        labels[i] = arg;
        dists[i] = best;
    }
    (labels, dists)
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(labels: &mut [usize], dists: &mut [f64], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &d) in dists.iter().enumerate() {
            if counts[labels[i]] > 1 && d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { return };
        labels[i] = empty;
        dists[i] = 0.0;
    }
}

fn update_centroids(x: &ArrayView2<f64>, labels: &[usize], k: usize, old: &Array2<f64>) -> Array2<f64> {
    let d = x.ncols();
    let mut sums = Array2::<f64>::zeros((k, d));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut s = sums.row_mut(l);
        s += &x.row(i);
    }
    for c in 0..k {
        if counts[c] == 0 {
            sums.row_mut(c).assign(&old.row(c));
        } else {
            let inv = 1.0 / counts[c] as f64;
            sums.row_mut(c).mapv_inplace(|v| v * inv);
        }
    }
    sums
}

/// Sum of squared distances of every point to its assigned centroid.
pub fn inertia(x: ArrayView2<f64>, assignments: &[usize], centroids: &Array2<f64>) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| x.row(i).iter().zip(centroids.row(c)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum()
}

struct Run {
    labels: Vec<usize>,
    centroids: Array2<f64>,
    inertia: f64,
    trace: Vec<f64>,
}

fn lloyd(x: &ArrayView2<f64>, params: &KmeansParams, mut centroids: Array2<f64>) -> Run {
    let k = params.k;
    let mut trace = Vec::new();
    let (mut labels, mut dists) = assign(x, &centroids);
    repair_empty(&mut labels, &mut dists, k);
    centroids = update_centroids(x, &labels, k, &centroids);
    let mut current = inertia(*x, &labels, &centroids);
    trace.push(current);
    for _ in 1..params.max_iter {
        let (mut new_labels, mut new_dists) = assign(x, &centroids);
        repair_empty(&mut new_labels, &mut new_dists, k);
        let new_centroids = update_centroids(x, &new_labels, k, &centroids);
        let next = inertia(*x, &new_labels, &new_centroids);
        if next > current {
            // Floating-point noise only; keep the better state.
            break;
        }
        let improvement = current - next;
        labels = new_labels;
        centroids = new_centroids;
        current = next;
        trace.push(current);
        if current == 0.0 || improvement <= params.tol * current {
            break;
        }
    }
    Run {
        labels,
        centroids,
        inertia: current,
        trace,
    }
}

/// Best of `n_init` Lloyd runs; restart `r` is seeded from `(seed, r)`.
pub fn kmeans(x: ArrayView2<f64>, params: &KmeansParams) -> Result<KmeansResult> {
    let n = x.nrows();
    if params.k == 0 {
        return Err(Error::arg("k must be positive"));
    }
    if params.k > n {
        return Err(Error::arg(format!("k = {} exceeds the number of points {n}", params.k)));
    }
    if params.n_init == 0 || params.max_iter == 0 {
        return Err(Error::arg("n_init and max_iter must be positive"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("K-means input contains non-finite values"));
    }
    if !x.is_standard_layout() {
        return kmeans(x.as_standard_layout().view(), params);
    }
    let mut best: Option<Run> = None;
    for r in 0..params.n_init {
        let mut rng = derived_rng(params.seed, "kmeans_restart", &[r as u64]);
        let init = match params.init {
            KmeansInit::KmeansPlusPlus => seed_plus_plus(&x, params.k, &mut rng),
            KmeansInit::Uniform => seed_uniform(&x, params.k, &mut rng),
        };
        let run = lloyd(&x, params, init);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.unwrap();
    Ok(KmeansResult {
        assignments: best.labels,
        centroids: best.centroids,
        inertia: best.inertia,
        predictor: None,
        inertia_trace: best.trace,
    })
}

/// Runs K-means and attaches the majority-label predictor.
pub fn kmeans_labeled(x: ArrayView2<f64>, labels: &[usize], params: &KmeansParams) -> Result<KmeansResult> {
    let mut res = kmeans(x, params)?;
    res.predictor = Some(majority_predictor(&res.assignments, labels, params.k)?);
    Ok(res)
}

/// Most frequent true label in every cluster (smallest label on ties,
/// `None` for empty clusters).
pub fn majority_predictor(assignments: &[usize], labels: &[usize], k: usize) -> Result<Vec<Option<usize>>> {
    if assignments.len() != labels.len() {
        return Err(Error::arg(format!(
            "{} assignments but {} labels",
            assignments.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::arg(format!("cluster index {bad} out of range for k = {k}")));
    }
    let mut tables: Vec<std::collections::BTreeMap<usize, usize>> = vec![Default::default(); k];
    for (&a, &l) in assignments.iter().zip(labels) {
        *tables[a].entry(l).or_default() += 1;
    }
    Ok(tables
        .into_iter()
        .map(|t| {
            let mut best: Option<(usize, usize)> = None;
            for (label, count) in t {
                // Ascending label iteration keeps the smallest label on ties.
                if best.is_none_or(|(_, c)| count > c) {
                    best = Some((label, count));
                }
            }
            best.map(|(l, _)| l)
        })
        .collect())
}

/// Fraction of points whose cluster's majority label equals their own label.
pub fn clustering_accuracy(assignments: &[usize], labels: &[usize], k: usize) -> Result<f64> {
    let predictor = majority_predictor(assignments, labels, k)?;
    if labels.is_empty() {
        return Ok(0.0);
    }
    let hits = assignments
        .iter()
        .zip(labels)
        .filter(|&(&a, &l)| predictor[a] == Some(l))
        .count();
    Ok(hits as f64 / labels.len() as f64)
}
