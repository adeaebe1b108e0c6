//! Stratified cross-validated grid search over MLP architectures.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derived_rng;

use super::metrics::evaluate_metrics;
use super::mlp::{mlp_predict, mlp_train, MlpConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamGrid {
    pub hidden_layers: Vec<Vec<usize>>,
    pub l2_alpha: Vec<f64>,
    pub learning_rate: Vec<f64>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            hidden_layers: vec![vec![50], vec![50, 50], vec![100, 100]],
            l2_alpha: vec![1e-4, 0.05],
            learning_rate: vec![0.001],
        }
    }
}

impl ParamGrid {
    pub fn single(config: &MlpConfig) -> Self {
        ParamGrid {
            hidden_layers: vec![config.hidden_layers.clone()],
            l2_alpha: vec![config.l2_alpha],
            learning_rate: vec![config.learning_rate],
        }
    }

    /// Every combination, hidden layers varying slowest.
    pub fn candidates(&self, base: &MlpConfig) -> Vec<MlpConfig> {
        let mut out = Vec::new();
        for h in &self.hidden_layers {
            for &a in &self.l2_alpha {
                for &lr in &self.learning_rate {
                    out.push(MlpConfig {
                        hidden_layers: h.clone(),
                        l2_alpha: a,
                        learning_rate: lr,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub hidden_layers: Vec<usize>,
    pub l2_alpha: f64,
    pub learning_rate: f64,
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: MlpConfig,
    pub table: Vec<CvRow>,
}

/// Fold index of every row; each class is shuffled and dealt round-robin.
pub fn stratified_folds(y: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::arg("folds must be >= 2"));
    }
    let n_classes = y.iter().max().map_or(0, |&c| c + 1);
    let mut assignment = vec![0; y.len()];
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(Error::arg(format!(
                "class {class} has {} members, fewer than {folds} folds; balance the classes (SMOTE) first",
                members.len()
            )));
        }
        members.shuffle(&mut derived_rng(seed, "stratified_folds", &[class as u64]));
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

fn size_key(c: &MlpConfig) -> (usize, usize) {
    (c.hidden_layers.iter().sum(), c.hidden_layers.len())
}

/// Picks the candidate with the best mean weighted F1; exact ties go to the
/// smaller network, then the smaller `l2_alpha`.
pub fn grid_search(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    grid: &ParamGrid,
    base: &MlpConfig,
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    let assignment = stratified_folds(y, folds, seed)?;
    let candidates = grid.candidates(base);
    if candidates.is_empty() {
        return Err(Error::arg("empty hyperparameter grid"));
    }
    let mut table = Vec::with_capacity(candidates.len());
    for (ci, cand) in candidates.iter().enumerate() {
        let mut scores = Vec::with_capacity(folds);
        for f in 0..folds {
            let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == f).collect();
            let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let y_test: Vec<usize> = test.iter().map(|&i| y[i]).collect();
            let model = mlp_train(
                x.select(Axis(0), &train).view(),
                &y_train,
                n_classes,
                cand,
                crate::rng::derive_seed(seed, "grid_search", &[ci as u64, f as u64]),
            )?;
            let (pred, _) = mlp_predict(&model, x.select(Axis(0), &test).view())?;
            scores.push(evaluate_metrics(&y_test, &pred)?.weighted_f1);
        }
        let mean_score = scores.iter().sum::<f64>() / scores.len() as f64;
        table.push(CvRow {
            hidden_layers: cand.hidden_layers.clone(),
            l2_alpha: cand.l2_alpha,
            learning_rate: cand.learning_rate,
            fold_scores: scores,
            mean_score,
        });
    }
    let best = (0..candidates.len())
        .min_by(|&a, &b| {
            table[b]
                .mean_score
                .total_cmp(&table[a].mean_score)
                .then(size_key(&candidates[a]).cmp(&size_key(&candidates[b])))
                .then(candidates[a].l2_alpha.total_cmp(&candidates[b].l2_alpha))
                .then(a.cmp(&b))
        })
        .expect("non-empty grid");
    Ok(GridResult {
        best: candidates[best].clone(),
        table,
    })
}
