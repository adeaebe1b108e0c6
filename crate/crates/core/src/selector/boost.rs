//! Iterative training: heldout instances the current round gets wrong are fed
//! back into the next round's training pool.

use std::collections::BTreeSet;

use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ScalerStats;
use crate::reduce::Method;
use crate::rng::{derive_seed, derived_rng};

use super::grid::{grid_search, CvRow, ParamGrid};
use super::instance::{design_matrix, TaggedInstance};
use super::metrics::{evaluate_metrics, ClassificationReport};
use super::mlp::{mlp_train, MlpConfig};
use super::model::SelectorModel;
use super::rfe::{rfe_select, RfeParams};
use super::smote::smote_balance;
use super::tagging::TaggingParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub rounds: usize,
    pub f1_target: f64,
    pub smote_neighbors: usize,
    /// Meta-features kept by RFE (clamped to the feature count).
    pub rfe_keep: usize,
    pub rfe: RfeParams,
    pub grid: ParamGrid,
    pub folds: usize,
    pub mlp: MlpConfig,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            rounds: 3,
            f1_target: 0.95,
            smote_neighbors: 5,
            rfe_keep: 50,
            rfe: RfeParams::default(),
            grid: ParamGrid::default(),
            folds: 3,
            mlp: MlpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub pool_size: usize,
    pub balanced_size: usize,
    pub features_kept: usize,
    pub chosen: MlpConfig,
    pub cv_table: Vec<CvRow>,
    pub heldout: ClassificationReport,
    /// Heldout positions misclassified this round.
    pub misclassified: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BoostOutcome {
    pub model: SelectorModel,
    pub rounds: Vec<RoundReport>,
    /// Index into `rounds` of the returned model.
    pub best_round: usize,
}

fn train_round(
    pool: &[TaggedInstance],
    params: &BoostParams,
    tagging: &TaggingParams,
    seed: u64,
) -> Result<(SelectorModel, usize, MlpConfig, Vec<CvRow>)> {
    let (x, _) = design_matrix(pool)?;
    let scaler = ScalerStats::fit(x.view())?;
    let standardized: Vec<TaggedInstance> = pool
        .iter()
        .map(|t| {
            Ok(TaggedInstance {
                features: scaler.transform_row(&t.features)?,
                ..t.clone()
            })
        })
        .collect::<Result<_>>()?;
    let balanced = smote_balance(&standardized, params.smote_neighbors, derive_seed(seed, "smote", &[]))?;
    let (xb, yb) = design_matrix(&balanced)?;
    let n_keep = params.rfe_keep.clamp(1, xb.ncols());
    let mask = rfe_select(xb.view(), &yb, n_keep, &params.rfe)?;
    let kept: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
    let xk = xb.select(Axis(1), &kept);
    let n_classes = Method::ALL.len();
    let grid = grid_search(
        xk.view(),
        &yb,
        n_classes,
        &params.grid,
        &params.mlp,
        params.folds,
        derive_seed(seed, "grid", &[]),
    )?;
    let mlp = mlp_train(xk.view(), &yb, n_classes, &grid.best, derive_seed(seed, "mlp", &[]))?;
    let model = SelectorModel::new(scaler, mask, mlp, tagging.clone())?;
    Ok((model, balanced.len(), grid.best, grid.table))
}

/// Runs up to `params.rounds` rounds and returns the round with the best
/// heldout weighted F1 (earliest on ties).
pub fn boost_train(
    train_pool: &[TaggedInstance],
    heldout: &[TaggedInstance],
    params: &BoostParams,
    tagging: &TaggingParams,
    seed: u64,
) -> Result<BoostOutcome> {
    if train_pool.is_empty() || heldout.is_empty() {
        return Err(Error::arg("boost_train needs non-empty training and heldout pools"));
    }
    if params.rounds == 0 {
        return Err(Error::arg("rounds must be >= 1"));
    }
    let distinct: BTreeSet<Method> = train_pool.iter().map(|t| t.label).collect();
    if distinct.len() < 2 {
        return Err(Error::arg(
            "training tags contain a single method label; sample more subsets or dims",
        ));
    }
    let heldout_rows: Vec<Vec<f64>> = heldout.iter().map(|t| t.features.clone()).collect();
    let heldout_truth: Vec<usize> = heldout.iter().map(|t| t.label.index()).collect();

    let mut pool = train_pool.to_vec();
    let mut rounds = Vec::new();
    let mut models = Vec::new();
    for r in 0..params.rounds {
        let round_seed = derive_seed(seed, "boost_round", &[r as u64]);
        let (model, balanced_size, chosen, cv_table) = train_round(&pool, params, tagging, round_seed)?;
        let pred: Vec<usize> = model.predict_rows(&heldout_rows)?.into_iter().map(Method::index).collect();
        let report = evaluate_metrics(&heldout_truth, &pred)?;
        let misclassified: Vec<usize> = (0..heldout.len()).filter(|&i| pred[i] != heldout_truth[i]).collect();
        log::info!(
            "round {}: pool {}, heldout weighted F1 {:.4}, {} misclassified",
            r + 1,
            pool.len(),
            report.weighted_f1,
            misclassified.len()
        );
        let done = report.weighted_f1 >= params.f1_target;
        rounds.push(RoundReport {
            round: r + 1,
            pool_size: pool.len(),
            balanced_size,
            features_kept: model.mlp.n_inputs(),
            chosen,
            cv_table,
            heldout: report,
            misclassified: misclassified.clone(),
        });
        models.push(model);
        if done {
            break;
        }
        pool.extend(misclassified.iter().map(|&i| heldout[i].clone()));
    }
    let best_round = (0..rounds.len())
        .fold(0, |best, r| if rounds[r].heldout.weighted_f1 > rounds[best].heldout.weighted_f1 { r } else { best });
    Ok(BoostOutcome {
        model: models.swap_remove(best_round),
        rounds,
        best_round,
    })
}

/// Splits instances into (training, heldout) by whole subsets so no subset
/// contributes to both sides.
pub fn split_by_subset(
    instances: &[TaggedInstance],
    heldout_fraction: f64,
    seed: u64,
) -> Result<(Vec<TaggedInstance>, Vec<TaggedInstance>)> {
    if !(heldout_fraction > 0.0 && heldout_fraction < 1.0) {
        return Err(Error::arg("heldout_fraction must be in (0, 1)"));
    }
    let mut ids: Vec<usize> = instances
        .iter()
        .map(|t| t.provenance.subset_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if ids.len() < 2 {
        return Err(Error::arg("need instances from at least two subsets to hold some out"));
    }
    ids.shuffle(&mut derived_rng(seed, "split_by_subset", &[]));
    let n_held = ((heldout_fraction * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
    let held: BTreeSet<usize> = ids[..n_held].iter().copied().collect();
    let (h, t): (Vec<_>, Vec<_>) = instances
        .iter()
        .cloned()
        .partition(|t| held.contains(&t.provenance.subset_id));
    Ok((t, h))
}
