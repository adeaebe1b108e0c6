//! The trained selector: scaler, feature mask and MLP, persisted as JSON.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::GroundTruthDataset;
use crate::error::{Error, Result};
use crate::features::ScalerStats;
use crate::reduce::{Method, ReductionSpec};

use super::mlp::MlpModel;
use super::tagging::{meta_features, TaggingParams};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorModel {
    pub format_version: u32,
    /// k-mer length the meta-features were built with.
    pub k: usize,
    pub label_order: Vec<Method>,
    pub scaler: ScalerStats,
    pub rfe_mask: Vec<bool>,
    pub mlp: MlpModel,
    /// Reduction settings handed out with every selected spec.
    pub tagging: TaggingParams,
}

impl SelectorModel {
    pub fn new(scaler: ScalerStats, rfe_mask: Vec<bool>, mlp: MlpModel, tagging: TaggingParams) -> Result<Self> {
        let model = SelectorModel {
            format_version: FORMAT_VERSION,
            k: tagging.k,
            label_order: Method::ALL.to_vec(),
            scaler,
            rfe_mask,
            mlp,
            tagging,
        };
        model.check()?;
        Ok(model)
    }

    pub fn check(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported selector format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.label_order != Method::ALL {
            return Err(Error::Serialization("label_order must be [PCA, TSNE, UMAP]".into()));
        }
        if self.scaler.mean.len() != self.rfe_mask.len() {
            return Err(Error::shape(format!(
                "scaler covers {} features, mask {}",
                self.scaler.mean.len(),
                self.rfe_mask.len()
            )));
        }
        let kept = self.rfe_mask.iter().filter(|&&k| k).count();
        if kept != self.mlp.n_inputs() {
            return Err(Error::shape(format!(
                "mask keeps {kept} features but the MLP takes {}",
                self.mlp.n_inputs()
            )));
        }
        if self.mlp.n_outputs() != Method::ALL.len() {
            return Err(Error::shape("MLP must have one output per method"));
        }
        self.mlp.check_shapes()
    }

    /// Standardizes and masks raw meta-feature rows into MLP inputs.
    pub fn prepare(&self, rows: &[Vec<f64>]) -> Result<Array2<f64>> {
        let kept: Vec<usize> = (0..self.rfe_mask.len()).filter(|&j| self.rfe_mask[j]).collect();
        let mut x = Array2::zeros((rows.len(), kept.len()));
        for (i, row) in rows.iter().enumerate() {
            let z = self.scaler.transform_row(row)?;
            for (c, &j) in kept.iter().enumerate() {
                x[[i, c]] = z[j];
            }
        }
        Ok(x)
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Method>> {
        let x = self.prepare(rows)?;
        let (labels, _) = self.mlp.predict(x.view())?;
        Ok(labels
            .into_iter()
            .map(|l| Method::from_index(l).expect("three outputs"))
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let probe: serde_json::Value = serde_json::from_str(&text)?;
        match probe.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            other => {
                return Err(Error::Serialization(format!(
                    "{}: unsupported selector format_version {other:?}",
                    path.display()
                )))
            }
        }
        let model: SelectorModel = serde_json::from_str(&text)?;
        model.check()?;
        Ok(model)
    }
}

/// Picks a reduction method for `subset` at `target_dim`.
pub fn select_method(model: &SelectorModel, subset: &GroundTruthDataset, target_dim: usize) -> Result<ReductionSpec> {
    let features = meta_features(subset, target_dim, model.k)?;
    let method = model.predict_rows(&[features])?[0];
    Ok(model.tagging.spec(method, target_dim, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, NoiseModel};
    use crate::rng::rng_from_seed;
    use crate::selector::boost::{boost_train, BoostParams};
    use crate::selector::grid::ParamGrid;
    use crate::selector::instance::TaggedInstance;
    use crate::selector::mlp::MlpConfig;
    use rand::Rng;

    fn trained() -> (SelectorModel, GroundTruthDataset) {
        let tagging = TaggingParams {
            k: 2,
            ..Default::default()
        };
        let mut tags = Vec::new();
        let mut probe = None;
        for s in 0..8 {
            let (_, ds) = generate_synthetic(3, 4, 30, &NoiseModel { seed: s, ..Default::default() }).unwrap();
            for &(d, acc) in &[(2, [0.5, 0.9, 0.8]), (3, [0.5, 0.9, 0.8]), (300, [0.95, 0.6, 0.9]), (500, [0.95, 0.6, 0.9])] {
                tags.push(TaggedInstance::from_accuracies(meta_features(&ds, d, 2).unwrap(), s as usize, d, acc));
            }
            probe = Some(ds);
        }
        let params = BoostParams {
            rounds: 1,
            rfe_keep: 5,
            grid: ParamGrid::single(&MlpConfig {
                hidden_layers: vec![8],
                learning_rate: 0.01,
                ..Default::default()
            }),
            mlp: MlpConfig {
                max_epochs: 500,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = boost_train(&tags[..24], &tags[24..], &params, &tagging, 1).unwrap();
        (out.model, probe.unwrap())
    }

    #[test]
    fn selection_follows_training_rule() {
        let (model, ds) = trained();
        let spec = select_method(&model, &ds, 2).unwrap();
        assert_eq!(spec.method, Method::Tsne);
        assert_eq!(spec.target_dim, 2);
        assert_eq!(select_method(&model, &ds, 2).unwrap(), spec);
        assert_eq!(select_method(&model, &ds, 500).unwrap().method, Method::Pca);
    }

    #[test]
    fn persistence_round_trip() {
        let (model, _) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = SelectorModel::load(&path).unwrap();
        let mut rng = rng_from_seed(3);
        let width = model.rfe_mask.len();
        let rows: Vec<Vec<f64>> = (0..100).map(|_| (0..width).map(|_| rng.gen_range(-1.0..600.0)).collect()).collect();
        assert_eq!(model.predict_rows(&rows).unwrap(), loaded.predict_rows(&rows).unwrap());

        let text = std::fs::read_to_string(&path).unwrap().replacen("\"format_version\": 1", "\"format_version\": 7", 1);
        std::fs::write(&path, text).unwrap();
        assert_eq!(SelectorModel::load(&path).unwrap_err().category(), "serialization");
    }
}
