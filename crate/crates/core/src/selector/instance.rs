//! Labelled meta-feature vectors and their CSV form.

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::Method;

/// Where a tagged instance came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub subset_id: usize,
    pub target_dim: usize,
    /// Clustering accuracy of each method, indexed by `Method::index`.
    pub accuracies: [f64; 3],
    pub synthetic: bool,
    /// Input positions of the two originals a SMOTE sample interpolates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smote_parents: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedInstance {
    pub features: Vec<f64>,
    pub label: Method,
    pub provenance: Provenance,
}

/// Preference order when accuracies tie exactly.
pub const TIE_ORDER: [Method; 3] = [Method::Pca, Method::Umap, Method::Tsne];

/// Method with the highest accuracy; exact ties resolve PCA, then UMAP, then TSNE.
pub fn best_method(accuracies: &[f64; 3]) -> Method {
    let mut best = TIE_ORDER[0];
    for &m in &TIE_ORDER[1..] {
        if accuracies[m.index()] > accuracies[best.index()] {
            best = m;
        }
    }
    best
}

impl TaggedInstance {
    pub fn from_accuracies(features: Vec<f64>, subset_id: usize, target_dim: usize, accuracies: [f64; 3]) -> Self {
        TaggedInstance {
            features,
            label: best_method(&accuracies),
            provenance: Provenance {
                subset_id,
                target_dim,
                accuracies,
                synthetic: false,
                smote_parents: None,
            },
        }
    }
}

/// Stacks instance features into a matrix and returns label indices alongside.
pub fn design_matrix(instances: &[TaggedInstance]) -> Result<(Array2<f64>, Vec<usize>)> {
    let width = instances
        .first()
        .map(|t| t.features.len())
        .ok_or_else(|| Error::arg("no tagged instances"))?;
    let mut x = Array2::zeros((instances.len(), width));
    for (i, t) in instances.iter().enumerate() {
        if t.features.len() != width {
            return Err(Error::shape(format!(
                "instance {i} has {} features, expected {width}",
                t.features.len()
            )));
        }
        x.row_mut(i).iter_mut().zip(&t.features).for_each(|(d, s)| *d = *s);
    }
    let y = instances.iter().map(|t| t.label.index()).collect();
    Ok((x, y))
}

pub const TAGGED_FIXED_COLUMNS: [&str; 7] =
    ["subset_id", "target_dim", "acc_pca", "acc_tsne", "acc_umap", "label", "synthetic"];

/// Columns: the fixed provenance columns, then `f0, f1, ...`.
pub fn write_tagged_csv(instances: &[TaggedInstance], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let width = instances.first().map_or(0, |t| t.features.len());
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header: Vec<String> = TAGGED_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..width).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for t in instances {
        let p = &t.provenance;
        let mut rec = vec![
            p.subset_id.to_string(),
            p.target_dim.to_string(),
            p.accuracies[0].to_string(),
            p.accuracies[1].to_string(),
            p.accuracies[2].to_string(),
            t.label.to_string(),
            (p.synthetic as u8).to_string(),
        ];
        rec.extend(t.features.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub fn read_tagged_csv(path: impl AsRef<Path>) -> Result<Vec<TaggedInstance>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = r.headers()?.clone();
    let fixed = TAGGED_FIXED_COLUMNS.len();
    if header.len() < fixed || header.iter().take(fixed).ne(TAGGED_FIXED_COLUMNS.iter().copied()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header starting with {}", TAGGED_FIXED_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", &header[j])))
        };
        let int = |j: usize| -> Result<usize> {
            rec[j]
                .parse::<usize>()
                .map_err(|e| bad(format!("column {}: {e}", &header[j])))
        };
        let label: Method = rec[5].parse().map_err(|_| bad(format!("unknown label {:?}", &rec[5])))?;
        let features = (fixed..rec.len()).map(num).collect::<Result<Vec<_>>>()?;
        out.push(TaggedInstance {
            features,
            label,
            provenance: Provenance {
                subset_id: int(0)?,
                target_dim: int(1)?,
                accuracies: [num(2)?, num(3)?, num(4)?],
                synthetic: int(6)? != 0,
                smote_parents: None,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_rule_prefers_pca_then_umap() {
        assert_eq!(best_method(&[1.0, 1.0, 1.0]), Method::Pca);
        assert_eq!(best_method(&[0.5, 0.9, 0.9]), Method::Umap);
        assert_eq!(best_method(&[0.5, 0.9, 0.8]), Method::Tsne);
        assert_eq!(best_method(&[0.9, 0.95, 0.9]), Method::Tsne);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tags.csv");
        let items = vec![
            TaggedInstance::from_accuracies(vec![0.25, -1.5, 3.0], 4, 2, [0.4, 0.9, 0.8]),
            TaggedInstance::from_accuracies(vec![0.1, 0.2, 0.3], 7, 300, [0.99, 0.7, 0.98]),
        ];
        write_tagged_csv(&items, &path).unwrap();
        assert_eq!(read_tagged_csv(&path).unwrap(), items);
    }

    #[test]
    fn bad_header_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tags.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert_eq!(read_tagged_csv(&path).unwrap_err().category(), "format");
    }
}
