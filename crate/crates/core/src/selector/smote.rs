//! Synthetic minority oversampling by interpolation between same-class neighbours.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::reduce::Method;
use crate::rng::derived_rng;

use super::instance::TaggedInstance;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Oversamples every class up to the majority count. The originals are kept in
/// order; synthetic instances are appended class by class.
pub fn smote_balance(instances: &[TaggedInstance], k_neighbors: usize, seed: u64) -> Result<Vec<TaggedInstance>> {
    if k_neighbors == 0 {
        return Err(Error::arg("k_neighbors must be >= 1"));
    }
    if let Some(first) = instances.first() {
        let width = first.features.len();
        if instances.iter().any(|t| t.features.len() != width) {
            return Err(Error::shape("instances have differing feature widths"));
        }
    }
    let members: Vec<Vec<usize>> = Method::ALL
        .iter()
        .map(|&m| (0..instances.len()).filter(|&i| instances[i].label == m).collect())
        .collect();
    let target = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = instances.to_vec();

    for (class, idx) in members.iter().enumerate() {
        let missing = target - idx.len();
        if idx.is_empty() || missing == 0 {
            continue;
        }
        let mut rng = derived_rng(seed, "smote", &[class as u64]);
        if idx.len() == 1 {
            log::warn!(
                "class {} has a single instance; duplicating it {missing} times",
                Method::ALL[class]
            );
            for _ in 0..missing {
                let mut dup = instances[idx[0]].clone();
                dup.provenance.synthetic = true;
                dup.provenance.smote_parents = Some((idx[0], idx[0]));
                out.push(dup);
            }
            continue;
        }
        let k = k_neighbors.min(idx.len() - 1);
        let neighbours: Vec<Vec<usize>> = idx
            .iter()
            .map(|&i| {
                let mut others: Vec<(f64, usize)> = idx
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (squared_distance(&instances[i].features, &instances[j].features), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in 0..missing {
            let pos = rng.gen_range(0..idx.len());
            let base = idx[pos];
            let nn = neighbours[pos][rng.gen_range(0..k)];
            let u: f64 = rng.gen();
            let a = &instances[base];
            let b = &instances[nn];
            let features = a
                .features
                .iter()
                .zip(&b.features)
                .map(|(x, y)| x + u * (y - x))
                .collect();
            let mut provenance = a.provenance.clone();
            provenance.synthetic = true;
            provenance.smote_parents = Some((base, nn));
            out.push(TaggedInstance {
                features,
                label: a.label,
                provenance,
            });
        }
    }
    Ok(out)
}
