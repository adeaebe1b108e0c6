//! Read datasets in the Clustered Nanopore Reads layout.
//!
//! `Centers.txt` holds one reference strand per line. `Clusters.txt` holds
//! reads grouped into blocks separated by lines starting with `====`; block
//! `i` (in file order, empty blocks dropped) is ground-truth cluster `i`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived_rng, rng_from_seed};

pub const BASES: [u8; 4] = *b"ACGT";
pub const SEPARATOR: &str = "===============================";

/// A sequenced read over `{A,C,G,T}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnaRead {
    pub bases: String,
    pub cluster_id: Option<usize>,
}

impl DnaRead {
    pub fn new(bases: impl Into<String>, cluster_id: Option<usize>) -> Result<Self> {
        let bases = bases.into();
        if bases.is_empty() {
            return Err(Error::arg("read has no bases"));
        }
        if let Some(pos) = bases.bytes().position(|b| !BASES.contains(&b)) {
            return Err(Error::arg(format!(
                "invalid base {:?} at position {pos}",
                bases.as_bytes()[pos] as char
            )));
        }
        Ok(DnaRead { bases, cluster_id })
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// Reference strands, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub centers: Vec<String>,
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Reads with ground-truth cluster ids in `0..cluster_count`, every cluster
/// non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthDataset {
    reads: Vec<DnaRead>,
    cluster_count: usize,
}

impl GroundTruthDataset {
    /// Builds a dataset from labeled reads. Cluster ids are compacted to
    /// `0..cluster_count` preserving their relative order.
    pub fn from_reads(reads: Vec<DnaRead>) -> Result<Self> {
        let mut ids = Vec::with_capacity(reads.len());
        for (i, r) in reads.iter().enumerate() {
            match r.cluster_id {
                Some(c) => ids.push(c),
                None => return Err(Error::arg(format!("read {i} has no cluster id"))),
            }
        }
        let mut distinct = ids.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let reads = reads
            .into_iter()
            .zip(ids)
            .map(|(mut r, c)| {
                r.cluster_id = Some(distinct.binary_search(&c).unwrap());
                r
            })
            .collect();
        Ok(GroundTruthDataset {
            reads,
            cluster_count: distinct.len(),
        })
    }

    pub fn reads(&self) -> &[DnaRead] {
        &self.reads
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn len(&self) -> usize {
        self.reads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty()
    }

    /// Ground-truth label of every read, in read order.
    pub fn labels(&self) -> Vec<usize> {
        self.reads.iter().map(|r| r.cluster_id.unwrap()).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for r in &self.reads {
            sizes[r.cluster_id.unwrap()] += 1;
        }
        sizes
    }

    pub fn mean_read_length(&self) -> f64 {
        if self.reads.is_empty() {
            return 0.0;
        }
        self.reads.iter().map(|r| r.len() as f64).sum::<f64>() / self.reads.len() as f64
    }

    /// Keeps the reads of the given original cluster ids and compacts ids.
    pub fn select_clusters(&self, clusters: &[usize]) -> Result<Self> {
        let mut keep = vec![false; self.cluster_count];
        for &c in clusters {
            if c >= self.cluster_count {
                return Err(Error::arg(format!(
                    "cluster {c} out of range (cluster_count {})",
                    self.cluster_count
                )));
            }
            keep[c] = true;
        }
        let reads = self
            .reads
            .iter()
            .filter(|r| keep[r.cluster_id.unwrap()])
            .cloned()
            .collect();
        GroundTruthDataset::from_reads(reads)
    }
}

fn read_lines(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn sanitize(path: &Path, line_no: usize, line: &str) -> Result<String> {
    if let Some(bad) = line
        .chars()
        .find(|c| !matches!(c, 'A' | 'C' | 'G' | 'T' | 'a' | 'c' | 'g' | 't'))
    {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("invalid base character {bad:?}"),
        });
    }
    Ok(line.to_ascii_uppercase())
}

/// Parses a centers file: one sequence per line, blank lines ignored.
pub fn parse_centers(path: impl AsRef<Path>) -> Result<ReferenceSet> {
    let path = path.as_ref();
    let text = read_lines(path)?;
    let mut centers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        centers.push(sanitize(path, i + 1, line)?);
    }
    Ok(ReferenceSet { centers })
}

/// Parses a clusters file into a labeled dataset.
pub fn parse_clusters(path: impl AsRef<Path>) -> Result<GroundTruthDataset> {
    let path = path.as_ref();
    let text = read_lines(path)?;
    let mut reads = Vec::new();
    let mut block = 0usize;
    let mut block_has_reads = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.starts_with("====") {
            if block_has_reads {
                block += 1;
                block_has_reads = false;
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bases = sanitize(path, i + 1, line)?;
        reads.push(DnaRead {
            bases,
            cluster_id: Some(block),
        });
        block_has_reads = true;
    }
    let cluster_count = if block_has_reads { block + 1 } else { block };
    log::debug!("parsed {} reads in {cluster_count} clusters from {}", reads.len(), path.display());
    Ok(GroundTruthDataset {
        reads,
        cluster_count,
    })
}

pub fn write_centers(refs: &ReferenceSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in &refs.centers {
        writeln!(w, "{c}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a dataset in the clusters layout: every block is preceded by a
/// separator line.
pub fn write_clusters(ds: &GroundTruthDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut by_cluster: Vec<Vec<&str>> = vec![Vec::new(); ds.cluster_count];
    for r in &ds.reads {
        by_cluster[r.cluster_id.unwrap()].push(&r.bases);
    }
    for block in by_cluster {
        writeln!(w, "{SEPARATOR}").map_err(|e| Error::io(path, e))?;
        for b in block {
            writeln!(w, "{b}").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Draws `n_subsets` independent subsets of whole clusters.
pub fn sample_subsets(
    ds: &GroundTruthDataset,
    n_subsets: usize,
    clusters_per_subset: usize,
    seed: u64,
) -> Result<Vec<GroundTruthDataset>> {
    if clusters_per_subset == 0 {
        return Err(Error::arg("clusters_per_subset must be positive"));
    }
    if clusters_per_subset > ds.cluster_count {
        return Err(Error::arg(format!(
            "clusters_per_subset {clusters_per_subset} exceeds cluster_count {}",
            ds.cluster_count
        )));
    }
    (0..n_subsets)
        .map(|s| {
            let mut rng = derived_rng(seed, "sample_subsets", &[s as u64]);
            let mut chosen = index::sample(&mut rng, ds.cluster_count, clusters_per_subset).into_vec();
            chosen.sort_unstable();
            ds.select_clusters(&chosen)
        })
        .collect()
}

/// Restricts the dataset to clusters `lo..hi`.
pub fn slice_range(ds: &GroundTruthDataset, lo: usize, hi: usize) -> Result<GroundTruthDataset> {
    if lo >= hi || hi > ds.cluster_count {
        return Err(Error::arg(format!(
            "invalid cluster range [{lo}, {hi}) for cluster_count {}",
            ds.cluster_count
        )));
    }
    let ids: Vec<usize> = (lo..hi).collect();
    ds.select_clusters(&ids)
}

/// Splits clusters into two disjoint datasets; `ratio` of the clusters (rounded,
/// at least one on each side) go to the first.
pub fn split_clusters(
    ds: &GroundTruthDataset,
    ratio: f64,
    seed: u64,
) -> Result<(GroundTruthDataset, GroundTruthDataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::arg(format!("split ratio {ratio} not in (0,1)")));
    }
    if ds.cluster_count < 2 {
        return Err(Error::arg("need at least two clusters to split"));
    }
    let n_first = ((ds.cluster_count as f64 * ratio).round() as usize).clamp(1, ds.cluster_count - 1);
    let mut rng = derived_rng(seed, "split_clusters", &[]);
    let mut perm = index::sample(&mut rng, ds.cluster_count, ds.cluster_count).into_vec();
    let mut second = perm.split_off(n_first);
    perm.sort_unstable();
    second.sort_unstable();
    Ok((ds.select_clusters(&perm)?, ds.select_clusters(&second)?))
}

/// Per-base i.i.d. error channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub substitution_rate: f64,
    pub insertion_rate: f64,
    pub deletion_rate: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            substitution_rate: 0.05,
            insertion_rate: 0.03,
            deletion_rate: 0.03,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        NoiseModel {
            substitution_rate: 0.0,
            insertion_rate: 0.0,
            deletion_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.substitution_rate, self.insertion_rate, self.deletion_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::arg(format!("noise rates must lie in [0,1], got {rates:?}")));
        }
        if rates.iter().sum::<f64>() >= 1.0 {
            return Err(Error::arg(format!("noise rates must sum to < 1, got {rates:?}")));
        }
        Ok(())
    }

    /// Passes `center` through the channel. At each base one of deletion,
    /// insertion (a random base emitted before it), substitution (one of the
    /// other three bases) or a faithful copy happens.
    pub fn corrupt<R: rand::Rng>(&self, center: &[u8], rng: &mut R) -> String {
        let del = self.deletion_rate;
        let ins = del + self.insertion_rate;
        let sub = ins + self.substitution_rate;
        let mut out = Vec::with_capacity(center.len() + 4);
        for &b in center {
            let u: f64 = rng.gen();
            if u < del {
                continue;
            } else if u < ins {
                out.push(BASES[rng.gen_range(0..4)]);
                out.push(b);
            } else if u < sub {
                let j = BASES.iter().position(|&x| x == b).unwrap_or(0);
                out.push(BASES[(j + rng.gen_range(1..4)) % 4]);
            } else {
                out.push(b);
            }
        }
        String::from_utf8(out).expect("ACGT is ASCII")
    }
}

pub fn random_strand<R: rand::Rng>(len: usize, rng: &mut R) -> String {
    (0..len).map(|_| BASES[rng.gen_range(0..4)] as char).collect()
}

/// Generates random centers and noisy reads of each.
pub fn generate_synthetic(
    n_clusters: usize,
    reads_per_cluster: usize,
    center_len: usize,
    noise: &NoiseModel,
) -> Result<(ReferenceSet, GroundTruthDataset)> {
    if n_clusters == 0 || reads_per_cluster == 0 || center_len == 0 {
        return Err(Error::arg(
            "n_clusters, reads_per_cluster and center_len must all be positive",
        ));
    }
    noise.validate()?;
    let mut rng = rng_from_seed(noise.seed);
    let centers: Vec<String> = (0..n_clusters).map(|_| random_strand(center_len, &mut rng)).collect();
    let mut reads = Vec::with_capacity(n_clusters * reads_per_cluster);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..reads_per_cluster {
            let mut bases = noise.corrupt(center.as_bytes(), &mut rng);
            while bases.is_empty() {
                bases = noise.corrupt(center.as_bytes(), &mut rng);
            }
            reads.push(DnaRead {
                bases,
                cluster_id: Some(c),
            });
        }
    }
    Ok((
        ReferenceSet { centers },
        GroundTruthDataset {
            reads,
            cluster_count: n_clusters,
        },
    ))
}
