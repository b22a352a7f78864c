//! Near-duplicate removal by average-linkage agglomerative clustering over
//! cosine distances, with the cut threshold picked by silhouette score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Article;
use crate::embed::{cosine, EmbedError, EmbeddingProvider, Vector};

pub const DEFAULT_GRID_START: f64 = 0.05;
pub const DEFAULT_GRID_END: f64 = 0.95;
pub const DEFAULT_GRID_STEP: f64 = 0.05;
pub const DEFAULT_MAX_BATCH: usize = 2000;

#[derive(Debug, Error)]
pub enum DedupError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("silhouette needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("invalid grid: start={start} end={end} step={step}")]
    InvalidGrid { start: f64, end: f64, step: f64 },
    #[error("{labels} labels for {articles} articles")]
    Misaligned { labels: usize, articles: usize },
}

/// Symmetric matrix of cosine distances, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from a full row-major `n × n` buffer. The caller guarantees
    /// symmetry and a zero diagonal.
    pub fn from_rows(n: usize, d: Vec<f64>) -> Self {
        assert_eq!(d.len(), n * n, "distance buffer must be n*n");
        DistanceMatrix { n, d }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn max_distance(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// `d[i][j] = 1 - cosine(v_i, v_j)`, clamped to `[0, 2]`.
pub fn distance_matrix(vectors: &[Vector]) -> Result<DistanceMatrix, EmbedError> {
    let n = vectors.len();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Ok(0.0)
                    } else {
                        cosine(&vectors[i], &vectors[j]).map(|c| (1.0 - c).clamp(0.0, 2.0))
                    }
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DistanceMatrix {
        n,
        d: rows.concat(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Dense cluster ids, numbered by each cluster's smallest member index.
    pub labels: Vec<usize>,
    pub threshold: f64,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Average-linkage agglomeration. Clusters merge while the smallest mean
/// inter-cluster distance is `<= threshold`; ties go to the pair with the
/// smallest (lower cluster id, higher cluster id), where a cluster's id is
/// its smallest member index.
pub fn agglomerate(m: &DistanceMatrix, threshold: f64) -> ClusterAssignment {
    let n = m.n;
    // Pairwise distance sums between active clusters, indexed by cluster id.
    let mut sums = m.d.clone();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut owner: Vec<usize> = (0..n).collect();

    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let avg = sums[a * n + b] / (size[a] * size[b]) as f64;
                if best.is_none_or(|(d, _, _)| avg < d) {
                    best = Some((avg, a, b));
                }
            }
        }
        let (dist, keep, gone) = best.expect("at least two active clusters");
        if dist > threshold {
            break;
        }
        for &k in &active {
            if k != keep && k != gone {
                let s = sums[keep * n + k] + sums[gone * n + k];
                sums[keep * n + k] = s;
                sums[k * n + keep] = s;
            }
        }
        size[keep] += size[gone];
        active.retain(|&c| c != gone);
        owner.iter_mut().filter(|o| **o == gone).for_each(|o| *o = keep);
    }

    // `active` is sorted, and each cluster id is its smallest member.
    let labels = owner
        .iter()
        .map(|o| active.binary_search(o).expect("owner is active"))
        .collect();
    ClusterAssignment { labels, threshold }
}

/// Mean silhouette. `Ok(None)` when the clustering is degenerate (one
/// cluster, or every point alone). Points in singleton clusters score 0.
pub fn silhouette(m: &DistanceMatrix, c: &ClusterAssignment) -> Result<Option<f64>, DedupError> {
    let n = m.n;
    if n < 2 {
        return Err(DedupError::TooFewPoints(n));
    }
    let k = c.cluster_count();
    if k <= 1 || k == n {
        return Ok(None);
    }
    let mut sizes = vec![0usize; k];
    for &l in &c.labels {
        sizes[l] += 1;
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = c.labels[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[c.labels[j]] += m.get(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&l| l != own)
                .map(|l| sums[l] / sizes[l] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(Some(total / n as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub threshold: f64,
    pub silhouette: Option<f64>,
    pub assignment: ClusterAssignment,
}

/// Pick the grid threshold with the highest defined silhouette, smallest
/// threshold on ties. If every threshold is degenerate the smallest grid
/// value is used.
pub fn tune_threshold(m: &DistanceMatrix, grid: &[f64]) -> Result<TuneResult, DedupError> {
    let first = *grid.first().ok_or(DedupError::EmptyGrid)?;
    let mut best: Option<TuneResult> = None;
    for &t in grid {
        let assignment = agglomerate(m, t);
        let score = match silhouette(m, &assignment) {
            Ok(Some(s)) => s,
            _ => continue,
        };
        if best.as_ref().is_none_or(|b| score > b.silhouette.unwrap_or(f64::NEG_INFINITY)) {
            best = Some(TuneResult {
                threshold: t,
                silhouette: Some(score),
                assignment,
            });
        }
    }
    Ok(best.unwrap_or_else(|| {
        log::warn!("all silhouettes degenerate over the grid; using threshold {first}");
        TuneResult {
            threshold: first,
            silhouette: None,
            assignment: agglomerate(m, first),
        }
    }))
}

/// Inclusive `start..=end` grid in `step` increments.
pub fn threshold_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>, DedupError> {
    if !step.is_finite() || step <= 0.0 || !start.is_finite() || !end.is_finite() || end < start {
        return Err(DedupError::InvalidGrid { start, end, step });
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + step * i as f64) * 1e10).round() / 1e10)
        .collect())
}

pub fn default_grid() -> Vec<f64> {
    threshold_grid(DEFAULT_GRID_START, DEFAULT_GRID_END, DEFAULT_GRID_STEP)
        .expect("default grid is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub representative: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupReport {
    pub threshold: f64,
    pub silhouette: Option<f64>,
    pub clusters: Vec<Cluster>,
}

impl DedupReport {
    pub fn representatives(&self) -> impl Iterator<Item = &str> {
        self.clusters.iter().map(|c| c.representative.as_str())
    }
}

/// Earliest dated article wins; undated ones lose to dated ones. Then the
/// longest body, then the smallest id.
pub fn select_representatives(
    c: &ClusterAssignment,
    articles: &[&Article],
    silhouette: Option<f64>,
) -> Result<DedupReport, DedupError> {
    if c.labels.len() != articles.len() {
        return Err(DedupError::Misaligned {
            labels: c.labels.len(),
            articles: articles.len(),
        });
    }
    let clusters = c
        .members()
        .into_iter()
        .map(|idx| {
            let members: Vec<&Article> = idx.iter().map(|&i| articles[i]).collect();
            let rep = members
                .iter()
                .min_by(|a, b| {
                    (a.published_at.is_none(), a.published_at)
                        .cmp(&(b.published_at.is_none(), b.published_at))
                        .then(b.body.chars().count().cmp(&a.body.chars().count()))
                        .then(a.id.cmp(&b.id))
                })
                .expect("clusters are non-empty");
            Cluster {
                representative: rep.id.clone(),
                members: members.iter().map(|a| a.id.clone()).collect(),
            }
        })
        .collect();
    Ok(DedupReport {
        threshold: c.threshold,
        silhouette,
        clusters,
    })
}

#[derive(Debug, Clone)]
pub struct DedupSettings {
    pub grid: Vec<f64>,
    /// Skip tuning and cut at this threshold.
    pub fixed_threshold: Option<f64>,
    pub max_batch: usize,
}

impl Default for DedupSettings {
    fn default() -> Self {
        DedupSettings {
            grid: default_grid(),
            fixed_threshold: None,
            max_batch: DEFAULT_MAX_BATCH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupOutcome {
    pub batches: Vec<DedupReport>,
}

impl DedupOutcome {
    /// Representative ids across batches, sorted.
    pub fn kept_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .batches
            .iter()
            .flat_map(|b| b.representatives().map(String::from))
            .collect();
        ids.sort();
        ids
    }

    pub fn cluster_count(&self) -> usize {
        self.batches.iter().map(|b| b.clusters.len()).sum()
    }
}

/// Deduplicate `articles`. Inputs larger than `max_batch` are sorted by date
/// (undated last, then id) and cut into consecutive batches that are
/// clustered independently.
pub fn dedupe(
    articles: &[Article],
    provider: &dyn EmbeddingProvider,
    settings: &DedupSettings,
) -> Result<DedupOutcome, DedupError> {
    let mut ordered: Vec<&Article> = articles.iter().collect();
    if ordered.len() > settings.max_batch {
        ordered.sort_by(|a, b| {
            (a.published_at.is_none(), a.published_at, &a.id)
                .cmp(&(b.published_at.is_none(), b.published_at, &b.id))
        });
    }
    let batches = ordered
        .chunks(settings.max_batch.max(1))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|batch| dedupe_batch(batch, provider, settings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DedupOutcome { batches })
}

fn dedupe_batch(
    batch: &[&Article],
    provider: &dyn EmbeddingProvider,
    settings: &DedupSettings,
) -> Result<DedupReport, DedupError> {
    let texts: Vec<String> = batch.iter().map(|a| a.full_text()).collect();
    let vectors = provider.embed_batch(&texts)?;
    let m = distance_matrix(&vectors)?;
    let (assignment, score) = match settings.fixed_threshold {
        Some(t) => {
            let a = agglomerate(&m, t);
            let s = if m.n() >= 2 { silhouette(&m, &a)? } else { None };
            (a, s)
        }
        None if m.n() < 2 => (agglomerate(&m, settings.grid.first().copied().unwrap_or(0.0)), None),
        None => {
            let r = tune_threshold(&m, &settings.grid)?;
            (r.assignment, r.silhouette)
        }
    };
    select_representatives(&assignment, batch, score)
}
