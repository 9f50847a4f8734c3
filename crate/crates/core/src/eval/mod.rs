//! Localisation experiments between a query and a reference trajectory.

mod bench;
mod pipeline;

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scan::Pose;

pub use bench::{bench_timings, TimingReport, TIMING_HEADER};
pub use pipeline::{
    fit_reference_codebook, run_pair, run_pair_with, EvalRun, PlaceEncoder, Trajectory,
    RESULTS_HEADER,
};

/// Keeps elements `0, stride, 2*stride, ...`.
pub fn downsample_trajectory<T: Clone>(items: &[T], stride: usize) -> Result<Vec<T>> {
    if stride == 0 {
        return Err(Error::argument("stride must be at least 1"));
    }
    Ok(items.iter().step_by(stride).cloned().collect())
}

/// `is_match[q][m]` iff query `q` and reference `m` are within `threshold_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthMatrix {
    pub is_match: Array2<bool>,
    pub threshold_m: f64,
}

impl GroundTruthMatrix {
    pub fn rows(&self) -> usize {
        self.is_match.nrows()
    }

    pub fn cols(&self) -> usize {
        self.is_match.ncols()
    }
}

pub fn ground_truth_matrix(
    queries: &[Pose],
    refs: &[Pose],
    threshold_m: f64,
) -> Result<GroundTruthMatrix> {
    if queries.is_empty() || refs.is_empty() {
        return Err(Error::argument(
            "ground truth needs non-empty query and reference poses",
        ));
    }
    if !(threshold_m.is_finite() && threshold_m > 0.0) {
        return Err(Error::argument(format!(
            "threshold must be positive, got {threshold_m}"
        )));
    }
    let is_match = Array2::from_shape_fn((queries.len(), refs.len()), |(q, m)| {
        queries[q].planar_distance(&refs[m]) <= threshold_m
    });
    Ok(GroundTruthMatrix {
        is_match,
        threshold_m,
    })
}

const DMAT_MAGIC: &[u8; 4] = b"DMAT";

/// Query x reference descriptor distances; lower is more similar.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub values: Array2<f64>,
}

impl DistanceMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "distance matrix entries must be finite".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Converts similarity scores (higher is better) by negation.
    pub fn from_similarities(similarities: Array2<f64>) -> Result<Self> {
        Self::new(similarities.mapv(|s| -s))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (q, m) = self.values.dim();
        let mut out = Vec::with_capacity(12 + q * m * 4);
        out.extend_from_slice(DMAT_MAGIC);
        out.extend_from_slice(&(q as u32).to_le_bytes());
        out.extend_from_slice(&(m as u32).to_le_bytes());
        for v in self.values.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    /// Reads a `DMAT` dump (entries were stored as f32).
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != DMAT_MAGIC {
            return Err(Error::ingest(path, "missing DMAT header"));
        }
        let q = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if bytes.len() != 12 + q * m * 4 {
            return Err(Error::ingest(path, format!("expected {q}x{m} f32 entries")));
        }
        let values = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Self::new(Array2::from_shape_vec((q, m), values).expect("length checked"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

/// Recall@N for `N = 1..=n_max`, as percentages.
#[derive(Clone, Debug, PartialEq)]
pub struct RecallCurve {
    pub n_values: Vec<usize>,
    pub recall_pct: Vec<f64>,
    /// Queries with at least one true match.
    pub evaluated_queries: usize,
    /// Queries without any true match, left out of the denominator.
    pub skipped: usize,
}

impl RecallCurve {
    /// Recall@N, or `None` outside `1..=n_max`.
    pub fn at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1)
            .and_then(|i| self.recall_pct.get(i))
            .copied()
    }
}

/// Rank of the best-ranked true match of one query row, ordering references
/// by `(distance, index)`. `None` when the row has no true match.
pub(crate) fn first_hit_rank(
    dist: ndarray::ArrayView1<'_, f64>,
    gt: ndarray::ArrayView1<'_, bool>,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (m, &hit) in gt.iter().enumerate() {
        if hit && best.is_none_or(|b| dist[m] < dist[b]) {
            best = Some(m);
        }
    }
    let best = best?;
    let d = dist[best];
    Some(
        dist.iter()
            .enumerate()
            .filter(|&(m, &v)| v < d || (v == d && m < best))
            .count(),
    )
}

/// Percentage of queries whose `N` nearest references contain a true match.
///
/// Distance ties are broken by lower reference index. Queries without any
/// true match are skipped and counted in [`RecallCurve::skipped`].
pub fn recall_at_n(
    dist: &DistanceMatrix,
    gt: &GroundTruthMatrix,
    n_max: usize,
) -> Result<RecallCurve> {
    if dist.values.dim() != gt.is_match.dim() {
        return Err(Error::argument(format!(
            "distance matrix {:?} and ground truth {:?} differ in shape",
            dist.values.dim(),
            gt.is_match.dim()
        )));
    }
    if n_max == 0 {
        return Err(Error::argument("n_max must be at least 1"));
    }
    let mut hits_at_rank = vec![0usize; n_max];
    let mut evaluated = 0;
    let mut skipped = 0;
    for (d_row, g_row) in dist.values.outer_iter().zip(gt.is_match.outer_iter()) {
        match first_hit_rank(d_row, g_row) {
            None => skipped += 1,
            Some(rank) => {
                evaluated += 1;
                if rank < n_max {
                    hits_at_rank[rank] += 1;
                }
            }
        }
    }
    let mut cumulative = 0;
    let recall_pct = hits_at_rank
        .iter()
        .map(|h| {
            cumulative += h;
            if evaluated == 0 {
                0.0
            } else {
                100.0 * cumulative as f64 / evaluated as f64
            }
        })
        .collect();
    Ok(RecallCurve {
        n_values: (1..=n_max).collect(),
        recall_pct,
        evaluated_queries: evaluated,
        skipped,
    })
}
