//! k-means++ codebooks over radial response vectors.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const CDBK_MAGIC: &[u8; 4] = b"CDBK";

/// Settings for [`fit_kmeans_pp`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    /// Stop once the relative decrease in inertia is at most this.
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 64,
            tol: 1e-4,
            seed: 0,
            max_iter: 300,
        }
    }
}

/// `k` cluster centres in the `W`-dimensional response space.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    centres: Array2<f64>,
    pub seed: u64,
    /// Sum of squared distances from the training vectors to their nearest
    /// centre. Zero for codebooks read back from disk.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after seeding and after every Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

impl Codebook {
    /// Wraps explicit centres (one per row).
    pub fn from_centres(centres: Array2<f64>) -> Result<Self> {
        if centres.nrows() == 0 || centres.ncols() == 0 {
            return Err(Error::argument(
                "codebook needs at least one centre of non-zero length",
            ));
        }
        if centres.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("codebook centres must be finite".into()));
        }
        Ok(Self {
            centres,
            seed: 0,
            inertia: 0.0,
            iterations_run: 0,
            inertia_trace: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.centres.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centres.ncols()
    }

    pub fn centres(&self) -> &Array2<f64> {
        &self.centres
    }

    /// Index of the closest centre; the lowest index wins ties.
    pub fn assign_nearest(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::argument(format!(
                "vector of length {} against codebook of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("query vector must be finite".into()));
        }
        Ok(self.nearest(x).0)
    }

    /// Unchecked nearest-centre search returning `(index, squared distance)`.
    pub(crate) fn nearest(&self, x: &[f64]) -> (usize, f64) {
        nearest_centre(self.centres.view(), x)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.centres.len() * 8);
        out.extend_from_slice(CDBK_MAGIC);
        out.extend_from_slice(&(self.k() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for v in self.centres.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..4] != CDBK_MAGIC {
            return Err(Error::ingest(path, "missing CDBK header"));
        }
        let k = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let payload = &bytes[20..];
        if payload.len() != k * w * 8 {
            return Err(Error::ingest(path, format!("expected {k}x{w} centres")));
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let centres = Array2::from_shape_vec((k, w), values).expect("length checked");
        let mut cb = Self::from_centres(centres).map_err(|e| Error::ingest(path, e.to_string()))?;
        cb.seed = seed;
        Ok(cb)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::ingest(path, e.to_string()))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centre(centres: ArrayView2<'_, f64>, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centres.outer_iter().enumerate() {
        let d = squared_distance(x, c.as_slice().expect("standard layout"));
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn distinct_rows_at_least(vectors: ArrayView2<'_, f64>, k: usize) -> bool {
    let mut seen = HashSet::new();
    for row in vectors.outer_iter() {
        seen.insert(row.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        if seen.len() >= k {
            return true;
        }
    }
    false
}

/// Fits `params.k` centres to the rows of `vectors` with k-means++ seeding
/// followed by Lloyd iterations.
///
/// Deterministic for a fixed row order and parameters. A cluster that loses
/// all of its members is re-seeded at the vector farthest from its nearest
/// centre.
pub fn fit_kmeans_pp(vectors: ArrayView2<'_, f64>, params: &KMeansParams) -> Result<Codebook> {
    let (n, w) = vectors.dim();
    let KMeansParams {
        k,
        tol,
        seed,
        max_iter,
    } = *params;
    if n == 0 || w == 0 {
        return Err(Error::argument(
            "k-means needs at least one non-empty vector",
        ));
    }
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::argument(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("training vectors must be finite".into()));
    }
    if !distinct_rows_at_least(vectors, k) {
        return Err(Error::argument(format!(
            "fewer than k = {k} distinct training vectors"
        )));
    }
    let vectors = vectors.as_standard_layout();
    let rows: Vec<&[f64]> = vectors.outer_iter().map(|r| row_slice(r)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres = seed_plus_plus(&rows, k, w, &mut rng);

    let mut assignment = assign_all(centres.view(), &rows);
    let mut inertia: f64 = assignment.iter().map(|a| a.1).sum();
    let mut trace = vec![inertia];
    let mut iterations_run = 0;

    for iter in 1..=max_iter {
        update_centres(&mut centres, &rows, &mut assignment);
        let next = assign_all(centres.view(), &rows);
        let next_inertia: f64 = next.iter().map(|a| a.1).sum();
        trace.push(next_inertia);
        iterations_run = iter;
        let converged = inertia <= 0.0 || (inertia - next_inertia) / inertia <= tol;
        assignment = next;
        inertia = next_inertia;
        if converged {
            break;
        }
    }

    Ok(Codebook {
        centres,
        seed,
        inertia,
        iterations_run,
        inertia_trace: trace,
    })
}

fn row_slice<'a>(row: ArrayView1<'a, f64>) -> &'a [f64] {
    row.to_slice()
        .expect("rows of a standard-layout matrix are contiguous")
}

fn seed_plus_plus(rows: &[&[f64]], k: usize, w: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = rows.len();
    let mut centres = Array2::zeros((k, w));
    let first = rng.random_range(0..n);
    centres.row_mut(0).assign(&ArrayView1::from(rows[first]));
    let mut d2: Vec<f64> = rows
        .par_iter()
        .map(|x| squared_distance(x, rows[first]))
        .collect();

    for c in 1..k {
        let total: f64 = d2.iter().sum();
        // D^2 sampling; total > 0 because at least k rows are distinct.
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, d) in d2.iter().enumerate() {
            acc += d;
            if *d > 0.0 && acc > target {
                pick = Some(i);
                break;
            }
        }
        // Round-off can leave `target` just above the accumulated sum.
        let pick = pick.unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).expect("total > 0"));
        centres.row_mut(c).assign(&ArrayView1::from(rows[pick]));
        let chosen = rows[pick];
        d2.par_iter_mut().zip(rows.par_iter()).for_each(|(d, x)| {
            let nd = squared_distance(x, chosen);
            if nd < *d {
                *d = nd;
            }
        });
    }
    centres
}

fn assign_all(centres: ArrayView2<'_, f64>, rows: &[&[f64]]) -> Vec<(usize, f64)> {
    rows.par_iter()
        .map(|x| nearest_centre(centres, x))
        .collect()
}

/// Replaces every centre by the mean of its members, summed in ascending row
/// order. Empty clusters are moved onto the currently worst-served vector.
fn update_centres(centres: &mut Array2<f64>, rows: &[&[f64]], assignment: &mut [(usize, f64)]) {
    let (k, w) = centres.dim();
    let mut sums = Array2::<f64>::zeros((k, w));
    let mut counts = vec![0usize; k];
    for (x, &(c, _)) in rows.iter().zip(assignment.iter()) {
        counts[c] += 1;
        sums.row_mut(c)
            .iter_mut()
            .zip(x.iter())
            .for_each(|(s, v)| *s += v);
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = count as f64;
            centres
                .row_mut(c)
                .iter_mut()
                .zip(sums.row(c).iter())
                .for_each(|(dst, s)| *dst = s / inv);
        } else {
            // Farthest vector from its own centre; lowest index on ties.
            let mut far = 0;
            for (i, a) in assignment.iter().enumerate() {
                if a.1 > assignment[far].1 {
                    far = i;
                }
            }
            centres.row_mut(c).assign(&ArrayView1::from(rows[far]));
            assignment[far] = (c, 0.0);
        }
    }
}
