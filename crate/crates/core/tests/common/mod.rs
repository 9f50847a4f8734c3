//! Independent reference implementations used by the integration tests.
//! Everything here is written directly from the definitions with plain
//! loops and shares no code with the crate under test.

#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>())
}

/// Index of the closest centre; the first one wins on ties.
pub fn brute_argmin(centres: &Array2<f64>, x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centres.nrows() {
        let mut d = 0.0;
        for j in 0..x.len() {
            let e = x[j] - centres[[c, j]];
            d += e * e;
        }
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// VLAD built one centre at a time: for centre `c`, sum `x - c` over the rows
/// whose nearest centre is `c`, visiting rows in order.
pub fn naive_vlad(rows: &Array2<f64>, centres: &Array2<f64>) -> Vec<f64> {
    let (k, w) = centres.dim();
    let labels: Vec<usize> = rows
        .outer_iter()
        .map(|r| brute_argmin(centres, r.as_slice().unwrap()))
        .collect();
    let mut out = vec![0.0; k * w];
    for c in 0..k {
        for (i, &label) in labels.iter().enumerate() {
            if label == c {
                for j in 0..w {
                    out[c * w + j] += rows[[i, j]] - centres[[c, j]];
                }
            }
        }
    }
    out
}

pub fn naive_sq_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

/// Largest circular cross-correlation over every row shift, summed across
/// columns.
pub fn brute_correlation(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let (n, m) = a.dim();
    let mut best = f64::NEG_INFINITY;
    for s in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..m {
                acc += a[[i, j]] * b[[(i + s) % n, j]];
            }
        }
        best = best.max(acc);
    }
    best
}

/// Recall@N via a full sort of every query row by (distance, index).
/// Queries without a true match are left out.
pub fn sorted_recall(dist: &Array2<f64>, gt: &Array2<bool>, n_max: usize) -> Vec<f64> {
    let mut positions = Vec::new();
    for q in 0..dist.nrows() {
        if !(0..gt.ncols()).any(|m| gt[[q, m]]) {
            continue;
        }
        let mut order: Vec<usize> = (0..dist.ncols()).collect();
        order.sort_by(|&x, &y| dist[[q, x]].total_cmp(&dist[[q, y]]).then(x.cmp(&y)));
        positions.push(order.iter().position(|&m| gt[[q, m]]).unwrap());
    }
    (1..=n_max)
        .map(|n| {
            if positions.is_empty() {
                0.0
            } else {
                100.0 * positions.iter().filter(|&&p| p < n).count() as f64 / positions.len() as f64
            }
        })
        .collect()
}

/// Within `rel` of `expected`, scaled by `max(1, |expected|)`.
pub fn close(actual: f64, expected: f64, rel: f64) -> bool {
    (actual - expected).abs() <= rel * expected.abs().max(1.0)
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
