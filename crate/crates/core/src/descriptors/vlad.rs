use ndarray::ArrayView2;

use crate::codebook::Codebook;
use crate::error::{Error, Result};

use super::VectorDescriptor;

/// Concatenated per-centre residual sums, `k` sections of length `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct VladDescriptor {
    values: Vec<f64>,
    k: usize,
    w: usize,
}

impl VladDescriptor {
    pub fn new(values: Vec<f64>, k: usize, w: usize) -> Result<Self> {
        if values.len() != k * w {
            return Err(Error::argument(format!(
                "VLAD of length {} cannot hold {k} sections of {w}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("VLAD values must be finite".into()));
        }
        Ok(Self { values, k, w })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn w(&self) -> usize {
        self.w
    }

    /// Residual sum for centre `i`.
    pub fn section(&self, i: usize) -> &[f64] {
        &self.values[i * self.w..(i + 1) * self.w]
    }

    /// Scales to unit L2 norm; an all-zero descriptor is returned unchanged.
    pub fn l2_normalised(mut self) -> Self {
        let norm = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= norm);
        }
        self
    }
}

impl VectorDescriptor for VladDescriptor {
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Aggregates the residuals of every row to its nearest codebook centre.
///
/// Rows are visited in ascending index order, so each section is summed in
/// a fixed order. Centres without members contribute a zero section.
pub fn encode_vlad(rows: ArrayView2<'_, f64>, codebook: &Codebook) -> Result<VladDescriptor> {
    let w = codebook.dim();
    if rows.ncols() != w {
        return Err(Error::argument(format!(
            "rows of length {} against a codebook of dimension {w}",
            rows.ncols()
        )));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("VLAD input must be finite".into()));
    }
    let k = codebook.k();
    let centres = codebook.centres();
    let mut values = vec![0.0; k * w];
    let mut row_buf = Vec::with_capacity(w);
    for row in rows.outer_iter() {
        let x = match row.as_slice() {
            Some(s) => s,
            None => {
                row_buf.clear();
                row_buf.extend(row.iter().copied());
                &row_buf[..]
            }
        };
        let (i, _) = codebook.nearest(x);
        let centre = centres.row(i);
        values[i * w..(i + 1) * w]
            .iter_mut()
            .zip(x.iter().zip(centre.iter()))
            .for_each(|(acc, (xv, cv))| *acc += xv - cv);
    }
    Ok(VladDescriptor { values, k, w })
}
