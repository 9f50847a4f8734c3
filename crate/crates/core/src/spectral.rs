//! Radial Fourier responses of polar scans.
//!
//! Every azimuth row is transformed with a `W`-point DFT
//! (`F[k] = sum_r f[r] * exp(-2*pi*i*k*r/W)`) and only the magnitude is kept.
//! The full spectrum is retained, no window is applied and the DC bin stays.

use std::f64::consts::TAU;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scan::PolarScan;

/// Per-azimuth magnitudes of the radial DFT.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScan {
    magnitude: Array2<f64>,
}

impl SpectralScan {
    pub fn azimuth_count(&self) -> usize {
        self.magnitude.nrows()
    }

    pub fn bin_count(&self) -> usize {
        self.magnitude.ncols()
    }

    pub fn magnitude(&self) -> &Array2<f64> {
        &self.magnitude
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.magnitude
    }
}

/// A planned `W`-point transform, reusable across scans of the same width.
#[derive(Clone)]
pub struct RadialFft {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl RadialFft {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len.max(1));
        Self { fft, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// |DFT| of each row of `rows`, in parallel across rows.
    pub fn magnitude_rows(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (h, w) = rows.dim();
        if w != self.len || w == 0 {
            return Err(Error::argument(format!(
                "transform planned for {} bins, got rows of {w}",
                self.len
            )));
        }
        check_finite(rows.iter())?;
        let out: Vec<Vec<f64>> = (0..h)
            .into_par_iter()
            .map(|i| rows.row(i))
            .map_init(
                || vec![Complex64::default(); w],
                |buf, row| {
                    buf.iter_mut()
                        .zip(row.iter())
                        .for_each(|(c, &v)| *c = Complex64::new(v, 0.0));
                    self.fft.process(buf);
                    buf.iter().map(|c| c.norm()).collect()
                },
            )
            .collect();
        Ok(Array2::from_shape_vec((h, w), out.concat()).expect("row lengths match"))
    }

    /// Single-threaded variant of [`RadialFft::magnitude_rows`].
    pub fn magnitude_rows_serial(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (h, w) = rows.dim();
        if w != self.len || w == 0 {
            return Err(Error::argument(format!(
                "transform planned for {} bins, got rows of {w}",
                self.len
            )));
        }
        check_finite(rows.iter())?;
        let mut buf = vec![Complex64::default(); w];
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        let mut out = Array2::zeros((h, w));
        for (row, mut dst) in rows.outer_iter().zip(out.outer_iter_mut()) {
            buf.iter_mut()
                .zip(row.iter())
                .for_each(|(c, &v)| *c = Complex64::new(v, 0.0));
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            dst.iter_mut().zip(&buf).for_each(|(d, c)| *d = c.norm());
        }
        Ok(out)
    }
}

fn check_finite<'a>(mut values: impl Iterator<Item = &'a f64>) -> Result<()> {
    match values.find(|v| !v.is_finite()) {
        Some(v) => Err(Error::Numeric(format!("non-finite input sample {v}"))),
        None => Ok(()),
    }
}

/// Radial DFT magnitude of every azimuth of `scan`.
pub fn radial_fft_magnitude(scan: &PolarScan) -> Result<SpectralScan> {
    let magnitude = RadialFft::new(scan.range_bin_count()).magnitude_rows(scan.power().view())?;
    Ok(SpectralScan { magnitude })
}

/// Direct O(W^2) evaluation of the DFT magnitude of one row.
pub fn naive_dft_magnitude(row: &[f64]) -> Result<Vec<f64>> {
    let w = row.len();
    if w == 0 {
        return Err(Error::argument("row must have at least one sample"));
    }
    check_finite(row.iter())?;
    Ok((0..w)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (r, &v) in row.iter().enumerate() {
                // Reduce k*r mod W first so the phase stays exact for large W.
                let phase = -TAU * ((k * r) % w) as f64 / w as f64;
                re += v * phase.cos();
                im += v * phase.sin();
            }
            re.hypot(im)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn fft_row(row: &[f64]) -> Vec<f64> {
        let m = Array2::from_shape_vec((1, row.len()), row.to_vec()).unwrap();
        RadialFft::new(row.len())
            .magnitude_rows(m.view())
            .unwrap()
            .row(0)
            .to_vec()
    }

    #[test]
    fn oracle_small_cases() {
        assert_eq!(
            naive_dft_magnitude(&[1.0, 0.0, 0.0, 0.0]).unwrap(),
            vec![1.0; 4]
        );
        let dc = naive_dft_magnitude(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((dc[0] - 4.0).abs() < 1e-12);
        assert!(dc[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(naive_dft_magnitude(&[]).is_err());
        assert!(matches!(
            naive_dft_magnitude(&[f64::INFINITY]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn constant_row_is_dc_only() {
        let c = 0.37;
        let out = fft_row(&[c; 512]);
        assert!((out[0] - 512.0 * c).abs() < 1e-9);
        assert!(out[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn impulse_is_flat() {
        for w in [1, 2, 3, 7, 512] {
            let mut row = vec![0.0; w];
            row[0] = 1.0;
            assert!(fft_row(&row).iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let m = Array2::from_shape_fn((9, 16), |(i, j)| ((i * 31 + j * 7) % 13) as f64);
        let f = RadialFft::new(16);
        assert_eq!(
            f.magnitude_rows(m.view()).unwrap(),
            f.magnitude_rows_serial(m.view()).unwrap()
        );
        assert!(f.magnitude_rows(Array2::zeros((2, 8)).view()).is_err());
    }
}
