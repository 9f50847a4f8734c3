//! Radon-transform baseline: Cartesian projection, sinogram, radial
//! spectrum, and rotation search by circular cross-correlation.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scan::{polar_to_cartesian, resample_1d, CartesianScan, PolarScan};
use crate::spectral::RadialFft;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaplaceConfig {
    pub width_px: usize,
    pub resolution_m: f64,
    /// Projection angles over `[0, pi)`; `None` uses `width_px`.
    pub n_angles: Option<usize>,
    /// Radial axis of the sinogram is scaled to this percentage.
    pub scale_pct: f64,
}

impl Default for RaplaceConfig {
    fn default() -> Self {
        Self {
            width_px: 256,
            resolution_m: 1.2717,
            n_angles: None,
            scale_pct: 25.0,
        }
    }
}

impl RaplaceConfig {
    pub fn angles(&self) -> usize {
        self.n_angles.unwrap_or(self.width_px)
    }

    /// Radial samples kept after scaling the sinogram.
    pub fn radial_samples(&self) -> usize {
        ((self.width_px as f64 * self.scale_pct / 100.0).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || !self.width_px.is_multiple_of(2) {
            return Err(Error::argument(format!(
                "raplace width must be even and positive, got {}",
                self.width_px
            )));
        }
        if !(self.resolution_m.is_finite() && self.resolution_m > 0.0) {
            return Err(Error::argument("raplace resolution must be positive"));
        }
        if self.angles() == 0 {
            return Err(Error::argument(
                "raplace needs at least one projection angle",
            ));
        }
        if !(self.scale_pct.is_finite() && self.scale_pct > 0.0 && self.scale_pct <= 100.0) {
            return Err(Error::argument(format!(
                "raplace scale must be in (0, 100], got {}",
                self.scale_pct
            )));
        }
        Ok(())
    }
}

/// Per-angle magnitude spectra of the scaled sinogram, unit Frobenius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct RaplaceDescriptor {
    spectrum: Array2<f64>,
}

impl RaplaceDescriptor {
    pub fn new(spectrum: Array2<f64>) -> Result<Self> {
        if spectrum.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::argument(
                "raplace spectrum must be finite and non-negative",
            ));
        }
        Ok(Self { spectrum })
    }

    pub fn spectrum(&self) -> &Array2<f64> {
        &self.spectrum
    }
}

/// Parallel-beam projections at angles `pi * a / n_angles`.
///
/// Each row is obtained by rotating the image about its centre (bilinear
/// sampling, zero outside the image) and summing along image columns.
pub fn radon_sinogram(image: &CartesianScan, n_angles: usize) -> Result<Array2<f64>> {
    if n_angles == 0 {
        return Err(Error::argument("n_angles must be at least 1"));
    }
    let trig = angle_table(n_angles);
    Ok(radon_with_table(image.pixels.view(), &trig))
}

fn angle_table(n_angles: usize) -> Vec<(f64, f64)> {
    (0..n_angles)
        .map(|a| {
            let phi = PI * a as f64 / n_angles as f64;
            (phi.cos(), phi.sin())
        })
        .collect()
}

/// Interval of `v` for which `offset + slope * v` lies within `[-limit, limit]`.
fn slab(offset: f64, slope: f64, limit: f64) -> Option<(f64, f64)> {
    if slope.abs() < 1e-12 {
        return (offset.abs() <= limit).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let a = (-limit - offset) / slope;
    let b = (limit - offset) / slope;
    Some((a.min(b), a.max(b)))
}

fn radon_with_table(pixels: ArrayView2<'_, f64>, trig: &[(f64, f64)]) -> Array2<f64> {
    let d = pixels.nrows();
    debug_assert_eq!(d, pixels.ncols());
    let mut sino = Array2::zeros((trig.len(), d));
    if d == 0 {
        return sino;
    }
    let img = pixels.as_standard_layout();
    let img = img.as_slice().expect("standard layout");
    let centre = d as f64 / 2.0;
    let limit = centre - 0.5;
    let max_idx = (d - 1) as f64;

    for (row, &(cos, sin)) in sino.outer_iter_mut().zip(trig) {
        let mut row = row;
        for t in 0..d {
            let u = t as f64 + 0.5 - centre;
            // Source offset from centre: x = u*cos - v*sin, y = u*sin + v*cos.
            let Some((x_lo, x_hi)) = slab(u * cos, -sin, limit) else {
                continue;
            };
            let Some((y_lo, y_hi)) = slab(u * sin, cos, limit) else {
                continue;
            };
            let v_lo = x_lo.max(y_lo);
            let v_hi = x_hi.min(y_hi);
            if v_lo > v_hi {
                continue;
            }
            let q_lo = (v_lo + centre - 0.5).ceil().max(0.0) as usize;
            let q_hi = (v_hi + centre - 0.5).floor().min(max_idx);
            if q_hi < 0.0 {
                continue;
            }
            let q_hi = q_hi as usize;
            // Step along the ray: each row step moves the source by (-sin, cos).
            let v0 = q_lo as f64 + 0.5 - centre;
            let mut sx = u * cos - v0 * sin + limit;
            let mut sy = u * sin + v0 * cos + limit;
            let mut acc = 0.0;
            for _ in q_lo..=q_hi {
                acc += bilinear(img, d, sx.clamp(0.0, max_idx), sy.clamp(0.0, max_idx));
                sx -= sin;
                sy += cos;
            }
            row[t] = acc;
        }
    }
    sino
}

#[inline]
fn bilinear(img: &[f64], d: usize, x: f64, y: f64) -> f64 {
    if d == 1 {
        return img[0];
    }
    // Coordinates are non-negative, so truncation is floor.
    let x0 = (x as usize).min(d - 2);
    let y0 = (y as usize).min(d - 2);
    let tx = x - x0 as f64;
    let ty = y - y0 as f64;
    let i = y0 * d + x0;
    let top = img[i] * (1.0 - tx) + img[i + 1] * tx;
    let bottom = img[i + d] * (1.0 - tx) + img[i + d + 1] * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Reusable encoder holding the angle table and radial transform plan.
#[derive(Clone)]
pub struct RaplaceEncoder {
    cfg: RaplaceConfig,
    trig: Vec<(f64, f64)>,
    fft: RadialFft,
}

impl RaplaceEncoder {
    pub fn new(cfg: RaplaceConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            trig: angle_table(cfg.angles()),
            fft: RadialFft::new(cfg.radial_samples()),
            cfg,
        })
    }

    pub fn config(&self) -> &RaplaceConfig {
        &self.cfg
    }

    pub fn encode(&self, scan: &PolarScan) -> Result<RaplaceDescriptor> {
        let cart = polar_to_cartesian(scan, self.cfg.width_px, self.cfg.resolution_m)?;
        let sino = radon_with_table(cart.pixels.view(), &self.trig);
        let r = self.cfg.radial_samples();
        let mut scaled = Array2::zeros((sino.nrows(), r));
        for (src, mut dst) in sino.outer_iter().zip(scaled.outer_iter_mut()) {
            dst.iter_mut()
                .zip(resample_linear(src.as_slice().expect("contiguous"), r))
                .for_each(|(d, v)| *d = v);
        }
        let mut spectrum = self.fft.magnitude_rows_serial(scaled.view())?;
        let norm = spectrum.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            spectrum.mapv_inplace(|v| v / norm);
        }
        Ok(RaplaceDescriptor { spectrum })
    }
}

/// Linear interpolation at mapped sample centres (no anti-aliasing), the
/// usual "bilinear resize" along one axis.
fn resample_linear(src: &[f64], dst_len: usize) -> Vec<f64> {
    let n = src.len();
    if dst_len >= n {
        return resample_1d(ndarray::ArrayView1::from(src), dst_len);
    }
    let scale = n as f64 / dst_len as f64;
    (0..dst_len)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(n - 1);
            let t = x - x0 as f64;
            src[x0] * (1.0 - t) + src[x1] * t
        })
        .collect()
}

pub fn encode_raplace(scan: &PolarScan, cfg: &RaplaceConfig) -> Result<RaplaceDescriptor> {
    RaplaceEncoder::new(*cfg)?.encode(scan)
}

/// Circular cross-correlation along the angle axis, evaluated with FFTs.
#[derive(Clone)]
pub struct RaplaceMatcher {
    angles: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RaplaceMatcher {
    pub fn new(angles: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            angles,
            forward: planner.plan_fft_forward(angles.max(1)),
            inverse: planner.plan_fft_inverse(angles.max(1)),
        }
    }

    /// `max_s sum_{a,r} a[a][r] * b[(a + s) mod A][r]`.
    pub fn similarity(&self, a: &RaplaceDescriptor, b: &RaplaceDescriptor) -> Result<f64> {
        let (na, nr) = a.spectrum.dim();
        if a.spectrum.dim() != b.spectrum.dim() {
            return Err(Error::argument(format!(
                "raplace shapes differ: {:?} vs {:?}",
                a.spectrum.dim(),
                b.spectrum.dim()
            )));
        }
        if na != self.angles {
            return Err(Error::argument(format!(
                "matcher planned for {} angles, got {na}",
                self.angles
            )));
        }
        if na == 0 || nr == 0 {
            return Ok(0.0);
        }
        let mut fa = vec![Complex64::default(); na];
        let mut fb = vec![Complex64::default(); na];
        let mut cross = vec![Complex64::default(); na];
        let mut scratch = vec![Complex64::default(); self.forward.get_inplace_scratch_len()];
        for r in 0..nr {
            for i in 0..na {
                fa[i] = Complex64::new(a.spectrum[[i, r]], 0.0);
                fb[i] = Complex64::new(b.spectrum[[i, r]], 0.0);
            }
            self.forward.process_with_scratch(&mut fa, &mut scratch);
            self.forward.process_with_scratch(&mut fb, &mut scratch);
            for ((c, x), y) in cross.iter_mut().zip(&fa).zip(&fb) {
                *c += x.conj() * y;
            }
        }
        let mut scratch = vec![Complex64::default(); self.inverse.get_inplace_scratch_len()];
        self.inverse.process_with_scratch(&mut cross, &mut scratch);
        let best = cross.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        Ok(best / na as f64)
    }
}

/// Higher is more similar. See [`RaplaceMatcher::similarity`].
pub fn raplace_similarity(a: &RaplaceDescriptor, b: &RaplaceDescriptor) -> Result<f64> {
    RaplaceMatcher::new(a.spectrum.nrows()).similarity(a, b)
}
