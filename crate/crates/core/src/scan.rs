//! Polar scan representation, ingestion and preprocessing.
//!
//! A [`PolarScan`] is an `H x W` raster of received power: one row per
//! azimuth (uniformly spaced, row `j` at angle `2*pi*j/H`) and one column per
//! range bin. Range bin `b` is taken to sit at range `b * range_resolution_m`.

use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

const PRSN_MAGIC: &[u8; 4] = b"PRSN";
const PRSN_HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

/// Received power over azimuths x range bins.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarScan {
    power: Array2<f64>,
    range_resolution_m: f64,
    pub timestamp_ns: u64,
    pub id: String,
}

impl PolarScan {
    /// Validates shape, sign and finiteness of `power`.
    pub fn new(
        power: Array2<f64>,
        range_resolution_m: f64,
        timestamp_ns: u64,
        id: impl Into<String>,
    ) -> Result<Self> {
        let (h, w) = power.dim();
        if h == 0 || w == 0 {
            return Err(Error::argument(format!(
                "polar scan must be non-empty, got {h}x{w}"
            )));
        }
        if !(range_resolution_m.is_finite() && range_resolution_m > 0.0) {
            return Err(Error::argument(format!(
                "range resolution must be positive, got {range_resolution_m}"
            )));
        }
        if let Some(bad) = power.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Numeric(format!(
                "polar power must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Self {
            power,
            range_resolution_m,
            timestamp_ns,
            id: id.into(),
        })
    }

    pub fn azimuth_count(&self) -> usize {
        self.power.nrows()
    }

    pub fn range_bin_count(&self) -> usize {
        self.power.ncols()
    }

    pub fn range_resolution_m(&self) -> f64 {
        self.range_resolution_m
    }

    pub fn power(&self) -> &Array2<f64> {
        &self.power
    }

    /// Maximum range covered by the raster.
    pub fn max_range_m(&self) -> f64 {
        self.range_bin_count() as f64 * self.range_resolution_m
    }

    fn with_power(&self, power: Array2<f64>, range_resolution_m: f64) -> Self {
        Self {
            power,
            range_resolution_m,
            timestamp_ns: self.timestamp_ns,
            id: self.id.clone(),
        }
    }

    /// Serialises into the native `PRSN` binary format.
    pub fn to_prsn_bytes(&self) -> Vec<u8> {
        let (h, w) = self.power.dim();
        let mut out = Vec::with_capacity(PRSN_HEADER_LEN + h * w * 4);
        out.extend_from_slice(PRSN_MAGIC);
        out.extend_from_slice(&(h as u32).to_le_bytes());
        out.extend_from_slice(&(w as u32).to_le_bytes());
        out.extend_from_slice(&self.range_resolution_m.to_le_bytes());
        out.extend_from_slice(&self.timestamp_ns.to_le_bytes());
        for v in self.power.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    /// Parses the native `PRSN` binary format. `path` is used for diagnostics
    /// and `id`.
    pub fn from_prsn_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < PRSN_HEADER_LEN || &bytes[..4] != PRSN_MAGIC {
            return Err(Error::ingest(path, "missing PRSN header"));
        }
        let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let res = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let ts = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let payload = &bytes[PRSN_HEADER_LEN..];
        if payload.len() != h * w * 4 {
            return Err(Error::ingest(
                path,
                format!(
                    "expected {} payload bytes for {h}x{w}, found {}",
                    h * w * 4,
                    payload.len()
                ),
            ));
        }
        let samples = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect::<Vec<_>>();
        let power = Array2::from_shape_vec((h, w), samples).expect("length checked");
        Self::new(power, res, ts, file_id(path)).map_err(|e| Error::ingest(path, e.to_string()))
    }

    pub fn read_prsn(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::ingest(path, e.to_string()))?;
        Self::from_prsn_bytes(&bytes, path)
    }

    pub fn write_prsn(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_prsn_bytes())?;
        Ok(())
    }
}

fn file_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Square Cartesian image with the sensor at the centre.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianScan {
    pub width_px: usize,
    pub resolution_m: f64,
    pub pixels: Array2<f64>,
}

impl CartesianScan {
    pub fn max_range_m(&self) -> f64 {
        self.width_px as f64 / 2.0 * self.resolution_m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleEncoding {
    U8,
    F32Le,
}

impl SampleEncoding {
    fn width(self) -> usize {
        match self {
            SampleEncoding::U8 => 1,
            SampleEncoding::F32Le => 4,
        }
    }
}

impl std::str::FromStr for SampleEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u8" => Ok(SampleEncoding::U8),
            "f32" | "f32-le" | "f32le" => Ok(SampleEncoding::F32Le),
            other => Err(Error::argument(format!(
                "unknown sample encoding `{other}`"
            ))),
        }
    }
}

/// Layout of a raw raster file: `rows` records of `header_bytes_per_row`
/// ignored bytes followed by `payload_bins` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterLayout {
    pub rows: usize,
    pub header_bytes_per_row: usize,
    pub payload_bins: usize,
    pub encoding: SampleEncoding,
    pub range_resolution_m: f64,
}

impl RasterLayout {
    fn row_stride(&self) -> usize {
        self.header_bytes_per_row + self.payload_bins * self.encoding.width()
    }
}

/// Reads a raw raster file. The timestamp is taken from the file stem when it
/// parses as an integer, otherwise it is 0.
pub fn load_polar_scan(path: &Path, layout: &RasterLayout) -> Result<PolarScan> {
    let bytes = fs::read(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    decode_raster(&bytes, layout, path)
}

pub(crate) fn decode_raster(bytes: &[u8], layout: &RasterLayout, path: &Path) -> Result<PolarScan> {
    if layout.rows == 0 || layout.payload_bins == 0 {
        return Err(Error::argument(
            "raster layout needs at least one row and one bin",
        ));
    }
    let stride = layout.row_stride();
    let needed = stride * layout.rows;
    if bytes.len() < needed {
        return Err(Error::ingest(
            path,
            format!(
                "truncated raster: expected {needed} bytes, found {}",
                bytes.len()
            ),
        ));
    }
    let mut samples = Vec::with_capacity(layout.rows * layout.payload_bins);
    for row in 0..layout.rows {
        let start = row * stride + layout.header_bytes_per_row;
        let payload = &bytes[start..start + layout.payload_bins * layout.encoding.width()];
        match layout.encoding {
            SampleEncoding::U8 => samples.extend(payload.iter().map(|&b| b as f64 / 255.0)),
            SampleEncoding::F32Le => {
                for (bin, chunk) in payload.chunks_exact(4).enumerate() {
                    let v = f32::from_le_bytes(chunk.try_into().unwrap());
                    if !v.is_finite() {
                        return Err(Error::ingest(
                            path,
                            format!("non-finite sample at row {row}, bin {bin}"),
                        ));
                    }
                    samples.push(v as f64);
                }
            }
        }
    }
    let power = Array2::from_shape_vec((layout.rows, layout.payload_bins), samples)
        .expect("sample count matches layout");
    let id = file_id(path);
    let timestamp_ns = id.parse::<u64>().unwrap_or(0);
    PolarScan::new(power, layout.range_resolution_m, timestamp_ns, id)
        .map_err(|e| Error::ingest(path, e.to_string()))
}

/// One ground-truth position sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub timestamp_ns: i64,
    pub easting_m: f64,
    pub northing_m: f64,
}

impl Pose {
    pub fn planar_distance(&self, other: &Pose) -> f64 {
        (self.easting_m - other.easting_m).hypot(self.northing_m - other.northing_m)
    }
}

/// Time-ordered ground-truth positions of one trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryPoses {
    entries: Vec<Pose>,
}

pub const POSES_HEADER: &str = "timestamp_ns,easting_m,northing_m";

impl TrajectoryPoses {
    /// Fails unless timestamps are strictly increasing and coordinates finite.
    pub fn new(entries: Vec<Pose>) -> Result<Self> {
        for (i, p) in entries.iter().enumerate() {
            if !(p.easting_m.is_finite() && p.northing_m.is_finite()) {
                return Err(Error::argument(format!(
                    "pose {i} has non-finite coordinates"
                )));
            }
        }
        if let Some(i) = entries
            .windows(2)
            .position(|w| w[1].timestamp_ns <= w[0].timestamp_ns)
        {
            return Err(Error::argument(format!(
                "pose timestamps not strictly increasing at entry {}",
                i + 1
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Pose] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pose with the closest timestamp; earlier pose wins ties.
    pub fn nearest(&self, timestamp_ns: i64) -> Option<&Pose> {
        let idx = self
            .entries
            .partition_point(|p| p.timestamp_ns < timestamp_ns);
        let after = self.entries.get(idx);
        let before = idx.checked_sub(1).and_then(|i| self.entries.get(i));
        match (before, after) {
            (Some(b), Some(a)) => {
                let db = timestamp_ns.abs_diff(b.timestamp_ns);
                let da = a.timestamp_ns.abs_diff(timestamp_ns);
                Some(if da < db { a } else { b })
            }
            (b, a) => b.or(a),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(POSES_HEADER);
        out.push('\n');
        for p in &self.entries {
            out.push_str(&format!(
                "{},{},{}\n",
                p.timestamp_ns, p.easting_m, p.northing_m
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Reads a `timestamp_ns,easting_m,northing_m` CSV.
pub fn load_poses(path: &Path) -> Result<TrajectoryPoses> {
    let text = fs::read_to_string(path).map_err(|e| Error::ingest(path, e.to_string()))?;
    parse_poses(&text, path)
}

pub(crate) fn parse_poses(text: &str, path: &Path) -> Result<TrajectoryPoses> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == POSES_HEADER => {}
        _ => {
            return Err(Error::ingest(
                path,
                format!("expected header `{POSES_HEADER}`"),
            ))
        }
    }
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = lineno + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [t, e, n] => t
                .parse::<i64>()
                .ok()
                .zip(e.parse::<f64>().ok())
                .zip(n.parse::<f64>().ok())
                .filter(|((_, e), n)| e.is_finite() && n.is_finite()),
            _ => None,
        };
        let Some(((timestamp_ns, easting_m), northing_m)) = parsed else {
            return Err(Error::ingest(
                path,
                format!("unparsable pose at line {row}: `{line}`"),
            ));
        };
        if let Some(prev) = entries.last().map(|p: &Pose| p.timestamp_ns) {
            if timestamp_ns <= prev {
                return Err(Error::ingest(
                    path,
                    format!("timestamp {timestamp_ns} at line {row} does not increase (previous {prev})"),
                ));
            }
        }
        entries.push(Pose {
            timestamp_ns,
            easting_m,
            northing_m,
        });
    }
    Ok(TrajectoryPoses { entries })
}

/// Zeroes range bins `[0, n_bins)`.
pub fn suppress_near_range(scan: &PolarScan, n_bins: usize) -> Result<PolarScan> {
    let w = scan.range_bin_count();
    if n_bins > w {
        return Err(Error::argument(format!(
            "cannot suppress {n_bins} bins of a {w}-bin scan"
        )));
    }
    let mut power = scan.power.clone();
    power
        .columns_mut()
        .into_iter()
        .take(n_bins)
        .for_each(|mut c| c.fill(0.0));
    Ok(scan.with_power(power, scan.range_resolution_m))
}

/// Keeps range bins `[0, max_bins)`, i.e. limits the maximum range.
pub fn crop_range(scan: &PolarScan, max_bins: usize) -> Result<PolarScan> {
    let w = scan.range_bin_count();
    if max_bins == 0 || max_bins > w {
        return Err(Error::argument(format!(
            "cannot keep {max_bins} bins of a {w}-bin scan"
        )));
    }
    let power = scan.power.slice(ndarray::s![.., ..max_bins]).to_owned();
    Ok(scan.with_power(power, scan.range_resolution_m))
}

/// Resamples the range axis only, to `target_bins` columns.
pub fn resample_range(scan: &PolarScan, target_bins: usize) -> Result<PolarScan> {
    if target_bins == 0 {
        return Err(Error::argument("target_bins must be at least 1"));
    }
    let w = scan.range_bin_count();
    if target_bins == w {
        return Ok(scan.clone());
    }
    let h = scan.azimuth_count();
    let mut power = Array2::zeros((h, target_bins));
    for (src, mut dst) in scan.power.rows().into_iter().zip(power.rows_mut()) {
        let out = resample_1d(src, target_bins);
        dst.iter_mut().zip(out).for_each(|(d, v)| *d = v);
    }
    let res = scan.range_resolution_m * w as f64 / target_bins as f64;
    Ok(scan.with_power(power, res))
}

/// Resamples the azimuth axis only. Used by the RingKey parameter sweep.
pub fn resample_azimuth(scan: &PolarScan, target_rows: usize) -> Result<PolarScan> {
    if target_rows == 0 {
        return Err(Error::argument("target azimuth count must be at least 1"));
    }
    if target_rows == scan.azimuth_count() {
        return Ok(scan.clone());
    }
    let mut power = Array2::zeros((target_rows, scan.range_bin_count()));
    for (src, mut dst) in scan.power.columns().into_iter().zip(power.columns_mut()) {
        let out = resample_1d(src, target_rows);
        dst.iter_mut().zip(out).for_each(|(d, v)| *d = v);
    }
    Ok(scan.with_power(power, scan.range_resolution_m))
}

/// Resamples a signal to `dst_len` samples: area-weighted box averaging when
/// shrinking, linear interpolation between sample centres when growing.
pub fn resample_1d(src: ArrayView1<'_, f64>, dst_len: usize) -> Vec<f64> {
    let n = src.len();
    if dst_len == n {
        return src.to_vec();
    }
    if dst_len < n {
        // Work on an integer grid of n*dst_len cells: input bin j spans
        // [j*dst_len, (j+1)*dst_len), output bin i spans [i*n, (i+1)*n).
        (0..dst_len)
            .map(|i| {
                let lo = i * n;
                let hi = lo + n;
                let mut acc = 0.0;
                let mut j = lo / dst_len;
                while j * dst_len < hi && j < n {
                    let overlap = hi.min((j + 1) * dst_len) - lo.max(j * dst_len);
                    acc += src[j] * overlap as f64;
                    j += 1;
                }
                acc / n as f64
            })
            .collect()
    } else {
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
}

/// Projects a polar scan onto a square Cartesian grid centred on the sensor.
///
/// Azimuth 0 points along +x (increasing column); bearings increase
/// counter-clockwise with +y pointing up the image (decreasing row).
pub fn polar_to_cartesian(
    scan: &PolarScan,
    width_px: usize,
    resolution_m: f64,
) -> Result<CartesianScan> {
    if width_px == 0 || !width_px.is_multiple_of(2) {
        return Err(Error::argument(format!(
            "width_px must be even and positive, got {width_px}"
        )));
    }
    if !(resolution_m.is_finite() && resolution_m > 0.0) {
        return Err(Error::argument(format!(
            "resolution must be positive, got {resolution_m}"
        )));
    }
    let h = scan.azimuth_count();
    let w = scan.range_bin_count();
    let centre = width_px as f64 / 2.0;
    let az_per_rad = h as f64 / TAU;
    let bins_per_m = 1.0 / scan.range_resolution_m;
    let power = &scan.power;

    let mut pixels = Array2::zeros((width_px, width_px));
    for ((row, col), px) in pixels.indexed_iter_mut() {
        let x = (col as f64 + 0.5 - centre) * resolution_m;
        let y = (centre - (row as f64 + 0.5)) * resolution_m;
        let bin = x.hypot(y) * bins_per_m;
        if bin >= w as f64 {
            continue;
        }
        let az = y.atan2(x).rem_euclid(TAU) * az_per_rad;
        let a0 = (az.floor() as usize) % h;
        let a1 = (a0 + 1) % h;
        let ta = az - az.floor();
        let b0 = bin.floor() as usize;
        let b1 = (b0 + 1).min(w - 1);
        let tb = bin - b0 as f64;
        let near = power[[a0, b0]] * (1.0 - tb) + power[[a0, b1]] * tb;
        let far = power[[a1, b0]] * (1.0 - tb) + power[[a1, b1]] * tb;
        *px = near * (1.0 - ta) + far * ta;
    }
    Ok(CartesianScan {
        width_px,
        resolution_m,
        pixels,
    })
}
