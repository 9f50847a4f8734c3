//! Run configuration and the flat `key = value` config file format.

use std::fmt;
use std::str::FromStr;

use crate::codebook::KMeansParams;
use crate::descriptors::RaplaceConfig;
use crate::error::{Error, Result};

/// The four place-recognition methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Azimuth-averaged polar scan.
    RingKey,
    /// Radon sinogram spectrum matched by circular cross-correlation.
    RaPlace,
    /// VLAD over raw polar rows.
    RadVlad,
    /// VLAD over radial FFT magnitudes.
    FftRadVlad,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::RingKey,
        Method::RaPlace,
        Method::RadVlad,
        Method::FftRadVlad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::RingKey => "ringkey",
            Method::RaPlace => "raplace",
            Method::RadVlad => "radvlad",
            Method::FftRadVlad => "fft-radvlad",
        }
    }

    pub fn uses_codebook(self) -> bool {
        matches!(self, Method::RadVlad | Method::FftRadVlad)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "ringkey" | "ring-key" => Ok(Method::RingKey),
            "2" | "raplace" => Ok(Method::RaPlace),
            "3" | "radvlad" => Ok(Method::RadVlad),
            "4" | "fft-radvlad" | "fftradvlad" => Ok(Method::FftRadVlad),
            other => Err(Error::argument(format!(
                "unknown method `{other}` (expected ringkey, raplace, radvlad, fft-radvlad or 1-4)"
            ))),
        }
    }
}

/// Optional RingKey reshaping used by the parameter sweep: the azimuth count
/// the scan is resampled to before pooling, the raw range bins kept (maximum
/// range), and the length of the pooled vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RingKeyConfig {
    pub azimuths: Option<usize>,
    pub bins: Option<usize>,
    pub length: Option<usize>,
}

/// Every tunable of a localisation run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub suppress_bins: usize,
    pub target_bins: usize,
    pub k: usize,
    pub kmeans_tol: f64,
    pub kmeans_seed: u64,
    pub kmeans_max_iter: usize,
    pub vlad_l2_normalise: bool,
    pub stride: usize,
    pub threshold_m: f64,
    pub n_max: usize,
    pub raplace: RaplaceConfig,
    pub ring_key: RingKeyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::FftRadVlad,
            suppress_bins: 60,
            target_bins: 512,
            k: 64,
            kmeans_tol: 1e-4,
            kmeans_seed: 0,
            kmeans_max_iter: 300,
            vlad_l2_normalise: false,
            stride: 10,
            threshold_m: 25.0,
            n_max: 50,
            raplace: RaplaceConfig::default(),
            ring_key: RingKeyConfig::default(),
        }
    }
}

/// `(key, description)` for every recognised config key.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    (
        "method",
        "ringkey | raplace | radvlad | fft-radvlad (default fft-radvlad)",
    ),
    (
        "suppress_bins",
        "near-range bins zeroed before resampling (default 60)",
    ),
    ("target_bins", "range bins after resampling (default 512)"),
    ("k", "codebook size (default 64)"),
    (
        "kmeans_tol",
        "relative inertia-decrease tolerance (default 1e-4)",
    ),
    ("kmeans_seed", "k-means++ seed (default 0)"),
    ("kmeans_max_iter", "Lloyd iteration cap (default 300)"),
    (
        "vlad_l2_normalise",
        "L2-normalise VLAD descriptors (default false)",
    ),
    ("stride", "keep every n-th scan (default 10)"),
    (
        "threshold_m",
        "ground-truth match radius in metres (default 25)",
    ),
    ("n_max", "largest N of Recall@N (default 50)"),
    ("raplace.width_px", "Cartesian image side (default 256)"),
    (
        "raplace.resolution_m",
        "Cartesian metres per pixel (default 1.2717)",
    ),
    (
        "raplace.n_angles",
        "sinogram angles over [0, pi) (default = width_px)",
    ),
    (
        "raplace.scale_pct",
        "sinogram radial scale in percent (default 25)",
    ),
    (
        "ring_key.azimuths",
        "RingKey azimuths before pooling (default: unchanged)",
    ),
    (
        "ring_key.bins",
        "RingKey raw range bins kept, i.e. maximum range (default: all)",
    ),
    (
        "ring_key.length",
        "RingKey vector length (default: target_bins)",
    ),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::argument(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::argument(format!(
            "bad boolean `{value}` for `{key}`"
        ))),
    }
}

impl RunConfig {
    pub fn kmeans_params(&self) -> KMeansParams {
        KMeansParams {
            k: self.k,
            tol: self.kmeans_tol,
            seed: self.kmeans_seed,
            max_iter: self.kmeans_max_iter,
        }
    }

    /// Sets one field from its dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "method" => self.method = value.parse()?,
            "suppress_bins" => self.suppress_bins = parse(key, value)?,
            "target_bins" => self.target_bins = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "kmeans_tol" => self.kmeans_tol = parse(key, value)?,
            "kmeans_seed" => self.kmeans_seed = parse(key, value)?,
            "kmeans_max_iter" => self.kmeans_max_iter = parse(key, value)?,
            "vlad_l2_normalise" => self.vlad_l2_normalise = parse_bool(key, value)?,
            "stride" => self.stride = parse(key, value)?,
            "threshold_m" => self.threshold_m = parse(key, value)?,
            "n_max" => self.n_max = parse(key, value)?,
            "raplace.width_px" => self.raplace.width_px = parse(key, value)?,
            "raplace.resolution_m" => self.raplace.resolution_m = parse(key, value)?,
            "raplace.n_angles" => self.raplace.n_angles = Some(parse(key, value)?),
            "raplace.scale_pct" => self.raplace.scale_pct = parse(key, value)?,
            "ring_key.azimuths" => self.ring_key.azimuths = Some(parse(key, value)?),
            "ring_key.bins" => self.ring_key.bins = Some(parse(key, value)?),
            "ring_key.length" => self.ring_key.length = Some(parse(key, value)?),
            other => return Err(Error::argument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a config file body: `key = value` lines, `#` comments.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::argument(format!("config line {}: expected `key = value`", i + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::argument(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_bins == 0 || self.k == 0 || self.stride == 0 || self.n_max == 0 {
            return Err(Error::argument(
                "target_bins, k, stride and n_max must be positive",
            ));
        }
        if !(self.threshold_m.is_finite() && self.threshold_m > 0.0) {
            return Err(Error::argument("threshold_m must be positive"));
        }
        self.raplace.validate()
    }
}
