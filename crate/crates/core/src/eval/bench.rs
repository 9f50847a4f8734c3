use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use crate::codebook::Codebook;
use crate::config::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::scan::PolarScan;

use super::pipeline::{fit_reference_codebook, PlaceEncoder};

pub const TIMING_HEADER: &str = "method,phase,sample_idx,seconds";

/// Wall-clock samples for building descriptors and comparing them.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingReport {
    pub method: Method,
    pub build_s: Vec<f64>,
    pub distance_s: Vec<f64>,
}

/// Nearest-rank percentile of `samples` (`p` in `[0, 100]`).
pub fn percentile(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

impl TimingReport {
    pub fn build_median(&self) -> Option<f64> {
        median(&self.build_s)
    }

    pub fn distance_median(&self) -> Option<f64> {
        median(&self.distance_s)
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (phase, samples) in [("build", &self.build_s), ("distance", &self.distance_s)] {
            for (i, s) in samples.iter().enumerate() {
                writeln!(out, "{},{phase},{i},{s:.9}", self.method).expect("writing to a String");
            }
        }
        out
    }

    /// One line per phase: median, p5 and p95 in milliseconds.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (phase, samples) in [("build", &self.build_s), ("distance", &self.distance_s)] {
            let ms = |v: Option<f64>| v.map_or("-".to_string(), |s| format!("{:.4}", s * 1e3));
            writeln!(
                out,
                "{:<12} {:<8} n={:<6} median={} ms p5={} ms p95={} ms",
                self.method.name(),
                phase,
                samples.len(),
                ms(median(samples)),
                ms(percentile(samples, 5.0)),
                ms(percentile(samples, 95.0)),
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Times `repetitions` descriptor builds (scan `i % n`) and as many pairwise
/// comparisons (descriptor `i % n` against `(i + 1) % n`), one at a time on
/// the calling thread.
///
/// VLAD methods use `codebook` when given, otherwise one is fitted on `scans`
/// before timing starts.
pub fn bench_timings(
    cfg: &RunConfig,
    scans: &[PolarScan],
    repetitions: usize,
    codebook: Option<Codebook>,
) -> Result<TimingReport> {
    let mut report = TimingReport {
        method: cfg.method,
        build_s: Vec::new(),
        distance_s: Vec::new(),
    };
    if repetitions == 0 {
        return Ok(report);
    }
    if scans.is_empty() {
        return Err(Error::argument("benchmark needs at least one scan"));
    }
    let codebook = match (cfg.method.uses_codebook(), codebook) {
        (false, _) => None,
        (true, Some(cb)) => Some(cb),
        (true, None) => Some(fit_reference_codebook(cfg, scans)?),
    };
    let encoder = PlaceEncoder::new(cfg, codebook)?;

    let mut descriptors = Vec::with_capacity(scans.len());
    report.build_s.reserve(repetitions);
    for i in 0..repetitions {
        let scan = &scans[i % scans.len()];
        let start = Instant::now();
        let d = black_box(encoder.encode(black_box(scan))?);
        report.build_s.push(start.elapsed().as_secs_f64());
        if descriptors.len() < scans.len() {
            descriptors.push(d);
        }
    }
    // Fewer repetitions than scans leaves some scans unencoded.
    for scan in &scans[descriptors.len()..] {
        descriptors.push(encoder.encode(scan)?);
    }

    let n = descriptors.len();
    report.distance_s.reserve(repetitions);
    for i in 0..repetitions {
        let (a, b) = (&descriptors[i % n], &descriptors[(i + 1) % n]);
        let start = Instant::now();
        black_box(encoder.distance(black_box(a), black_box(b))?);
        report.distance_s.push(start.elapsed().as_secs_f64());
    }
    Ok(report)
}
