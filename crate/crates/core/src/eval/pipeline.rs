use std::fmt::Write as _;

use ndarray::{concatenate, Array2, Axis};
use rayon::prelude::*;

use crate::codebook::{fit_kmeans_pp, Codebook};
use crate::config::{Method, RunConfig};
use crate::descriptors::{
    encode_ring_key, encode_vlad, squared_euclidean, Descriptor, RaplaceEncoder, RaplaceMatcher,
    RingKeyDescriptor, VectorDescriptor,
};
use crate::error::{Error, Result};
use crate::scan::{
    crop_range, resample_azimuth, resample_range, suppress_near_range, PolarScan, Pose,
    TrajectoryPoses,
};
use crate::spectral::RadialFft;

use super::{
    downsample_trajectory, ground_truth_matrix, recall_at_n, DistanceMatrix, GroundTruthMatrix,
    RecallCurve,
};

pub const RESULTS_HEADER: &str = "query_traj,ref_traj,method,N,recall_pct,evaluated,skipped";

/// Scans of one traversal with their ground-truth poses.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub name: String,
    pub scans: Vec<PolarScan>,
    pub poses: TrajectoryPoses,
}

impl Trajectory {
    /// Pose with the nearest timestamp for every scan.
    pub fn scan_poses(&self, scans: &[PolarScan]) -> Result<Vec<Pose>> {
        scans
            .iter()
            .map(|s| {
                self.poses
                    .nearest(s.timestamp_ns as i64)
                    .copied()
                    .ok_or_else(|| {
                        Error::argument(format!("trajectory `{}` has no poses", self.name))
                    })
            })
            .collect()
    }
}

/// Turns scans into descriptors for one method and compares them.
#[derive(Clone)]
pub struct PlaceEncoder {
    cfg: RunConfig,
    codebook: Option<Codebook>,
    fft: RadialFft,
    raplace: Option<(RaplaceEncoder, RaplaceMatcher)>,
}

impl PlaceEncoder {
    /// VLAD methods require a codebook whose dimension equals `target_bins`.
    pub fn new(cfg: &RunConfig, codebook: Option<Codebook>) -> Result<Self> {
        cfg.validate()?;
        if cfg.method.uses_codebook() {
            let cb = codebook
                .as_ref()
                .ok_or_else(|| Error::argument(format!("{} needs a codebook", cfg.method)))?;
            if cb.dim() != cfg.target_bins {
                return Err(Error::argument(format!(
                    "codebook dimension {} does not match target_bins {}",
                    cb.dim(),
                    cfg.target_bins
                )));
            }
        }
        let raplace = match cfg.method {
            Method::RaPlace => {
                let enc = RaplaceEncoder::new(cfg.raplace)?;
                let matcher = RaplaceMatcher::new(cfg.raplace.angles());
                Some((enc, matcher))
            }
            _ => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            codebook,
            fft: RadialFft::new(cfg.target_bins),
            raplace,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn codebook(&self) -> Option<&Codebook> {
        self.codebook.as_ref()
    }

    /// Near-range suppression followed by range resampling.
    pub fn preprocess(&self, scan: &PolarScan, bins: usize) -> Result<PolarScan> {
        resample_range(&suppress_near_range(scan, self.cfg.suppress_bins)?, bins)
    }

    /// Rows clustered by the VLAD methods: preprocessed power for RadVLAD,
    /// radial FFT magnitudes for FFT-RadVLAD.
    pub fn local_features(&self, scan: &PolarScan) -> Result<Array2<f64>> {
        local_features(&self.cfg, &self.fft, scan)
    }

    pub fn encode(&self, scan: &PolarScan) -> Result<Descriptor> {
        match self.cfg.method {
            Method::RingKey => self.encode_ring_key(scan).map(Descriptor::RingKey),
            Method::RaPlace => {
                let (enc, _) = self.raplace.as_ref().expect("built for raplace");
                enc.encode(scan).map(Descriptor::Raplace)
            }
            Method::RadVlad | Method::FftRadVlad => {
                let rows = self.local_features(scan)?;
                let cb = self.codebook.as_ref().expect("checked in new");
                let v = encode_vlad(rows.view(), cb)?;
                Ok(Descriptor::Vlad(if self.cfg.vlad_l2_normalise {
                    v.l2_normalised()
                } else {
                    v
                }))
            }
        }
    }

    fn encode_ring_key(&self, scan: &PolarScan) -> Result<RingKeyDescriptor> {
        let rk = self.cfg.ring_key;
        let mut pre = suppress_near_range(scan, self.cfg.suppress_bins)?;
        if let Some(bins) = rk.bins {
            pre = crop_range(&pre, bins)?;
        }
        pre = resample_range(&pre, rk.length.unwrap_or(self.cfg.target_bins))?;
        if let Some(azimuths) = rk.azimuths {
            pre = resample_azimuth(&pre, azimuths)?;
        }
        Ok(encode_ring_key(&pre))
    }

    /// Lower is more similar. RaPlace similarities are negated.
    pub fn distance(&self, a: &Descriptor, b: &Descriptor) -> Result<f64> {
        match (a, b) {
            (Descriptor::RingKey(a), Descriptor::RingKey(b)) => {
                squared_euclidean(a.values(), b.values())
            }
            (Descriptor::Vlad(a), Descriptor::Vlad(b)) => squared_euclidean(a.values(), b.values()),
            (Descriptor::Raplace(a), Descriptor::Raplace(b)) => {
                let (_, matcher) = self
                    .raplace
                    .as_ref()
                    .ok_or_else(|| Error::argument("encoder not configured for raplace"))?;
                matcher.similarity(a, b).map(|s| -s)
            }
            _ => Err(Error::argument(
                "cannot compare descriptors of different kinds",
            )),
        }
    }
}

fn local_features(cfg: &RunConfig, fft: &RadialFft, scan: &PolarScan) -> Result<Array2<f64>> {
    let pre = resample_range(
        &suppress_near_range(scan, cfg.suppress_bins)?,
        cfg.target_bins,
    )?;
    match cfg.method {
        Method::FftRadVlad => fft.magnitude_rows_serial(pre.power().view()),
        _ => Ok(pre.power().clone()),
    }
}

/// Fits the codebook of a VLAD method on every row of every reference scan.
pub fn fit_reference_codebook(cfg: &RunConfig, scans: &[PolarScan]) -> Result<Codebook> {
    if !cfg.method.uses_codebook() {
        return Err(Error::argument(format!(
            "{} does not use a codebook",
            cfg.method
        )));
    }
    if scans.is_empty() {
        return Err(Error::argument("no reference scans to fit a codebook on"));
    }
    cfg.validate()?;
    let fft = RadialFft::new(cfg.target_bins);
    let blocks = scans
        .par_iter()
        .map(|s| local_features(cfg, &fft, s))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let stacked = concatenate(Axis(0), &views).expect("equal widths");
    fit_kmeans_pp(stacked.view(), &cfg.kmeans_params())
}

/// Everything produced by one query/reference evaluation.
#[derive(Clone, Debug)]
pub struct EvalRun {
    pub query_name: String,
    pub reference_name: String,
    pub method: Method,
    pub distances: DistanceMatrix,
    pub ground_truth: GroundTruthMatrix,
    pub recall: RecallCurve,
    pub codebook: Option<Codebook>,
}

impl EvalRun {
    /// Rows of the results CSV (without header).
    pub fn results_rows(&self) -> String {
        let mut out = String::new();
        for (n, r) in self.recall.n_values.iter().zip(&self.recall.recall_pct) {
            writeln!(
                out,
                "{},{},{},{},{:.6},{},{}",
                self.query_name,
                self.reference_name,
                self.method,
                n,
                r,
                self.recall.evaluated_queries,
                self.recall.skipped
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn results_csv(&self) -> String {
        format!("{RESULTS_HEADER}\n{}", self.results_rows())
    }
}

/// Localises every (downsampled) query scan against the reference map.
pub fn run_pair(query: &Trajectory, reference: &Trajectory, cfg: &RunConfig) -> Result<EvalRun> {
    run_pair_with(query, reference, cfg, None)
}

/// As [`run_pair`], reusing `codebook` instead of fitting one when given.
pub fn run_pair_with(
    query: &Trajectory,
    reference: &Trajectory,
    cfg: &RunConfig,
    codebook: Option<Codebook>,
) -> Result<EvalRun> {
    cfg.validate()?;
    let q_scans = downsample_trajectory(&query.scans, cfg.stride)?;
    let r_scans = downsample_trajectory(&reference.scans, cfg.stride)?;
    if q_scans.is_empty() || r_scans.is_empty() {
        return Err(Error::argument(
            "query and reference need at least one scan",
        ));
    }
    let q_poses = query.scan_poses(&q_scans)?;
    let r_poses = reference.scan_poses(&r_scans)?;

    let codebook = match (cfg.method.uses_codebook(), codebook) {
        (false, _) => None,
        (true, Some(cb)) => Some(cb),
        (true, None) => Some(fit_reference_codebook(cfg, &r_scans)?),
    };
    let encoder = PlaceEncoder::new(cfg, codebook)?;

    let encode_all = |scans: &[PolarScan]| -> Result<Vec<Descriptor>> {
        scans.par_iter().map(|s| encoder.encode(s)).collect()
    };
    let q_desc = encode_all(&q_scans)?;
    let r_desc = encode_all(&r_scans)?;

    let rows = q_desc
        .par_iter()
        .map(|q| {
            r_desc
                .iter()
                .map(|r| encoder.distance(q, r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values =
        Array2::from_shape_vec((q_desc.len(), r_desc.len()), rows.concat()).expect("rectangular");
    let distances = DistanceMatrix::new(values)?;
    let ground_truth = ground_truth_matrix(&q_poses, &r_poses, cfg.threshold_m)?;
    let recall = recall_at_n(&distances, &ground_truth, cfg.n_max)?;

    Ok(EvalRun {
        query_name: query.name.clone(),
        reference_name: reference.name.clone(),
        method: cfg.method,
        distances,
        ground_truth,
        recall,
        codebook: encoder.codebook,
    })
}
