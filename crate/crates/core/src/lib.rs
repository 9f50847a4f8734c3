//! Radar place recognition from polar scans.
//!
//! The main pipeline takes each azimuth of a polar radar scan, computes the
//! magnitude of its radial DFT, and aggregates those vectors against a
//! k-means++ codebook into a VLAD descriptor. Places are retrieved by
//! squared Euclidean distance. Two baselines sit alongside it: RingKey
//! (azimuth-averaged power) and RaPlace (Radon sinogram spectra matched by
//! circular cross-correlation). The same VLAD encoder without the FFT step
//! is included as an ablation.
//!
//! Modules:
//!
//! - [`scan`]: polar scans, ingestion, near-range suppression, range
//!   resampling and Cartesian projection.
//! - [`spectral`]: radial FFT magnitudes plus a direct DFT reference.
//! - [`codebook`]: k-means++ fitting and nearest-centre assignment.
//! - [`descriptors`]: the four encoders and their comparison functions.
//! - [`eval`]: ground truth, Recall@N, trajectory-pair runs, timing.
//! - [`synthetic`]: seeded point-reflector worlds for desk-scale experiments.
//! - [`config`]: [`RunConfig`] and its `key = value` file format.

pub mod codebook;
pub mod config;
pub mod descriptors;
pub mod error;
pub mod eval;
pub mod rundir;
pub mod scan;
pub mod spectral;
pub mod synthetic;

pub use codebook::{fit_kmeans_pp, Codebook, KMeansParams};
pub use config::{Method, RunConfig};
pub use descriptors::{
    descriptor_distance, encode_raplace, encode_ring_key, encode_vlad, radon_sinogram,
    raplace_similarity, Descriptor, RaplaceConfig, RaplaceDescriptor, RingKeyDescriptor,
    VladDescriptor,
};
pub use error::{Error, Result};
pub use eval::{
    bench_timings, downsample_trajectory, ground_truth_matrix, recall_at_n, run_pair,
    DistanceMatrix, EvalRun, GroundTruthMatrix, RecallCurve, TimingReport, Trajectory,
};
pub use scan::{
    crop_range, load_polar_scan, load_poses, polar_to_cartesian, resample_range,
    suppress_near_range, CartesianScan, PolarScan, Pose, RasterLayout, SampleEncoding,
    TrajectoryPoses,
};
pub use spectral::{naive_dft_magnitude, radial_fft_magnitude, SpectralScan};
pub use synthetic::{
    build_scenario, generate_scene, render_polar, ReflectorScene, RenderParams, Scenario,
    ScenarioKind, SensorPose,
};
