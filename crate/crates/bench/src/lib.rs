//! Fixtures for the descriptor benchmarks.

use radvlad_core::{generate_scene, render_polar, PolarScan, RenderParams, SensorPose};

/// Noisy full-size scans (400 azimuths x 3768 bins at 4.32 cm) of one
/// synthetic scene from nearby poses.
pub fn full_size_scans(n: usize, seed: u64) -> Vec<PolarScan> {
    let scene = generate_scene(300, 200.0, seed);
    let params = RenderParams {
        azimuths: 400,
        range_bins: 3768,
        max_range_m: 3768.0 * 0.0432,
        beam_sigma_bins: 2.0,
        noise_sigma: 0.05,
        seed,
    };
    (0..n)
        .map(|i| {
            let pose = SensorPose::new(3.0 * i as f64, 0.0, 0.3 * i as f64);
            render_polar(&scene, &pose, &params).expect("valid render parameters")
        })
        .collect()
}
