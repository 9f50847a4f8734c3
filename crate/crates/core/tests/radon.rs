mod common;

use std::f64::consts::{PI, TAU};

use ndarray::{s, Array2, Axis};

use radvlad_core::*;

fn image(pixels: Array2<f64>) -> CartesianScan {
    CartesianScan {
        width_px: pixels.nrows(),
        resolution_m: 1.0,
        pixels,
    }
}

fn gaussian_disc(d: usize, sigma: f64) -> Array2<f64> {
    let c = d as f64 / 2.0;
    Array2::from_shape_fn((d, d), |(r, col)| {
        let x = col as f64 + 0.5 - c;
        let y = r as f64 + 0.5 - c;
        (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    })
}

fn rel_row_diff(sino: &Array2<f64>, a: usize, b: usize) -> f64 {
    let scale = sino.row(b).iter().fold(0.0f64, |m, v| m.max(*v));
    common::linf(
        sino.row(a).as_slice().unwrap(),
        sino.row(b).as_slice().unwrap(),
    ) / scale
}

#[test]
fn centred_disc_rows_agree_at_quarter_turns() {
    // At multiples of 90 degrees the rotation maps pixel centres onto pixel
    // centres, so projections of a symmetric image agree to rounding.
    let sino = radon_sinogram(&image(gaussian_disc(64, 6.0)), 8).unwrap();
    assert!(
        rel_row_diff(&sino, 4, 0) <= 1e-6,
        "{}",
        rel_row_diff(&sino, 4, 0)
    );
}

#[test]
fn centred_disc_rows_agree_within_interpolation_error() {
    // Between quarter turns bilinear resampling smooths the disc slightly,
    // which bounds row agreement to about 1e-3 for this width.
    let sino = radon_sinogram(&image(gaussian_disc(64, 6.0)), 64).unwrap();
    let worst = (1..64)
        .map(|a| rel_row_diff(&sino, a, 0))
        .fold(0.0f64, f64::max);
    assert!(worst <= 5e-3, "{worst}");
    // Every projection of the disc carries the same total mass.
    let mass = sino.sum_axis(Axis(1));
    for m in mass.iter() {
        assert!((m - mass[0]).abs() <= 1e-2 * mass[0], "{m} vs {}", mass[0]);
    }
}

#[test]
fn off_centre_pixel_traces_its_sinusoid() {
    let d = 64;
    let centre = d as f64 / 2.0;
    // Pixels inside the inscribed circle, so every projection lands on the detector.
    for &(r, c) in &[(10usize, 40usize), (50, 12), (31, 55), (12, 20)] {
        let mut px = Array2::zeros((d, d));
        px[[r, c]] = 1.0;
        let n_angles = 90;
        let sino = radon_sinogram(&image(px), n_angles).unwrap();
        let x = c as f64 + 0.5 - centre;
        let y = r as f64 + 0.5 - centre;
        for a in 0..n_angles {
            let phi = PI * a as f64 / n_angles as f64;
            let expected = x * phi.cos() + y * phi.sin() + centre - 0.5;
            let row = sino.row(a);
            let argmax = (0..d).fold(0, |b, t| if row[t] > row[b] { t } else { b });
            assert!(
                (argmax as f64 - expected).abs() <= 1.0,
                "pixel ({r},{c}) angle {a}: argmax {argmax}, expected {expected:.2}"
            );
        }
    }
}

#[test]
fn zero_image() {
    let sino = radon_sinogram(&image(Array2::zeros((16, 16))), 5).unwrap();
    assert_eq!(sino.dim(), (5, 16));
    assert!(sino.iter().all(|v| *v == 0.0));
}

fn point_scene_scan(heading: f64, azimuths: usize) -> PolarScan {
    let scene = generate_scene(60, 150.0, 42);
    let params = RenderParams {
        azimuths,
        range_bins: 512,
        max_range_m: 162.7776,
        beam_sigma_bins: 4.0,
        noise_sigma: 0.0,
        seed: 0,
    };
    render_polar(&scene, &SensorPose::new(0.0, 0.0, heading), &params).unwrap()
}

fn shifted_rel_l2(a: &Array2<f64>, b: &Array2<f64>, shift: usize) -> f64 {
    let n = a.nrows();
    let mut num = 0.0;
    for i in 0..n {
        let diff = &b.row(i) - &a.row((i + n - shift) % n);
        num += diff.dot(&diff);
    }
    (num / a.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[test]
fn raplace_rotation_is_row_shift() {
    // Angles cover half a turn, so one azimuth step of an H-azimuth scan
    // moves the spectrum by 2 * n_angles / H rows.
    let h = 128;
    let cfg = RaplaceConfig {
        width_px: 128,
        resolution_m: 162.7776 / 64.0,
        n_angles: Some(64),
        scale_pct: 25.0,
    };
    let base = encode_raplace(&point_scene_scan(0.0, h), &cfg).unwrap();
    for steps in [1usize, 3, 10] {
        let turned =
            encode_raplace(&point_scene_scan(TAU * steps as f64 / h as f64, h), &cfg).unwrap();
        let rows = 2 * 64 * steps / h;
        let err = shifted_rel_l2(base.spectrum(), turned.spectrum(), rows);
        assert!(err <= 0.02, "{steps} steps: relative L2 {err}");
    }
}

#[test]
fn raplace_similarity_shift_and_symmetry() {
    let mut r = common::rng(9);
    for _ in 0..50 {
        let a = common::random_matrix(&mut r, 12, 5);
        let b = common::random_matrix(&mut r, 12, 5);
        let da = RaplaceDescriptor::new(a.clone()).unwrap();
        let db = RaplaceDescriptor::new(b).unwrap();
        let ab = raplace_similarity(&da, &db).unwrap();
        let ba = raplace_similarity(&db, &da).unwrap();
        assert!(common::close(ab, ba, 1e-9), "{ab} vs {ba}");

        let mut rolled = a.clone();
        rolled.slice_mut(s![..7, ..]).assign(&a.slice(s![5.., ..]));
        rolled.slice_mut(s![7.., ..]).assign(&a.slice(s![..5, ..]));
        let self_sim = raplace_similarity(&da, &da).unwrap();
        let shifted = raplace_similarity(&da, &RaplaceDescriptor::new(rolled).unwrap()).unwrap();
        assert!(common::close(shifted, self_sim, 1e-9));
        let norm2: f64 = a.iter().map(|v| v * v).sum();
        assert!(common::close(self_sim, norm2, 1e-9));
    }
}

#[test]
fn raplace_defaults_project_to_full_range() {
    let cfg = RaplaceConfig::default();
    let scan = PolarScan::new(Array2::from_elem((8, 3768), 0.5), 0.0432, 0, "x").unwrap();
    assert!((scan.max_range_m() - 162.7776).abs() < 1e-9);
    let cart = polar_to_cartesian(&scan, cfg.width_px, cfg.resolution_m).unwrap();
    assert_eq!(cart.pixels.dim(), (256, 256));
    assert!((cart.max_range_m() - 256.0 * 1.2717 / 2.0).abs() < 1e-9);
}
