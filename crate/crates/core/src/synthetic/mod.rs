//! Seeded point-reflector worlds rendered into polar scans.
//!
//! Every reflector is drawn as a Gaussian blob at its (bearing, range)
//! relative to the sensor. There is no occlusion, speckle or multipath.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scan::{PolarScan, Pose, TrajectoryPoses};

mod scenario;

pub use scenario::{build_scenario, Scenario, ScenarioKind, ScenarioRun};

/// Blob contributions are cut at this many sigmas (`exp(-18)` < 2e-8).
const BLOB_CUTOFF_SIGMAS: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reflector {
    pub x_m: f64,
    pub y_m: f64,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReflectorScene {
    pub reflectors: Vec<Reflector>,
    pub extent_m: f64,
    pub seed: u64,
}

pub const SCENE_HEADER: &str = "x_m,y_m,intensity";

impl ReflectorScene {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SCENE_HEADER}\n");
        for r in &self.reflectors {
            out.push_str(&format!("{},{},{}\n", r.x_m, r.y_m, r.intensity));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses a scene CSV. `extent_m` is recovered as the largest absolute
    /// coordinate; the seed is unknown and set to 0.
    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(SCENE_HEADER) {
            return Err(Error::ingest(
                path,
                format!("expected header `{SCENE_HEADER}`"),
            ));
        }
        let mut reflectors = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    Error::ingest(path, format!("unparsable reflector at line {}", i + 2))
                })?;
            let [x_m, y_m, intensity] = vals[..] else {
                return Err(Error::ingest(
                    path,
                    format!("expected 3 fields at line {}", i + 2),
                ));
            };
            reflectors.push(Reflector {
                x_m,
                y_m,
                intensity,
            });
        }
        let extent_m = reflectors
            .iter()
            .map(|r| r.x_m.abs().max(r.y_m.abs()))
            .fold(0.0, f64::max);
        Ok(Self {
            reflectors,
            extent_m,
            seed: 0,
        })
    }
}

/// `n` reflectors uniform in `[-extent, extent]^2` with intensities in `(0, 1]`.
pub fn generate_scene(n_reflectors: usize, extent_m: f64, seed: u64) -> ReflectorScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reflectors = (0..n_reflectors)
        .map(|_| Reflector {
            x_m: rng.random_range(-extent_m..=extent_m),
            y_m: rng.random_range(-extent_m..=extent_m),
            intensity: 1.0 - rng.random::<f64>(),
        })
        .collect();
    ReflectorScene {
        reflectors,
        extent_m,
        seed,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorPose {
    pub x_m: f64,
    pub y_m: f64,
    /// Counter-clockwise from +x, in `[0, 2*pi)`.
    pub heading_rad: f64,
}

impl SensorPose {
    pub fn new(x_m: f64, y_m: f64, heading_rad: f64) -> Self {
        Self {
            x_m,
            y_m,
            heading_rad: heading_rad.rem_euclid(TAU),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderParams {
    pub azimuths: usize,
    pub range_bins: usize,
    pub max_range_m: f64,
    pub beam_sigma_bins: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl RenderParams {
    pub fn range_resolution_m(&self) -> f64 {
        self.max_range_m / self.range_bins as f64
    }
}

/// Renders the scene as seen from `pose`. Azimuth row `j` looks along
/// `heading + 2*pi*j/H`; range bin `b` sits at `b * max_range / W`.
pub fn render_polar(
    scene: &ReflectorScene,
    pose: &SensorPose,
    params: &RenderParams,
) -> Result<PolarScan> {
    let RenderParams {
        azimuths: h,
        range_bins: w,
        max_range_m,
        beam_sigma_bins: sigma,
        noise_sigma,
        seed,
    } = *params;
    if h == 0 || w == 0 {
        return Err(Error::argument(
            "render needs at least one azimuth and one range bin",
        ));
    }
    if !(max_range_m.is_finite() && max_range_m > 0.0) {
        return Err(Error::argument("max_range_m must be positive"));
    }
    if !(sigma.is_finite() && sigma > 0.0) || !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::argument(
            "beam sigma must be positive and noise sigma non-negative",
        ));
    }
    let res = params.range_resolution_m();
    let reach = BLOB_CUTOFF_SIGMAS * sigma;
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let mut power = Array2::<f64>::zeros((h, w));

    for r in &scene.reflectors {
        let dx = r.x_m - pose.x_m;
        let dy = r.y_m - pose.y_m;
        let bin = dx.hypot(dy) / res;
        if bin - reach > (w - 1) as f64 {
            continue;
        }
        let az = (dy.atan2(dx) - pose.heading_rad).rem_euclid(TAU) * h as f64 / TAU;
        let b_lo = (bin - reach).ceil().max(0.0) as usize;
        let b_hi = ((bin + reach).floor() as usize).min(w - 1);
        // Offsets relative to `az`, wrapped onto rows; covers each row once.
        let (o_lo, o_hi) = if 2.0 * reach + 1.0 >= h as f64 {
            let lo = (az - h as f64 / 2.0).ceil() as i64;
            (lo, lo + h as i64 - 1)
        } else {
            ((az - reach).ceil() as i64, (az + reach).floor() as i64)
        };
        for o in o_lo..=o_hi {
            let dj = o as f64 - az;
            let row = o.rem_euclid(h as i64) as usize;
            let mut line = power.row_mut(row);
            for b in b_lo..=b_hi {
                let db = b as f64 - bin;
                let d2 = dj * dj + db * db;
                if d2 <= reach * reach {
                    line[b] += r.intensity * (-d2 * inv_two_var).exp();
                }
            }
        }
    }

    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma validated");
        power.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    power.mapv_inplace(|v| v.clamp(0.0, 1.0));
    PolarScan::new(power, res, 0, "")
}

/// Layout of a synthetic route: places on a straight line along +x, every
/// `spacing_m` metres, through a uniform reflector field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldConfig {
    pub n_places: usize,
    pub spacing_m: f64,
    /// Average reflectors per disc of radius `visible_range_m`.
    pub reflectors_per_place: usize,
    pub visible_range_m: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub scene: ReflectorScene,
    pub places: Vec<SensorPose>,
}

/// Builds a square reflector field containing the route with a margin of
/// `visible_range_m` on every side.
pub fn generate_world(cfg: &WorldConfig) -> World {
    let half_route = cfg.spacing_m * cfg.n_places.saturating_sub(1) as f64 / 2.0;
    let extent = half_route + cfg.visible_range_m;
    let disc = std::f64::consts::PI * cfg.visible_range_m * cfg.visible_range_m;
    let density = cfg.reflectors_per_place as f64 / disc;
    let n = (density * 4.0 * extent * extent).round() as usize;
    let scene = generate_scene(n, extent, cfg.seed);
    let places = (0..cfg.n_places)
        .map(|i| SensorPose::new(-half_route + i as f64 * cfg.spacing_m, 0.0, 0.0))
        .collect();
    World { scene, places }
}

/// Renders one scan per pose. Pose `i` gets timestamp `i * 1e9` ns, id
/// `NNNNNN` and noise seed `params.seed + i`.
pub fn render_trajectory(
    scene: &ReflectorScene,
    poses: &[SensorPose],
    params: &RenderParams,
) -> Result<(Vec<PolarScan>, TrajectoryPoses)> {
    let mut scans = Vec::with_capacity(poses.len());
    let mut entries = Vec::with_capacity(poses.len());
    for (i, pose) in poses.iter().enumerate() {
        let p = RenderParams {
            seed: params.seed.wrapping_add(i as u64),
            ..*params
        };
        let mut scan = render_polar(scene, pose, &p)?;
        let ts = i as i64 * 1_000_000_000;
        scan.timestamp_ns = ts as u64;
        scan.id = format!("{i:06}");
        scans.push(scan);
        entries.push(Pose {
            timestamp_ns: ts,
            easting_m: pose.x_m,
            northing_m: pose.y_m,
        });
    }
    Ok((scans, TrajectoryPoses::new(entries)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RenderParams {
        RenderParams {
            azimuths: 64,
            range_bins: 100,
            max_range_m: 50.0,
            beam_sigma_bins: 1.5,
            noise_sigma: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn scenes_are_seeded() {
        assert!(generate_scene(0, 10.0, 1).reflectors.is_empty());
        assert_eq!(generate_scene(20, 10.0, 5), generate_scene(20, 10.0, 5));
        assert_ne!(generate_scene(20, 10.0, 5), generate_scene(20, 10.0, 6));
        let s = generate_scene(50, 30.0, 7);
        assert_eq!(s.reflectors.len(), 50);
        for r in &s.reflectors {
            assert!(r.x_m.abs() <= 30.0 && r.y_m.abs() <= 30.0);
            assert!(r.intensity > 0.0 && r.intensity <= 1.0);
        }
    }

    #[test]
    fn empty_scene_renders_black() {
        let scene = generate_scene(0, 10.0, 0);
        let scan = render_polar(&scene, &SensorPose::new(0.0, 0.0, 0.0), &params()).unwrap();
        assert!(scan.power().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dead_ahead_reflector() {
        let scene = ReflectorScene {
            reflectors: vec![Reflector {
                x_m: 25.0,
                y_m: 0.0,
                intensity: 0.8,
            }],
            extent_m: 25.0,
            seed: 0,
        };
        let scan = render_polar(&scene, &SensorPose::new(0.0, 0.0, 0.0), &params()).unwrap();
        let (mut best, mut arg) = (0.0, (9, 9));
        for ((j, b), v) in scan.power().indexed_iter() {
            if *v > best {
                best = *v;
                arg = (j, b);
            }
        }
        assert_eq!(arg, (0, 50));
        assert!((best - 0.8).abs() < 1e-9);
    }

    #[test]
    fn noise_is_clipped_and_seeded() {
        let scene = generate_scene(10, 40.0, 2);
        let p = RenderParams {
            noise_sigma: 0.3,
            ..params()
        };
        let a = render_polar(&scene, &SensorPose::new(1.0, 2.0, 0.3), &p).unwrap();
        let b = render_polar(&scene, &SensorPose::new(1.0, 2.0, 0.3), &p).unwrap();
        assert_eq!(a, b);
        assert!(a.power().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn scene_csv_round_trip() {
        let s = generate_scene(5, 12.0, 3);
        let back = ReflectorScene::from_csv(&s.to_csv(), Path::new("s.csv")).unwrap();
        assert_eq!(back.reflectors, s.reflectors);
    }

    #[test]
    fn world_density() {
        let w = generate_world(&WorldConfig {
            n_places: 5,
            spacing_m: 30.0,
            reflectors_per_place: 50,
            visible_range_m: 60.0,
            seed: 4,
        });
        assert_eq!(w.places.len(), 5);
        assert_eq!(w.places[0].x_m, -60.0);
        assert_eq!(w.places[4].x_m, 60.0);
        // 50 per disc of radius 60 over a 240 m square.
        let expected = (50.0 / (std::f64::consts::PI * 3600.0) * 240.0 * 240.0).round() as usize;
        assert_eq!(w.scene.reflectors.len(), expected);
    }
}
