//! Paired query/reference trajectories over a synthetic world.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::descriptors::RaplaceConfig;
use crate::error::{Error, Result};
use crate::eval::Trajectory;

use super::{generate_world, render_trajectory, RenderParams, SensorPose, World, WorldConfig};

/// How query poses differ from the reference places.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Same positions, headings turned by a random whole number of azimuths.
    Rotation,
    /// Positions moved by a random offset, headings unchanged.
    Translation,
    /// Query is the reference trajectory itself.
    SelfMatch,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Rotation => "rotation",
            ScenarioKind::Translation => "translation",
            ScenarioKind::SelfMatch => "self",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotation" => Ok(ScenarioKind::Rotation),
            "translation" => Ok(ScenarioKind::Translation),
            "self" => Ok(ScenarioKind::SelfMatch),
            other => Err(Error::argument(format!(
                "unknown scenario `{other}` (expected rotation, translation or self)"
            ))),
        }
    }
}

/// World, sensor and pipeline settings of a synthetic experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub world: WorldConfig,
    pub render: RenderParams,
    pub run: RunConfig,
    /// Translation magnitudes are drawn uniformly from this range.
    pub shift_range_m: (f64, f64),
    /// Seeds the query perturbations and query noise, so one world can be
    /// revisited by several query traversals.
    pub query_seed: u64,
}

impl Scenario {
    /// Desk-scale settings: 50 places 30 m apart, about 50 reflectors within
    /// sensor range of each, 128 x 256 scans out to 80 m.
    pub fn desk(seed: u64) -> Self {
        let max_range_m = 80.0;
        let render = RenderParams {
            azimuths: 128,
            range_bins: 256,
            max_range_m,
            beam_sigma_bins: 2.0,
            noise_sigma: 0.0,
            seed: seed.wrapping_mul(1_000_003),
        };
        let raplace = RaplaceConfig {
            width_px: 128,
            resolution_m: max_range_m / 64.0,
            n_angles: None,
            scale_pct: 25.0,
        };
        let run = RunConfig {
            suppress_bins: 0,
            target_bins: 256,
            k: 16,
            stride: 1,
            n_max: 10,
            raplace,
            ..RunConfig::default()
        };
        Self {
            world: WorldConfig {
                n_places: 50,
                spacing_m: 30.0,
                reflectors_per_place: 50,
                visible_range_m: max_range_m,
                seed,
            },
            render,
            run,
            shift_range_m: (1.0, 5.0),
            query_seed: seed,
        }
    }
}

/// A reference traversal of every place and a perturbed query traversal.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub world: World,
    pub reference: Trajectory,
    pub query: Trajectory,
    pub query_poses: Vec<SensorPose>,
}

/// Renders reference and query trajectories for `kind`. Query perturbations
/// and noise draw from `query_seed`.
pub fn build_scenario(scenario: &Scenario, kind: ScenarioKind) -> Result<ScenarioRun> {
    let (lo, hi) = scenario.shift_range_m;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(Error::argument(format!("bad shift range {lo}..{hi}")));
    }
    let world = generate_world(&scenario.world);
    let (ref_scans, ref_poses) = render_trajectory(&world.scene, &world.places, &scenario.render)?;
    let reference = Trajectory {
        name: format!("synth-{}-ref", scenario.world.seed),
        scans: ref_scans,
        poses: ref_poses,
    };
    if kind == ScenarioKind::SelfMatch {
        return Ok(ScenarioRun {
            query: reference.clone(),
            query_poses: world.places.clone(),
            reference,
            world,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.query_seed ^ 0x005e_ed0f_0e11);
    let h = scenario.render.azimuths;
    let query_poses: Vec<SensorPose> = world
        .places
        .iter()
        .map(|p| match kind {
            ScenarioKind::Rotation => {
                let steps = rng.random_range(0..h);
                SensorPose::new(p.x_m, p.y_m, p.heading_rad + TAU * steps as f64 / h as f64)
            }
            _ => {
                let dist = rng.random_range(lo..=hi);
                let dir = rng.random_range(0.0..TAU);
                SensorPose::new(
                    p.x_m + dist * dir.cos(),
                    p.y_m + dist * dir.sin(),
                    p.heading_rad,
                )
            }
        })
        .collect();
    let query_render = RenderParams {
        seed: scenario.render.seed ^ scenario.query_seed.wrapping_add(0x9e37_79b9),
        ..scenario.render
    };
    let (q_scans, q_poses) = render_trajectory(&world.scene, &query_poses, &query_render)?;
    let query = Trajectory {
        name: format!(
            "synth-{}-{}-{}",
            scenario.world.seed, kind, scenario.query_seed
        ),
        scans: q_scans,
        poses: q_poses,
    };
    Ok(ScenarioRun {
        world,
        reference,
        query,
        query_poses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        let mut s = Scenario::desk(5);
        s.world.n_places = 4;
        s
    }

    #[test]
    fn rotation_keeps_positions() {
        let run = build_scenario(&small(), ScenarioKind::Rotation).unwrap();
        for (q, r) in run.query_poses.iter().zip(&run.world.places) {
            assert_eq!((q.x_m, q.y_m), (r.x_m, r.y_m));
            let steps = q.heading_rad * 128.0 / TAU;
            assert!((steps - steps.round()).abs() < 1e-9);
        }
        assert_eq!(run.query.poses.entries(), run.reference.poses.entries());
    }

    #[test]
    fn translation_within_range() {
        let run = build_scenario(&small(), ScenarioKind::Translation).unwrap();
        for (q, r) in run.query_poses.iter().zip(&run.world.places) {
            let d = (q.x_m - r.x_m).hypot(q.y_m - r.y_m);
            assert!((1.0 - 1e-9..=5.0 + 1e-9).contains(&d), "{d}");
            assert_eq!(q.heading_rad, r.heading_rad);
        }
    }

    #[test]
    fn query_seed_changes_only_the_query() {
        let a = build_scenario(&small(), ScenarioKind::Rotation).unwrap();
        let mut s = small();
        s.query_seed += 1;
        let b = build_scenario(&s, ScenarioKind::Rotation).unwrap();
        assert_eq!(a.reference.scans, b.reference.scans);
        assert_ne!(a.query_poses, b.query_poses);
    }

    #[test]
    fn kinds_parse() {
        for k in [
            ScenarioKind::Rotation,
            ScenarioKind::Translation,
            ScenarioKind::SelfMatch,
        ] {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("spin".parse::<ScenarioKind>().is_err());
    }
}
