//! Parameter grids for `sweep`.
//!
//! A grid is a `;`-separated list of axes. Each axis names one config key, or
//! several keys joined by `:` that move together, followed by `=` and a
//! comma-separated list of values (joined by `:` for multi-key axes):
//!
//! ```text
//! ring_key.azimuths=50,100;ring_key.bins=1884,3768
//! raplace.scale_pct=10,20;raplace.resolution_m:raplace.width_px=1.2717:256,0.63585:512
//! ```
//!
//! Points are the Cartesian product of the axes, last axis varying fastest.
//! An empty spec, or an axis without values, is an empty grid.

use anyhow::{bail, Result};
use radvlad_core::{Method, RunConfig};

pub const RING_KEY_TABLE: &str =
    "ring_key.azimuths=50,100,200,400;ring_key.bins=1884,3768;ring_key.length=128,512";
pub const RAPLACE_TABLE: &str = "raplace.scale_pct=10,20,30,40;\
     raplace.resolution_m:raplace.width_px=1.2717:256,0.63585:512,2.5424:128,0.3178:1024";

/// The 16-point grid of a method, selected by `--grid table`.
pub fn table_for(method: Method) -> Result<&'static str> {
    match method {
        Method::RingKey => Ok(RING_KEY_TABLE),
        Method::RaPlace => Ok(RAPLACE_TABLE),
        other => bail!("no built-in grid for {other}; give the axes explicitly"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub keys: Vec<String>,
    pub values: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

/// One grid point: `(key, value)` in axis order.
pub type Point = Vec<(String, String)>;

impl Grid {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for (i, part) in spec.split(';').map(str::trim).enumerate() {
            if part.is_empty() {
                continue;
            }
            let Some((keys, values)) = part.split_once('=') else {
                bail!(
                    "grid axis {}: expected `key=v1,v2,...`, got `{part}`",
                    i + 1
                );
            };
            let keys: Vec<String> = keys.split(':').map(|k| k.trim().to_string()).collect();
            if keys.iter().any(String::is_empty) {
                bail!("grid axis {}: empty key", i + 1);
            }
            let mut tuples = Vec::new();
            for v in values.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                let tuple: Vec<String> = v.split(':').map(|x| x.trim().to_string()).collect();
                if tuple.len() != keys.len() {
                    bail!(
                        "grid axis {}: value `{v}` does not match {} key(s)",
                        i + 1,
                        keys.len()
                    );
                }
                tuples.push(tuple);
            }
            axes.push(Axis {
                keys,
                values: tuples,
            });
        }
        let n_params: usize = axes.iter().map(|a| a.keys.len()).sum();
        if n_params > 3 {
            bail!("grid has {n_params} parameters; at most 3 fit the output columns");
        }
        Ok(Self { axes })
    }

    pub fn points(&self) -> Vec<Point> {
        if self.axes.is_empty() {
            return Vec::new();
        }
        let mut points: Vec<Point> = vec![Vec::new()];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for p in &points {
                for tuple in &axis.values {
                    let mut q = p.clone();
                    q.extend(axis.keys.iter().cloned().zip(tuple.iter().cloned()));
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }

    /// Checks every key and value against `base` before any work is done.
    pub fn validate(&self, base: &RunConfig) -> Result<()> {
        for point in self.points() {
            apply(base, &point)?;
        }
        Ok(())
    }
}

pub fn apply(base: &RunConfig, point: &Point) -> Result<RunConfig> {
    let mut cfg = base.clone();
    for (k, v) in point {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
