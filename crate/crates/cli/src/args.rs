//! Run-configuration flags shared by the subcommands.

use std::fs;
use std::path::PathBuf;
use std::sync::LazyLock;

use anyhow::{Context, Result};
use clap::Args;
use radvlad_core::config::CONFIG_KEYS;
use radvlad_core::{Method, RunConfig};

/// Appended to every subcommand's help: the config-file keys.
pub static CONFIG_HELP: LazyLock<String> = LazyLock::new(|| {
    let mut out = String::from(
        "Config file (--config): UTF-8 `key = value` lines, `#` starts a comment.\n\
         Flags override the file. Keys and defaults:\n",
    );
    for (key, doc) in CONFIG_KEYS {
        out.push_str(&format!("  {key:<22} {doc}\n"));
    }
    out
});

#[derive(Args, Debug, Clone, Default)]
#[command(next_help_heading = "Run configuration")]
pub struct RunArgs {
    /// `key = value` config file applied before the flags below
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Method: ringkey (1), raplace (2), radvlad (3) or fft-radvlad (4) [default: fft-radvlad]
    #[arg(long, value_name = "METHOD")]
    pub method: Option<Method>,

    /// Near-range bins zeroed before resampling [default: 60]
    #[arg(long, value_name = "N")]
    pub suppress_bins: Option<usize>,

    /// Range bins after resampling [default: 512]
    #[arg(long, value_name = "N")]
    pub target_bins: Option<usize>,

    /// Codebook size [default: 64]
    #[arg(long, short = 'k', value_name = "N")]
    pub k: Option<usize>,

    /// k-means relative inertia-decrease tolerance [default: 1e-4]
    #[arg(long, value_name = "TOL")]
    pub kmeans_tol: Option<f64>,

    /// k-means++ seed [default: 0]
    #[arg(long, value_name = "SEED")]
    pub kmeans_seed: Option<u64>,

    /// Lloyd iteration cap [default: 300]
    #[arg(long, value_name = "N")]
    pub kmeans_max_iter: Option<usize>,

    /// L2-normalise VLAD descriptors [default: false]
    #[arg(long, value_name = "BOOL")]
    pub vlad_l2_normalise: Option<bool>,

    /// Keep every n-th scan of each trajectory [default: 10]
    #[arg(long, value_name = "N")]
    pub stride: Option<usize>,

    /// Ground-truth match radius in metres [default: 25]
    #[arg(long, value_name = "M")]
    pub threshold_m: Option<f64>,

    /// Largest N reported for Recall@N [default: 50]
    #[arg(long, value_name = "N")]
    pub n_max: Option<usize>,

    /// RaPlace Cartesian image side in pixels [default: 256]
    #[arg(long, value_name = "PX")]
    pub raplace_width_px: Option<usize>,

    /// RaPlace metres per Cartesian pixel [default: 1.2717]
    #[arg(long, value_name = "M")]
    pub raplace_resolution_m: Option<f64>,

    /// RaPlace sinogram angles over [0, pi) [default: width]
    #[arg(long, value_name = "N")]
    pub raplace_n_angles: Option<usize>,

    /// RaPlace sinogram radial scale in percent [default: 25]
    #[arg(long, value_name = "PCT")]
    pub raplace_scale_pct: Option<f64>,

    /// RingKey azimuths before pooling [default: unchanged]
    #[arg(long, value_name = "N")]
    pub ring_key_azimuths: Option<usize>,

    /// RingKey raw range bins kept (maximum range) [default: all]
    #[arg(long, value_name = "N")]
    pub ring_key_bins: Option<usize>,

    /// RingKey vector length [default: target-bins]
    #[arg(long, value_name = "N")]
    pub ring_key_length: Option<usize>,
}

impl RunArgs {
    /// `base`, then the config file, then the flags.
    pub fn resolve(&self, base: RunConfig) -> Result<RunConfig> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_file(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { cfg.$($field).+ = v.into(); })*
            };
        }
        set! {
            method => method,
            suppress_bins => suppress_bins,
            target_bins => target_bins,
            k => k,
            kmeans_tol => kmeans_tol,
            kmeans_seed => kmeans_seed,
            kmeans_max_iter => kmeans_max_iter,
            vlad_l2_normalise => vlad_l2_normalise,
            stride => stride,
            threshold_m => threshold_m,
            n_max => n_max,
            raplace_width_px => raplace.width_px,
            raplace_resolution_m => raplace.resolution_m,
            raplace_n_angles => raplace.n_angles,
            raplace_scale_pct => raplace.scale_pct,
            ring_key_azimuths => ring_key.azimuths,
            ring_key_bins => ring_key.bins,
            ring_key_length => ring_key.length,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
