mod args;
mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use radvlad_core::{Method, SampleEncoding, ScenarioKind};

use args::{RunArgs, CONFIG_HELP};

/// Radar place recognition: ingest scans, fit codebooks, encode, localise,
/// sweep baseline settings, time methods and run synthetic experiments.
#[derive(Parser, Debug)]
#[command(name = "radvlad", version, after_help = CONFIG_HELP.as_str())]
struct Cli {
    /// Worker threads (0 = one per core). Output does not depend on this.
    #[arg(
        long,
        short = 'j',
        global = true,
        env = "RADVLAD_JOBS",
        default_value_t = 0
    )]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert raw raster files and a pose CSV into a run directory
    /// (`scans/NNNNNN.prsn`, `poses.csv`).
    #[command(after_help = CONFIG_HELP.as_str())]
    Ingest {
        /// Directory of raw scan files; the file stem is the timestamp in ns
        #[arg(long)]
        source: PathBuf,
        /// Pose CSV with header timestamp_ns,easting_m,northing_m
        #[arg(long)]
        poses: PathBuf,
        /// Run directory to create
        #[arg(long)]
        out: PathBuf,
        /// Only read files with this extension
        #[arg(long)]
        ext: Option<String>,
        /// Azimuth rows per file
        #[arg(long, default_value_t = 400)]
        rows: usize,
        /// Bytes to skip at the start of every row
        #[arg(long, default_value_t = 11)]
        header_bytes: usize,
        /// Range bins per row
        #[arg(long, default_value_t = 3768)]
        bins: usize,
        /// Sample encoding: u8 (scaled to [0, 1]) or f32 (little-endian)
        #[arg(long, default_value = "u8")]
        encoding: SampleEncoding,
        /// Metres per range bin
        #[arg(long, default_value_t = 0.0432)]
        range_resolution_m: f64,
    },
    /// Fit a k-means++ codebook on the local features of a run.
    #[command(after_help = CONFIG_HELP.as_str())]
    Cluster {
        #[arg(long)]
        run: PathBuf,
        /// Output codebook [default: <run>/codebook.cdbk]
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunArgs,
    },
    /// Write one descriptor file per scan of a run.
    #[command(after_help = CONFIG_HELP.as_str())]
    Encode {
        #[arg(long)]
        run: PathBuf,
        /// Output directory for NNNNNN.desc files
        #[arg(long)]
        out: PathBuf,
        /// Codebook for VLAD methods [default: fit on the run]
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunArgs,
    },
    /// Localise a query run against a reference run.
    #[command(after_help = CONFIG_HELP.as_str())]
    Localize {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Directory for results.csv, distances.dmat, codebook.cdbk, timing.csv
        #[arg(long)]
        out: PathBuf,
        /// Codebook for VLAD methods [default: fit on the reference]
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Also time descriptor building and comparison
        #[arg(long)]
        timing: bool,
        /// Timing samples per phase
        #[arg(long, default_value_t = 100)]
        timing_samples: usize,
        #[command(flatten)]
        cfg: RunArgs,
    },
    /// Recall@1 over a grid of settings (CSV param1,param2,param3,recall_at_1).
    #[command(after_help = CONFIG_HELP.as_str())]
    Sweep {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Grid spec such as `raplace.scale_pct=10,20;raplace.resolution_m:raplace.width_px=1.2717:256`,
        /// or `table` for the method's built-in 16-point grid
        #[arg(long)]
        grid: String,
        /// Output CSV [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunArgs,
    },
    /// Time descriptor building and comparison for several methods, on one thread.
    #[command(after_help = CONFIG_HELP.as_str())]
    Bench {
        #[arg(long)]
        run: PathBuf,
        /// Methods to time
        #[arg(long, value_delimiter = ',', default_value = "raplace,fft-radvlad")]
        methods: Vec<Method>,
        /// Samples per phase
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Output timing CSV [default: stdout summary only]
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: RunArgs,
    },
    /// Render a synthetic world and compare methods on it.
    ///
    /// Writes scene.csv, reference/ and query/ run directories and
    /// results.csv. Run settings start from the desk-scale scenario
    /// (k=16, 256 bins, stride 1, no suppression) before config and flags.
    #[command(after_help = CONFIG_HELP.as_str())]
    Synth {
        /// rotation, translation or self
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Places along the route
        #[arg(long, default_value_t = 50)]
        places: usize,
        /// Query traversals of the same world (different perturbations)
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Methods to compare [default: per scenario]
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: RunArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
    {
        eprintln!("error: thread pool: {e}");
        return ExitCode::FAILURE;
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
