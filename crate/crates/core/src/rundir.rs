//! On-disk run directories.
//!
//! ```text
//! <run>/scans/NNNNNN.prsn   one PRSN file per scan, in trajectory order
//! <run>/poses.csv           timestamp_ns,easting_m,northing_m
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::Trajectory;
use crate::scan::{load_poses, PolarScan, TrajectoryPoses};

pub const SCANS_DIR: &str = "scans";
pub const POSES_FILE: &str = "poses.csv";

pub fn scan_path(run: &Path, index: usize) -> PathBuf {
    run.join(SCANS_DIR).join(format!("{index:06}.prsn"))
}

/// Sorted `.prsn` files of a run directory.
pub fn scan_files(run: &Path) -> Result<Vec<PathBuf>> {
    let dir = run.join(SCANS_DIR);
    let entries = fs::read_dir(&dir).map_err(|e| Error::ingest(&dir, e.to_string()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "prsn") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every scan and the poses of a run directory. The trajectory is
/// named after the directory.
pub fn read_run_dir(run: &Path) -> Result<Trajectory> {
    let scans = scan_files(run)?
        .iter()
        .map(|p| PolarScan::read_prsn(p))
        .collect::<Result<Vec<_>>>()?;
    let poses = load_poses(&run.join(POSES_FILE))?;
    let name = run
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| run.display().to_string());
    Ok(Trajectory { name, scans, poses })
}

/// Writes scans as `scans/NNNNNN.prsn` (numbered by position) and the poses.
pub fn write_run_dir(run: &Path, scans: &[PolarScan], poses: &TrajectoryPoses) -> Result<()> {
    fs::create_dir_all(run.join(SCANS_DIR))?;
    for (i, scan) in scans.iter().enumerate() {
        scan.write_prsn(&scan_path(run, i))?;
    }
    poses.write_csv(&run.join(POSES_FILE))
}
