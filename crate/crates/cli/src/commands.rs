use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use radvlad_core::eval::{
    fit_reference_codebook, run_pair_with, PlaceEncoder, RESULTS_HEADER, TIMING_HEADER,
};
use radvlad_core::rundir::{read_run_dir, scan_path, write_run_dir};
use radvlad_core::{
    bench_timings, build_scenario, downsample_trajectory, load_polar_scan, load_poses, Codebook,
    Method, RasterLayout, RunConfig, Scenario, ScenarioKind, Trajectory,
};

use crate::grid::{self, Grid};
use crate::Command;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            source,
            poses,
            out,
            ext,
            rows,
            header_bytes,
            bins,
            encoding,
            range_resolution_m,
        } => {
            let layout = RasterLayout {
                rows,
                header_bytes_per_row: header_bytes,
                payload_bins: bins,
                encoding,
                range_resolution_m,
            };
            ingest(&source, &poses, &out, ext.as_deref(), &layout)
        }
        Command::Cluster { run, out, cfg } => {
            let cfg = cfg.resolve(RunConfig::default())?;
            let out = out.unwrap_or_else(|| run.join("codebook.cdbk"));
            cluster(&run, &out, &cfg)
        }
        Command::Encode {
            run,
            out,
            codebook,
            cfg,
        } => encode(
            &run,
            &out,
            codebook.as_deref(),
            &cfg.resolve(RunConfig::default())?,
        ),
        Command::Localize {
            query,
            reference,
            out,
            codebook,
            timing,
            timing_samples,
            cfg,
        } => {
            let cfg = cfg.resolve(RunConfig::default())?;
            let timing = timing.then_some(timing_samples);
            localize(&query, &reference, &out, codebook.as_deref(), timing, &cfg)
        }
        Command::Sweep {
            query,
            reference,
            grid,
            out,
            cfg,
        } => sweep(
            &query,
            &reference,
            &grid,
            out.as_deref(),
            &cfg.resolve(RunConfig::default())?,
        ),
        Command::Bench {
            run,
            methods,
            samples,
            out,
            cfg,
        } => bench(
            &run,
            &methods,
            samples,
            out.as_deref(),
            &cfg.resolve(RunConfig::default())?,
        ),
        Command::Synth {
            scenario,
            seed,
            places,
            trials,
            methods,
            out,
            cfg,
        } => {
            let mut s = Scenario::desk(seed);
            s.world.n_places = places;
            s.run = cfg.resolve(s.run)?;
            synth(&s, scenario, trials, &methods, &out)
        }
    }
}

fn read_run(path: &Path) -> Result<Trajectory> {
    read_run_dir(path).with_context(|| format!("reading run directory {}", path.display()))
}

fn load_codebook(path: Option<&Path>) -> Result<Option<Codebook>> {
    path.map(|p| Codebook::read(p).with_context(|| format!("reading codebook {}", p.display())))
        .transpose()
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn ingest(
    source: &Path,
    poses: &Path,
    out: &Path,
    ext: Option<&str>,
    layout: &RasterLayout,
) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(source)
        .with_context(|| format!("listing {}", source.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && ext.is_none_or(|x| p.extension().is_some_and(|e| e == x)));
    files.sort();
    let poses = load_poses(poses)?;
    write_run_dir(out, &[], &poses)?;

    // Scans keep their position in the sorted source listing, so a failed
    // file leaves a gap rather than renumbering the rest.
    let results: Vec<Result<(), String>> = files
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let scan = load_polar_scan(path, layout).map_err(|e| e.to_string())?;
            scan.write_prsn(&scan_path(out, i))
                .map_err(|e| format!("{}: {e}", path.display()))
        })
        .collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let written = results.len() - failures.len();
    println!(
        "ingested {written} of {} scans into {}",
        files.len(),
        out.display()
    );
    for f in &failures {
        eprintln!("error: {f}");
    }
    if !failures.is_empty() {
        bail!(
            "{} of {} files failed to ingest",
            failures.len(),
            files.len()
        );
    }
    Ok(())
}

fn cluster(run: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let traj = read_run(run)?;
    let scans = downsample_trajectory(&traj.scans, cfg.stride)?;
    let cb = fit_reference_codebook(cfg, &scans)?;
    cb.write(out)?;
    println!(
        "{}: k={} W={} iterations={} inertia={:.6e} -> {}",
        cfg.method,
        cb.k(),
        cb.dim(),
        cb.iterations_run,
        cb.inertia,
        out.display()
    );
    Ok(())
}

fn encode(run: &Path, out: &Path, codebook: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let traj = read_run(run)?;
    let scans = downsample_trajectory(&traj.scans, cfg.stride)?;
    let codebook = match (cfg.method.uses_codebook(), load_codebook(codebook)?) {
        (true, None) => Some(fit_reference_codebook(cfg, &scans)?),
        (_, cb) => cb,
    };
    let encoder = PlaceEncoder::new(cfg, codebook)?;
    let descriptors = scans
        .par_iter()
        .map(|s| encoder.encode(s))
        .collect::<radvlad_core::Result<Vec<_>>>()?;
    fs::create_dir_all(out)?;
    for (scan, d) in scans.iter().zip(&descriptors) {
        d.write(&out.join(format!("{}.desc", scan.id)))?;
    }
    println!(
        "{}: wrote {} descriptors to {}",
        cfg.method,
        descriptors.len(),
        out.display()
    );
    Ok(())
}

fn localize(
    query: &Path,
    reference: &Path,
    out: &Path,
    codebook: Option<&Path>,
    timing_samples: Option<usize>,
    cfg: &RunConfig,
) -> Result<()> {
    let q = read_run(query)?;
    let r = if query == reference {
        q.clone()
    } else {
        read_run(reference)?
    };
    let eval = run_pair_with(&q, &r, cfg, load_codebook(codebook)?)?;
    fs::create_dir_all(out)?;
    write(&out.join("results.csv"), eval.results_csv())?;
    eval.distances.write(&out.join("distances.dmat"))?;
    if let Some(cb) = &eval.codebook {
        cb.write(&out.join("codebook.cdbk"))?;
    }
    if let Some(samples) = timing_samples {
        let scans = downsample_trajectory(&r.scans, cfg.stride)?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
        let report = pool.install(|| bench_timings(cfg, &scans, samples, eval.codebook.clone()))?;
        write(
            &out.join("timing.csv"),
            format!("{TIMING_HEADER}\n{}", report.csv_rows()),
        )?;
        print!("{}", report.summary());
    }
    println!(
        "{} {} vs {}: Recall@1 {:.2}% over {} queries ({} without a match)",
        cfg.method,
        q.name,
        r.name,
        eval.recall.at(1).unwrap_or(0.0),
        eval.recall.evaluated_queries,
        eval.recall.skipped
    );
    Ok(())
}

fn sweep(
    query: &Path,
    reference: &Path,
    spec: &str,
    out: Option<&Path>,
    cfg: &RunConfig,
) -> Result<()> {
    let spec = if spec.trim() == "table" {
        grid::table_for(cfg.method)?
    } else {
        spec
    };
    let grid = Grid::parse(spec)?;
    grid.validate(cfg)?;
    let points = grid.points();
    let (q, r) = if points.is_empty() {
        (None, None)
    } else {
        let q = read_run(query)?;
        let r = if query == reference {
            q.clone()
        } else {
            read_run(reference)?
        };
        (Some(q), Some(r))
    };
    let mut csv = String::from("param1,param2,param3,recall_at_1\n");
    for point in &points {
        let point_cfg = grid::apply(cfg, point)?;
        let eval = run_pair_with(q.as_ref().unwrap(), r.as_ref().unwrap(), &point_cfg, None)?;
        let mut cells: Vec<&str> = point.iter().map(|(_, v)| v.as_str()).collect();
        cells.resize(3, "");
        writeln!(
            csv,
            "{},{:.6}",
            cells.join(","),
            eval.recall.at(1).unwrap_or(0.0)
        )?;
        eprintln!(
            "{}: Recall@1 {:.2}",
            describe(point),
            eval.recall.at(1).unwrap_or(0.0)
        );
    }
    match out {
        Some(path) => write(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn describe(point: &grid::Point) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn bench(
    run: &Path,
    methods: &[Method],
    samples: usize,
    out: Option<&Path>,
    cfg: &RunConfig,
) -> Result<()> {
    let traj = read_run(run)?;
    let scans = downsample_trajectory(&traj.scans, cfg.stride)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    let mut csv = format!("{TIMING_HEADER}\n");
    for &method in methods {
        let method_cfg = RunConfig {
            method,
            ..cfg.clone()
        };
        let report = pool.install(|| bench_timings(&method_cfg, &scans, samples, None))?;
        print!("{}", report.summary());
        csv.push_str(&report.csv_rows());
    }
    if let Some(path) = out {
        write(path, csv)?;
    }
    Ok(())
}

fn default_methods(kind: ScenarioKind) -> Vec<Method> {
    match kind {
        ScenarioKind::Rotation => vec![Method::FftRadVlad],
        ScenarioKind::Translation => vec![Method::RadVlad, Method::FftRadVlad],
        ScenarioKind::SelfMatch => Method::ALL.to_vec(),
    }
}

fn synth(
    scenario: &Scenario,
    kind: ScenarioKind,
    trials: u64,
    methods: &[Method],
    out: &Path,
) -> Result<()> {
    let methods = if methods.is_empty() {
        default_methods(kind)
    } else {
        methods.to_vec()
    };
    let base = build_scenario(scenario, ScenarioKind::SelfMatch)?;
    fs::create_dir_all(out)?;
    base.world.scene.write_csv(&out.join("scene.csv"))?;
    write_run_dir(
        &out.join("reference"),
        &base.reference.scans,
        &base.reference.poses,
    )?;

    // Codebooks depend only on the reference, so each is fitted once.
    let codebooks = methods
        .iter()
        .map(|&m| {
            let cfg = RunConfig {
                method: m,
                ..scenario.run.clone()
            };
            let scans = downsample_trajectory(&base.reference.scans, cfg.stride)?;
            Ok(if m.uses_codebook() {
                Some(fit_reference_codebook(&cfg, &scans)?)
            } else {
                None
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = format!("{RESULTS_HEADER}\n");
    let mut recall1 = vec![0.0; methods.len()];
    for t in 0..trials {
        let mut s = scenario.clone();
        s.query_seed = scenario.query_seed.wrapping_add(t);
        let run = build_scenario(&s, kind)?;
        if kind != ScenarioKind::SelfMatch {
            let dir = if trials == 1 {
                "query".to_string()
            } else {
                format!("query-{t:03}")
            };
            write_run_dir(&out.join(dir), &run.query.scans, &run.query.poses)?;
        }
        for (i, &m) in methods.iter().enumerate() {
            let cfg = RunConfig {
                method: m,
                ..s.run.clone()
            };
            let eval = run_pair_with(&run.query, &run.reference, &cfg, codebooks[i].clone())?;
            recall1[i] += eval.recall.at(1).unwrap_or(0.0) / trials as f64;
            csv.push_str(&eval.results_rows());
        }
    }
    write(&out.join("results.csv"), csv)?;
    for (m, r) in methods.iter().zip(&recall1) {
        println!("{kind} {m}: mean Recall@1 {r:.2}% over {trials} trial(s)");
    }
    Ok(())
}
