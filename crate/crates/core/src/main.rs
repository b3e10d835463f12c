//! Command-line front end: synthetic scenes, segmentation, free-space
//! extraction and the benchmark harness.
//!
//! Exit codes: 0 on success, 1 when the evolution did not converge within
//! the iteration budget (outputs are still written), 2 on input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ffcontours::config::PipelineConfig;
use ffcontours::error::Error;
use ffcontours::freespace::{self, AltitudeOracle, NoAltitudeData, TableAltitude};
use ffcontours::imaging;
use ffcontours::pipeline;
use ffcontours::synth::{self, Shape};
use ffcontours::{bench, ComponentSet};

#[derive(Parser)]
#[command(name = "ffcontours", version, about = "Free-form active contours: segmentation, free-space extraction, benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a deterministic synthetic test image with its ground truth.
    Synth {
        /// disk | blob | blob-with-holes | dumbbell | two-holes
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 480)]
        width: usize,
        #[arg(long, default_value_t = 360)]
        height: usize,
        /// Output PNG path; the ground-truth mask lands next to it as
        /// `<stem>.gt.png` unless --gt-out is given.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gt_out: Option<PathBuf>,
    },
    /// Segment one image with the evolving free-form contour.
    Segment {
        #[arg(long)]
        image: PathBuf,
        /// Flat key=value config file (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override single config keys, e.g. --set step=0.5 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value = "segment")]
        out_prefix: PathBuf,
        /// Disable the topology (flip) pass.
        #[arg(long)]
        no_topology: bool,
        /// Disable the refinement (split) pass.
        #[arg(long)]
        no_refine: bool,
        /// Write the force field as a raw float dump.
        #[arg(long)]
        dump_forces: Option<PathBuf>,
        /// Print the effective config and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Extract free space from two successive frames with the
    /// false-obstacle test.
    Freespace {
        #[arg(long)]
        prev: PathBuf,
        #[arg(long)]
        curr: PathBuf,
        /// CSV altitude table `x,y,altitude_m`; without it every enclosed
        /// component is kept as an obstacle.
        #[arg(long)]
        altitudes: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value = "freespace")]
        out_prefix: PathBuf,
    },
    /// Run a benchmark suite and write CSV.
    Bench {
        /// simple | complex | scaling | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>, sets: &[String]) -> Result<PipelineConfig, Error> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::parse(&std::fs::read_to_string(p)?)?,
        None => PipelineConfig::default(),
    };
    for kv in sets {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set needs KEY=VALUE, got {kv:?}")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_synth(
    shape: &str,
    width: usize,
    height: usize,
    out: &Path,
    gt_out: &Option<PathBuf>,
) -> Result<(), Error> {
    let shape: Shape = shape.parse()?;
    let (img, gt) = synth::synth_image(shape, width, height)?;
    imaging::save_gray(&img, out)?;
    let gt_path = gt_out
        .clone()
        .unwrap_or_else(|| out.with_extension("gt.png"));
    imaging::save_mask(&gt, &gt_path)?;
    eprintln!("wrote {} and {}", out.display(), gt_path.display());
    Ok(())
}

fn write_segment_outputs(
    img: &ffcontours::GrayImage,
    components: &ComponentSet,
    free_mask: &ffcontours::RegionMask,
    report: &serde_json::Value,
    prefix: &Path,
) -> Result<(), Error> {
    imaging::save_mask(free_mask, with_suffix(prefix, ".mask.png"))?;
    imaging::save_components_json(components, with_suffix(prefix, ".contours.json"))?;
    let all: Vec<&ffcontours::FreeFormContour> =
        std::iter::once(&components.outer).chain(&components.inner).collect();
    imaging::render_overlay(
        img,
        &all,
        with_suffix(prefix, ".overlay.png"),
        with_suffix(prefix, ".overlay.svg"),
    )?;
    std::fs::write(
        with_suffix(prefix, ".report.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    Ok(())
}

fn cmd_segment(
    image: &Path,
    config: &Option<PathBuf>,
    sets: &[String],
    prefix: &Path,
    no_topology: bool,
    no_refine: bool,
    dump_forces: &Option<PathBuf>,
    print_config: bool,
) -> Result<bool, Error> {
    let mut cfg = load_config(config, sets)?;
    if no_topology {
        cfg.topology_enabled = false;
    }
    if no_refine {
        cfg.refine_enabled = false;
    }
    if print_config {
        print!("{}", cfg.to_text());
        return Ok(true);
    }
    let img = imaging::load_gray(image)?;
    if let Some(path) = dump_forces {
        let field = pipeline::build_field(&img, &cfg)?;
        imaging::save_force_field(&field, path)?;
    }
    let snapshot_every = cfg.snapshot_every;
    let snap_prefix = prefix.to_path_buf();
    let snap_img = img.clone();
    let result = pipeline::segment_image_with_observer(&img, &cfg, |state| {
        if snapshot_every > 0 && state.iteration % snapshot_every == 0 {
            let p = with_suffix(&snap_prefix, &format!(".iter{:05}", state.iteration));
            imaging::save_components_json(&state.components, with_suffix(&p, ".json"))?;
            let all: Vec<&ffcontours::FreeFormContour> = std::iter::once(&state.components.outer)
                .chain(&state.components.inner)
                .collect();
            imaging::overlay_png(&snap_img, &all).save(with_suffix(&p, ".png"))
                .map_err(ffcontours::Error::from)?;
        }
        Ok(())
    })?;
    let report = serde_json::json!({
        "converged": result.converged,
        "iterations": result.iterations,
        "initial_points": result.initial_points,
        "final_points": result.final_points,
        "inner_components": result.components.inner.len(),
    });
    write_segment_outputs(&img, &result.components, &result.free_mask, &report, prefix)?;
    eprintln!(
        "segmented {}: {} components, {} iterations, converged={}",
        image.display(),
        1 + result.components.inner.len(),
        result.iterations,
        result.converged
    );
    Ok(result.converged)
}

fn cmd_freespace(
    prev: &Path,
    curr: &Path,
    altitudes: &Option<PathBuf>,
    config: &Option<PathBuf>,
    sets: &[String],
    prefix: &Path,
) -> Result<bool, Error> {
    let cfg = load_config(config, sets)?;
    let pair = freespace::ImagePair::new(imaging::load_gray(prev)?, imaging::load_gray(curr)?)?;
    let table;
    let oracle: &dyn AltitudeOracle = match altitudes {
        Some(path) => {
            table = TableAltitude::from_csv_path(path, 3.0)?;
            &table
        }
        None => &NoAltitudeData,
    };
    let result = freespace::segment_free_space(&pair, &cfg, oracle)?;
    imaging::save_mask(&result.free_space_mask, with_suffix(prefix, ".mask.png"))?;
    let report = serde_json::json!({
        "converged": result.converged,
        "retained_obstacles": result.retained_obstacles.len(),
        "merged_components": result.merged_components.len(),
        "components": result.reports,
    });
    std::fs::write(
        with_suffix(prefix, ".report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    let components = ComponentSet {
        outer: result.outer.clone(),
        inner: result
            .retained_obstacles
            .iter()
            .chain(&result.merged_components)
            .cloned()
            .collect(),
    };
    imaging::save_components_json(&components, with_suffix(prefix, ".contours.json"))?;
    let drawn: Vec<&ffcontours::FreeFormContour> = std::iter::once(&result.outer)
        .chain(&result.retained_obstacles)
        .collect();
    imaging::render_overlay(
        &pair.curr,
        &drawn,
        with_suffix(prefix, ".overlay.png"),
        with_suffix(prefix, ".overlay.svg"),
    )?;
    eprintln!(
        "free space: {} obstacles kept, {} merged, converged={}",
        result.retained_obstacles.len(),
        result.merged_components.len(),
        result.converged
    );
    Ok(result.converged)
}

fn cmd_bench(suite: &str, repeats: usize, out: &Option<PathBuf>) -> Result<(), Error> {
    let rows = bench::run_suite(suite, repeats)?;
    let csv = bench::rows_to_csv(&rows);
    match out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn real_main() -> Result<bool, Error> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Synth { shape, width, height, out, gt_out } => {
            cmd_synth(shape, *width, *height, out, gt_out)?;
            Ok(true)
        }
        Cmd::Segment {
            image,
            config,
            sets,
            out_prefix,
            no_topology,
            no_refine,
            dump_forces,
            print_config,
        } => cmd_segment(
            image,
            config,
            sets,
            out_prefix,
            *no_topology,
            *no_refine,
            dump_forces,
            *print_config,
        ),
        Cmd::Freespace { prev, curr, altitudes, config, sets, out_prefix } => {
            cmd_freespace(prev, curr, altitudes, config, sets, out_prefix)
        }
        Cmd::Bench { suite, repeats, out } => {
            cmd_bench(suite, *repeats, out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: evolution did not converge within the iteration budget");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
