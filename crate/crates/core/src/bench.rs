//! Benchmark harness: per-scene point growth, iteration counts and wall
//! time, plus a flip-free scaling probe on instrumented operation counts.
//!
//! Wall times depend on the machine; the operation counts do not, which is
//! what the scaling rows are for. Point counts are distinct control points
//! (`N * d`, shared endpoints counted once).

use std::time::Instant;

use crate::config::PipelineConfig;
use crate::contour::FreeFormContour;
use crate::error::{Error, Result};
use crate::evolve::{evolve_step, EvolutionState, EvolveOptions};
use crate::forces::{ForceField, GrayImage};
use crate::bezier::InterpolationMap;
use crate::metrics;
use crate::pipeline;
use crate::point::Point2;
use crate::synth::{synth_image, Shape};

/// One CSV row of the benchmark output.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub suite: String,
    pub method: &'static str,
    pub initial_points: usize,
    pub final_points: usize,
    pub iterations: u32,
    /// Median wall time over the repetitions, milliseconds.
    pub time_ms: f64,
    /// Instrumented operation count of one run (machine independent).
    pub ops: u64,
}

pub const CSV_HEADER: &str = "suite,method,initial_points,final_points,iterations,time_ms,ops";

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{}\n",
            r.suite, r.method, r.initial_points, r.final_points, r.iterations, r.time_ms, r.ops
        ));
    }
    out
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Benchmark configuration shared by the scene suites: 13 cubic patches
/// (39 contour points) seeded at the image center.
fn scene_config() -> PipelineConfig {
    PipelineConfig { n_patches: 13, ..PipelineConfig::default() }
}

fn run_scene(suite: &str, shape: Shape, repeats: usize) -> Result<BenchRow> {
    let (img, _gt) = synth_image(shape, 800, 600)?;
    let cfg = scene_config();
    let mut times = Vec::with_capacity(repeats.max(1));
    let mut result = None;
    let mut ops = 0;
    for rep in 0..repeats.max(1) {
        metrics::reset();
        let start = Instant::now();
        let seg = pipeline::segment_image(&img, &cfg)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        if rep == 0 {
            ops = metrics::snapshot().total();
            result = Some(seg);
        }
    }
    let seg = result.unwrap();
    Ok(BenchRow {
        suite: suite.to_string(),
        method: "FF",
        initial_points: seg.initial_points,
        final_points: seg.final_points,
        iterations: seg.iterations,
        time_ms: median(times),
        ops,
    })
}

/// Flip-free probe: a circle of `n_patches` in a blank image, refinement
/// and topology off, a fixed number of iterations. Returns the total
/// instrumented operations and the wall time.
pub fn scaling_probe(n_patches: usize, iterations: u32) -> Result<(u64, f64)> {
    let img = GrayImage::constant(512, 512, 0.5)?;
    let field = ForceField::build(&img, 2.0, 2)?;
    let contour = FreeFormContour::circle(Point2::new(256.0, 256.0), 100.0, n_patches, 3)?;
    let map = InterpolationMap::uniform(3)?;
    let opts = EvolveOptions {
        refine_enabled: false,
        topology_enabled: false,
        ..Default::default()
    };
    let mut state = EvolutionState::new(contour, &field)?;
    metrics::reset();
    let start = Instant::now();
    for _ in 0..iterations {
        state = evolve_step(state, &field, &map, &opts)?;
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    Ok((metrics::snapshot().total(), elapsed))
}

fn run_scaling(repeats: usize) -> Result<Vec<BenchRow>> {
    let iters = 10u32;
    let mut rows = Vec::new();
    for n in [64usize, 128] {
        let mut times = Vec::new();
        let mut ops = 0;
        for rep in 0..repeats.max(1) {
            let (o, t) = scaling_probe(n, iters)?;
            times.push(t);
            if rep == 0 {
                ops = o;
            }
        }
        rows.push(BenchRow {
            suite: format!("scaling-n{n}"),
            method: "FF",
            initial_points: n * 3,
            final_points: n * 3,
            iterations: iters,
            time_ms: median(times),
            ops,
        });
    }
    Ok(rows)
}

/// Run a benchmark suite: `simple` (single blob), `complex` (two holes,
/// topology changes), `scaling` (N vs 2N probe) or `all`.
pub fn run_suite(suite: &str, repeats: usize) -> Result<Vec<BenchRow>> {
    match suite {
        "simple" => Ok(vec![run_scene("simple", Shape::Blob, repeats)?]),
        "complex" => Ok(vec![run_scene("complex", Shape::TwoHoles, repeats)?]),
        "scaling" => run_scaling(repeats),
        "all" => {
            let mut rows = vec![
                run_scene("simple", Shape::Blob, repeats)?,
                run_scene("complex", Shape::TwoHoles, repeats)?,
            ];
            rows.extend(run_scaling(repeats)?);
            Ok(rows)
        }
        _ => Err(Error::invalid(format!(
            "unknown suite {suite:?} (simple, complex, scaling, all)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_schema_is_stable() {
        let rows = vec![BenchRow {
            suite: "simple".into(),
            method: "FF",
            initial_points: 39,
            final_points: 120,
            iterations: 200,
            time_ms: 12.5,
            ops: 123456,
        }];
        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "simple,FF,39,120,200,12.500,123456");
    }

    #[test]
    fn scaling_probe_ops_are_deterministic() {
        let (a, _) = scaling_probe(16, 3).unwrap();
        let (b, _) = scaling_probe(16, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
