//! Dynamic resolution control: split over-stretched patches, optionally
//! merge undersized adjacent pairs on shrink.
//!
//! A patch is split when the maximum pairwise distance between its control
//! points exceeds a threshold. The two halves are produced by sampling the
//! original curve at `2d + 1` parameters and interpolating each half through
//! `d + 1` of them, which reproduces the original polynomial exactly (each
//! half of a degree-`d` curve is again degree `d`).

use crate::bezier::{BezierPatch, InterpolationMap};
use crate::contour::FreeFormContour;
use crate::error::{Error, Result};

/// Maximum pairwise distance between control points of a patch (the split
/// test of the refinement pass).
pub fn max_control_distance(patch: &BezierPatch) -> f64 {
    let c = patch.control();
    let mut worst: f64 = 0.0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            worst = worst.max(c[i].distance(c[j]));
        }
    }
    worst
}

/// Split a patch into two exact halves of the same degree.
///
/// Costs exactly `2d + 1` curve evaluations plus two interpolations: the
/// halves share the midpoint sample. The first half's last control point
/// equals the second half's first exactly.
pub fn split_patch(
    patch: &BezierPatch,
    map: &InterpolationMap,
) -> Result<(BezierPatch, BezierPatch)> {
    if patch.degree() != map.degree() {
        return Err(Error::invalid(format!(
            "patch degree {} does not match map degree {}",
            patch.degree(),
            map.degree()
        )));
    }
    let nodes = map.nodes();
    let first_samples: Vec<_> = nodes.iter().map(|&t| patch.eval(t / 2.0)).collect();
    let mut second_samples = Vec::with_capacity(nodes.len());
    second_samples.push(*first_samples.last().unwrap());
    second_samples.extend(nodes[1..].iter().map(|&t| patch.eval(0.5 + t / 2.0)));
    let first = map.interpolate(&first_samples)?;
    let second = map.interpolate(&second_samples)?;
    Ok((first, second))
}

/// Replace every over-stretched patch by its two halves (at most one split
/// per patch per pass). Closure is preserved and the box index repaired.
pub fn split_pass(
    contour: &FreeFormContour,
    map: &InterpolationMap,
    epsilon: f64,
) -> Result<FreeFormContour> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("split threshold must be positive"));
    }
    let mut expansion = Vec::with_capacity(contour.len());
    let mut patches = Vec::with_capacity(contour.len() + 4);
    let mut any = false;
    for patch in contour.patches() {
        if max_control_distance(patch) > epsilon {
            let (a, b) = split_patch(patch, map)?;
            patches.push(a);
            patches.push(b);
            expansion.push(2);
            any = true;
        } else {
            patches.push(patch.clone());
            expansion.push(1);
        }
    }
    let mut out = contour.clone();
    if any {
        out.replace_patches_expanded(patches, &expansion);
    }
    Ok(out)
}

/// Merge adjacent patch pairs that are both smaller than `epsilon_min` by
/// resampling `d + 1` points across their union and interpolating one patch.
///
/// Merging a genuinely curved pair is lossy (the union is only piecewise
/// polynomial); contours with four or fewer patches are returned unchanged.
pub fn merge_pass(
    contour: &FreeFormContour,
    map: &InterpolationMap,
    epsilon_min: f64,
) -> Result<FreeFormContour> {
    if epsilon_min <= 0.0 {
        return Err(Error::invalid("merge threshold must be positive"));
    }
    if contour.len() <= 4 {
        return Ok(contour.clone());
    }
    let nodes = map.nodes();
    let src = contour.patches();
    let mut expansion = vec![1usize; src.len()];
    let mut patches: Vec<BezierPatch> = Vec::with_capacity(src.len());
    let mut remaining = src.len();
    let mut i = 0;
    let mut any = false;
    while i < src.len() {
        let can_pair = i + 1 < src.len() && remaining > 4;
        if can_pair
            && max_control_distance(&src[i]) < epsilon_min
            && max_control_distance(&src[i + 1]) < epsilon_min
        {
            let samples: Vec<_> = nodes
                .iter()
                .map(|&u| {
                    if u <= 0.5 {
                        src[i].eval(2.0 * u)
                    } else {
                        src[i + 1].eval(2.0 * u - 1.0)
                    }
                })
                .collect();
            patches.push(map.interpolate(&samples)?);
            expansion[i] = 1;
            expansion[i + 1] = 0;
            remaining -= 1;
            any = true;
            i += 2;
        } else {
            patches.push(src[i].clone());
            i += 1;
        }
    }
    let mut out = contour.clone();
    if any {
        out.replace_patches_expanded(patches, &expansion);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::CLOSURE_TOL;
    use crate::metrics;
    use crate::point::Point2;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn cubic(points: [(f64, f64); 4]) -> BezierPatch {
        BezierPatch::new(points.iter().map(|&(x, y)| pt(x, y)).collect()).unwrap()
    }

    #[test]
    fn split_straight_segment_halves_are_collinear() {
        let map = InterpolationMap::uniform(3).unwrap();
        let patch = cubic([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]);
        let (a, b) = split_patch(&patch, &map).unwrap();
        for c in a.control().iter().chain(b.control()) {
            assert!((c.y - c.x).abs() < 1e-9);
        }
        assert!((a.end() - b.start()).norm() == 0.0);
        assert!((a.start() - patch.start()).norm() < 1e-12);
        assert!((b.end() - patch.end()).norm() < 1e-12);
    }

    #[test]
    fn split_halves_reproduce_original_curve() {
        let map = InterpolationMap::uniform(3).unwrap();
        let patch = cubic([(0.0, 0.0), (4.0, 7.0), (11.0, -3.0), (15.0, 2.0)]);
        let (a, b) = split_patch(&patch, &map).unwrap();
        for step in 0..=100 {
            let t = step as f64 / 100.0;
            let original = patch.eval(t);
            let piece = if t <= 0.5 { a.eval(2.0 * t) } else { b.eval(2.0 * t - 1.0) };
            assert!((original - piece).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn split_matches_corner_cutting_subdivision() {
        // Independent oracle: classic De Casteljau subdivision at t = 1/2.
        let map = InterpolationMap::uniform(3).unwrap();
        let patch = cubic([(1.0, 2.0), (5.0, 9.0), (9.0, -4.0), (14.0, 1.0)]);
        let c = patch.control();
        let mut tri = vec![c.to_vec()];
        for level in 1..=3 {
            let prev = &tri[level - 1];
            let next: Vec<Point2> =
                prev.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
            tri.push(next);
        }
        let left: Vec<Point2> = (0..4).map(|i| tri[i][0]).collect();
        let right: Vec<Point2> = (0..4).rev().map(|i| tri[i][tri[i].len() - 1]).collect();
        let (a, b) = split_patch(&patch, &map).unwrap();
        for (got, expect) in a.control().iter().zip(&left) {
            assert!((*got - *expect).norm() < 1e-9);
        }
        for (got, expect) in b.control().iter().zip(&right) {
            assert!((*got - *expect).norm() < 1e-9);
        }
    }

    #[test]
    fn split_cost_is_2d_plus_1_evals_and_2_interpolations() {
        for d in [2usize, 3, 5] {
            let map = InterpolationMap::uniform(d).unwrap();
            let control: Vec<Point2> =
                (0..=d).map(|i| pt(i as f64, (i * i) as f64)).collect();
            let patch = BezierPatch::new(control).unwrap();
            metrics::reset();
            split_patch(&patch, &map).unwrap();
            let counts = metrics::snapshot();
            assert_eq!(counts.curve_evals, (2 * d + 1) as u64, "degree {d}");
            assert_eq!(counts.interpolations, 2, "degree {d}");
        }
    }

    #[test]
    fn split_pass_no_oversized_patches_unchanged() {
        let map = InterpolationMap::uniform(3).unwrap();
        let c = FreeFormContour::circle(pt(0.0, 0.0), 30.0, 8, 3).unwrap();
        let out = split_pass(&c, &map, 1000.0).unwrap();
        assert_eq!(out.len(), c.len());
    }

    #[test]
    fn split_pass_one_oversized_adds_one_patch() {
        let map = InterpolationMap::uniform(3).unwrap();
        let c = FreeFormContour::circle(pt(0.0, 0.0), 30.0, 8, 3).unwrap();
        // Patch chords are about 2*pi*30/8 = 23.6 px; threshold between the
        // max pairwise distance of one patch and the rest splits exactly
        // the patches above it.
        let sizes: Vec<f64> = c.patches().iter().map(max_control_distance).collect();
        let max = sizes.iter().cloned().fold(0.0, f64::max);
        let eps = max * 0.999;
        let expected_splits = sizes.iter().filter(|&&s| s > eps).count();
        let out = split_pass(&c, &map, eps).unwrap();
        assert_eq!(out.len(), c.len() + expected_splits);
        assert!(out.closure_gap() <= CLOSURE_TOL);
        assert!(out.is_sorted_index_valid());
    }

    #[test]
    fn repeated_passes_shrink_geometrically_until_threshold() {
        let map = InterpolationMap::uniform(3).unwrap();
        let mut c = FreeFormContour::circle(pt(0.0, 0.0), 100.0, 4, 3).unwrap();
        let eps = 20.0;
        let mut last_worst = f64::INFINITY;
        for _ in 0..12 {
            let worst = c
                .patches()
                .iter()
                .map(max_control_distance)
                .fold(0.0, f64::max);
            if worst <= eps {
                break;
            }
            assert!(worst < last_worst * 0.75, "no geometric progress: {worst} vs {last_worst}");
            last_worst = worst;
            c = split_pass(&c, &map, eps).unwrap();
        }
        let worst = c
            .patches()
            .iter()
            .map(max_control_distance)
            .fold(0.0, f64::max);
        assert!(worst <= eps);
    }

    #[test]
    fn split_pass_preserves_area_and_orientation() {
        // The curve itself is unchanged by splitting, so a dense shoelace
        // (dense enough that polygonization error is below the tolerance)
        // must agree before and after.
        fn dense_area(c: &FreeFormContour) -> f64 {
            let pts = c.sample(2048);
            let n = pts.len();
            let mut acc = 0.0;
            for i in 0..n {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                acc += a.x * b.y - b.x * a.y;
            }
            0.5 * acc
        }
        let map = InterpolationMap::uniform(3).unwrap();
        let c = FreeFormContour::circle(pt(0.0, 0.0), 80.0, 6, 3).unwrap();
        let before = dense_area(&c);
        let out = split_pass(&c, &map, 30.0).unwrap();
        assert!(out.len() > c.len());
        let after = dense_area(&out);
        assert!(after > 0.0);
        assert!(((after - before) / before).abs() < 1e-6, "area drift {}", (after - before) / before);
    }

    #[test]
    fn merge_pass_no_small_pairs_unchanged() {
        let map = InterpolationMap::uniform(3).unwrap();
        let c = FreeFormContour::circle(pt(0.0, 0.0), 80.0, 8, 3).unwrap();
        let out = merge_pass(&c, &map, 1.0).unwrap();
        assert_eq!(out.len(), c.len());
    }

    #[test]
    fn merge_collinear_pair_is_exact() {
        let map = InterpolationMap::uniform(3).unwrap();
        // A long thin rectangle whose top edge is chopped into two tiny
        // collinear patches.
        let mut points = Vec::new();
        for k in 0..3 {
            points.push(pt(k as f64, 0.0)); // first tiny top patch 0..3
        }
        for k in 0..3 {
            points.push(pt(3.0 + k as f64, 0.0)); // second tiny top patch 3..6
        }
        for k in 0..3 {
            points.push(pt(6.0 + 31.0 * k as f64 / 3.0, 0.0)); // long top to (37,0)
        }
        for k in 0..3 {
            points.push(pt(37.0, 40.0 * k as f64 / 3.0)); // right side down
        }
        for k in 0..3 {
            points.push(pt(37.0 - 37.0 * k as f64 / 3.0, 40.0)); // bottom
        }
        for k in 0..3 {
            points.push(pt(0.0, 40.0 - 40.0 * k as f64 / 3.0)); // left side up
        }
        let c = FreeFormContour::through_points(&points, &map).unwrap();
        assert_eq!(c.len(), 6);
        let out = merge_pass(&c, &map, 8.0).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.closure_gap() <= CLOSURE_TOL);
        // Merged top patch is still the straight segment from (0,0) to (6,0).
        let merged = &out.patches()[0];
        assert!((merged.start() - pt(0.0, 0.0)).norm() < 1e-9);
        assert!((merged.end() - pt(6.0, 0.0)).norm() < 1e-9);
        for step in 0..=20 {
            let p = merged.eval(step as f64 / 20.0);
            assert!(p.y.abs() < 1e-9);
        }
    }

    #[test]
    fn merge_curved_pair_deviation_is_bounded() {
        let map = InterpolationMap::uniform(3).unwrap();
        let c = FreeFormContour::circle(pt(0.0, 0.0), 10.0, 8, 3).unwrap();
        let chord = max_control_distance(&c.patches()[0]);
        let out = merge_pass(&c, &map, chord * 1.01).unwrap();
        assert!(out.len() < c.len());
        // Lossy but bounded: merged curve stays near the circle.
        let mut worst: f64 = 0.0;
        for patch in out.patches() {
            for step in 0..=32 {
                let p = patch.eval(step as f64 / 32.0);
                worst = worst.max((p.norm() - 10.0).abs());
            }
        }
        assert!(worst < 0.5, "deviation from circle after merge: {worst}");
    }

    #[test]
    fn merge_never_shrinks_below_minimal_contour() {
        let map = InterpolationMap::uniform(3).unwrap();
        let c = FreeFormContour::circle(pt(0.0, 0.0), 5.0, 4, 3).unwrap();
        let out = merge_pass(&c, &map, 1e6).unwrap();
        assert_eq!(out.len(), 4);
    }
}
