//! Closed piecewise-Bezier contours.
//!
//! A free form is an ordered, closed list of same-degree patches: patch
//! `j`'s last control point equals patch `j + 1`'s first (cyclically).
//! Alongside the patches the contour maintains one bounding box per patch
//! (over control points, which bound the curve by convexity) and a
//! permutation of patch indices sorted lexicographically by box. The sorted
//! index is rebuilt with a full counted sort at construction and after
//! topology changes; in-place deformation only repairs it by insertion,
//! which is linear when the order barely moves.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bezier::{BezierPatch, InterpolationMap};
use crate::error::{Error, Result};
use crate::metrics;
use crate::point::Point2;

/// Maximum endpoint gap tolerated by the closure invariant, in pixels.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Polygonization density used by rasterization and signed area.
pub const RASTER_SAMPLES_PER_PATCH: usize = 64;

/// Winding sense of a closed contour under the shoelace sign convention
/// (`Ccw` = positive signed area).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Ccw,
    Cw,
}

impl Orientation {
    pub fn reversed(self) -> Orientation {
        match self {
            Orientation::Ccw => Orientation::Cw,
            Orientation::Cw => Orientation::Ccw,
        }
    }
}

/// Axis-aligned bounding box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn from_points(points: &[Point2]) -> BoundingBox {
        let mut b = BoundingBox {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for p in points {
            b.x_min = b.x_min.min(p.x);
            b.y_min = b.y_min.min(p.y);
            b.x_max = b.x_max.max(p.x);
            b.y_max = b.y_max.max(p.y);
        }
        b
    }

    /// Lexicographic order on `(x_min, y_min, x_max, y_max)`; one counted
    /// box comparison.
    pub fn lex_cmp(&self, other: &BoundingBox) -> Ordering {
        metrics::count_box_comparison(1);
        self.key().partial_cmp(&other.key()).unwrap()
    }

    fn key(&self) -> (f64, f64, f64, f64) {
        (self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

#[derive(Serialize, Deserialize)]
struct ContourDoc {
    degree: usize,
    patches: Vec<Vec<Point2>>,
}

/// A closed contour of `N` Bezier patches of one degree, with its bounding
/// boxes and lexicographically sorted patch index.
#[derive(Debug, Clone)]
pub struct FreeFormContour {
    degree: usize,
    patches: Vec<BezierPatch>,
    boxes: Vec<BoundingBox>,
    sorted_index: Vec<usize>,
}

impl FreeFormContour {
    /// Build a contour from patches, validating degree uniformity and the
    /// closure invariant, then fully sorting the box index.
    pub fn new(degree: usize, patches: Vec<BezierPatch>) -> Result<Self> {
        if patches.len() < 2 {
            return Err(Error::invalid("a closed contour needs at least two patches"));
        }
        if let Some(p) = patches.iter().find(|p| p.degree() != degree) {
            return Err(Error::invalid(format!(
                "patch of degree {} in contour of degree {}",
                p.degree(),
                degree
            )));
        }
        let mut contour = FreeFormContour {
            degree,
            patches,
            boxes: Vec::new(),
            sorted_index: Vec::new(),
        };
        let gap = contour.closure_gap();
        if gap > CLOSURE_TOL {
            return Err(Error::structural(format!(
                "contour is not closed: max endpoint gap {gap:.3e}"
            )));
        }
        contour.recompute_boxes();
        contour.resort_full();
        Ok(contour)
    }

    /// Contour through `N * d` points: patch `i` interpolates points
    /// `i*d ..= i*d + d` (wrapping), so consecutive patches share their
    /// endpoint samples exactly.
    pub fn through_points(points: &[Point2], map: &InterpolationMap) -> Result<Self> {
        let d = map.degree();
        if points.len() % d != 0 || points.len() / d < 2 {
            return Err(Error::invalid(format!(
                "need a multiple of {d} points (at least {}), got {}",
                2 * d,
                points.len()
            )));
        }
        let n = points.len() / d;
        let mut patches = Vec::with_capacity(n);
        let mut samples = Vec::with_capacity(d + 1);
        for i in 0..n {
            samples.clear();
            for k in 0..=d {
                samples.push(points[(i * d + k) % points.len()]);
            }
            patches.push(map.interpolate(&samples)?);
        }
        FreeFormContour::new(d, patches)
    }

    /// Closed contour approximating a circle: `n_patches * degree` equally
    /// spaced points on the circle, interpolated patchwise. The result is
    /// counter-clockwise (positive shoelace area) with outward normals
    /// pointing away from the center.
    pub fn circle(center: Point2, radius: f64, n_patches: usize, degree: usize) -> Result<Self> {
        if n_patches < 3 {
            return Err(Error::invalid("a circle contour needs at least 3 patches"));
        }
        if radius <= 0.0 {
            return Err(Error::invalid("circle radius must be positive"));
        }
        let map = InterpolationMap::uniform(degree)?;
        let total = n_patches * degree;
        let points: Vec<Point2> = (0..total)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / total as f64;
                center + Point2::new(radius * theta.cos(), radius * theta.sin())
            })
            .collect();
        let contour = FreeFormContour::through_points(&points, &map)?;
        debug_assert_eq!(contour.orientation(), Orientation::Ccw);
        debug_assert!({
            // Outward sanity check against the centroid, valid for convex
            // initial contours.
            let tangent = contour.patches[0].derivative(0.5);
            let normal = Point2::new(tangent.y, -tangent.x);
            let at = contour.patches[0].eval(0.5);
            (at - center).dot(normal) > 0.0
        });
        Ok(contour)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patches(&self) -> &[BezierPatch] {
        &self.patches
    }

    pub fn boxes(&self) -> &[BoundingBox] {
        &self.boxes
    }

    pub fn sorted_index(&self) -> &[usize] {
        &self.sorted_index
    }

    /// Number of distinct control points (`N * d`; shared endpoints counted
    /// once).
    pub fn point_count(&self) -> usize {
        self.patches.len() * self.degree
    }

    /// Largest gap between consecutive patch endpoints (cyclically).
    pub fn closure_gap(&self) -> f64 {
        let n = self.patches.len();
        (0..n)
            .map(|i| self.patches[i].end().distance(self.patches[(i + 1) % n].start()))
            .fold(0.0, f64::max)
    }

    /// Check closure, box tightness and index ordering; used before
    /// operations that rely on the structure being intact.
    pub fn validate(&self) -> Result<()> {
        let gap = self.closure_gap();
        if gap > CLOSURE_TOL {
            return Err(Error::structural(format!("closure gap {gap:.3e}")));
        }
        if self.boxes.len() != self.patches.len() {
            return Err(Error::structural("box list length mismatch"));
        }
        if !self.is_sorted_index_valid() {
            return Err(Error::structural("sorted index is stale"));
        }
        Ok(())
    }

    /// True when `sorted_index` is a permutation in lexicographic box order.
    pub fn is_sorted_index_valid(&self) -> bool {
        let n = self.patches.len();
        if self.sorted_index.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &i in &self.sorted_index {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        self.sorted_index
            .windows(2)
            .all(|w| self.boxes[w[0]].lex_cmp(&self.boxes[w[1]]) != Ordering::Greater)
    }

    /// Evaluate the global parametrization: `t` in `[(i-1)/N, i/N]` maps to
    /// patch `i` at local parameter `N*t - i + 1`.
    pub fn eval_global(&self, t: f64) -> Point2 {
        let n = self.patches.len();
        let u = t.clamp(0.0, 1.0) * n as f64;
        let mut i = u.floor() as usize;
        if i >= n {
            i = n - 1;
        }
        self.patches[i].eval(u - i as f64)
    }

    /// Sample the contour in order with `samples_per_patch` parameters per
    /// patch; node points shared between consecutive patches are emitted
    /// once, so the result has `N * (samples_per_patch - 1)` points.
    pub fn sample(&self, samples_per_patch: usize) -> Vec<Point2> {
        assert!(samples_per_patch >= 2, "need at least two samples per patch");
        let mut out = Vec::with_capacity(self.patches.len() * (samples_per_patch - 1));
        for patch in &self.patches {
            for k in 0..samples_per_patch - 1 {
                let t = k as f64 / (samples_per_patch - 1) as f64;
                out.push(patch.eval(t));
            }
        }
        out
    }

    /// Shoelace area over a dense polygonization; positive for
    /// counter-clockwise contours.
    pub fn signed_area(&self) -> f64 {
        let pts = self.sample(RASTER_SAMPLES_PER_PATCH);
        shoelace(&pts)
    }

    pub fn orientation(&self) -> Orientation {
        if self.signed_area() >= 0.0 {
            Orientation::Ccw
        } else {
            Orientation::Cw
        }
    }

    /// Same curve traversed in the opposite direction.
    pub fn reversed(&self) -> FreeFormContour {
        let mut patches: Vec<BezierPatch> = self.patches.iter().map(|p| p.reversed()).collect();
        patches.reverse();
        let mut c = FreeFormContour {
            degree: self.degree,
            patches,
            boxes: Vec::new(),
            sorted_index: Vec::new(),
        };
        c.recompute_boxes();
        c.resort_full();
        c
    }

    /// Rasterize this contour alone.
    pub fn rasterize(&self, width: usize, height: usize) -> Result<RegionMask> {
        rasterize_region(&[self], width, height)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = ContourDoc {
            degree: self.degree,
            patches: self.patches.iter().map(|p| p.control().to_vec()).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: ContourDoc = serde_json::from_str(json)?;
        let patches = doc
            .patches
            .into_iter()
            .map(BezierPatch::new)
            .collect::<Result<Vec<_>>>()?;
        FreeFormContour::new(doc.degree, patches)
    }

    pub(crate) fn recompute_boxes(&mut self) {
        self.boxes = self
            .patches
            .iter()
            .map(|p| BoundingBox::from_points(p.control()))
            .collect();
    }

    /// Full counted sort of the box index (used at construction and after
    /// flips).
    pub(crate) fn resort_full(&mut self) {
        let mut perm: Vec<usize> = (0..self.patches.len()).collect();
        let boxes = &self.boxes;
        perm.sort_by(|&a, &b| boxes[a].lex_cmp(&boxes[b]).then(a.cmp(&b)));
        self.sorted_index = perm;
    }

    /// Insertion repair of an almost-sorted index; linear in `N` plus the
    /// number of inversions.
    pub(crate) fn resort_insertion(&mut self) {
        let perm = &mut self.sorted_index;
        let boxes = &self.boxes;
        for i in 1..perm.len() {
            let mut j = i;
            while j > 0 {
                let ord = boxes[perm[j - 1]]
                    .lex_cmp(&boxes[perm[j]])
                    .then(perm[j - 1].cmp(&perm[j]));
                if ord == Ordering::Greater {
                    perm.swap(j - 1, j);
                    j -= 1;
                } else {
                    break;
                }
            }
        }
    }

    /// Replace all patches in place (same count), refresh boxes and repair
    /// the index by insertion. Used by the deformation step, where boxes
    /// move by at most one balloon step.
    pub(crate) fn replace_patches_in_place(&mut self, patches: Vec<BezierPatch>) {
        debug_assert_eq!(patches.len(), self.patches.len());
        self.patches = patches;
        self.recompute_boxes();
        self.resort_insertion();
        debug_assert!(self.closure_gap() <= CLOSURE_TOL);
    }

    /// Replace the patch list with one where each old patch `i` became
    /// `expansion[i]` consecutive patches (1 = kept, 2 = split, 0 = merged
    /// into the previous). The old sorted order seeds the provisional
    /// permutation, then insertion repair fixes it up.
    pub(crate) fn replace_patches_expanded(
        &mut self,
        patches: Vec<BezierPatch>,
        expansion: &[usize],
    ) {
        debug_assert_eq!(expansion.len(), self.patches.len());
        debug_assert_eq!(expansion.iter().sum::<usize>(), patches.len());
        let mut start = vec![0usize; expansion.len()];
        let mut acc = 0;
        for (i, &e) in expansion.iter().enumerate() {
            start[i] = acc;
            acc += e;
        }
        let mut perm = Vec::with_capacity(patches.len());
        for &old in &self.sorted_index {
            for k in 0..expansion[old] {
                perm.push(start[old] + k);
            }
        }
        self.patches = patches;
        self.recompute_boxes();
        self.sorted_index = perm;
        self.resort_insertion();
        debug_assert!(self.closure_gap() <= CLOSURE_TOL);
    }
}

fn shoelace(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Boolean per-pixel region; pixel `(x, y)` corresponds to the lattice
/// point at those integer coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl RegionMask {
    pub fn new(width: usize, height: usize) -> Self {
        RegionMask { width, height, data: vec![false; width * height] }
    }

    /// Build from a per-pixel predicate.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = RegionMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        if x < self.width && y < self.height {
            self.data[y * self.width + x] = value;
        }
    }

    /// Inside test for a real-valued point (nearest pixel).
    pub fn contains_point(&self, p: Point2) -> bool {
        let x = p.x.round();
        let y = p.y.round();
        if x < 0.0 || y < 0.0 {
            return false;
        }
        self.get(x as usize, y as usize)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Pixels in `self` but not in `other`.
    pub fn and_not(&self, other: &RegionMask) -> RegionMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        RegionMask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && !b)
                .collect(),
        }
    }

    pub fn union(&self, other: &RegionMask) -> RegionMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        RegionMask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a || b)
                .collect(),
        }
    }

    pub fn intersection_count(&self, other: &RegionMask) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    /// Intersection-over-union with another mask of the same size.
    pub fn iou(&self, other: &RegionMask) -> f64 {
        let inter = self.intersection_count(other);
        let union = self.count() + other.count() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Is `self` a superset of `other`?
    pub fn contains_mask(&self, other: &RegionMask) -> bool {
        self.data
            .iter()
            .zip(&other.data)
            .all(|(&a, &b)| a || !b)
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }
}

/// Even-odd scanline fill of the polygons formed by dense contour samples
/// (64 per patch). Pixels exactly on the boundary count as inside.
///
/// Nested contours produce holes (annuli) by parity.
pub fn rasterize_region(
    contours: &[&FreeFormContour],
    width: usize,
    height: usize,
) -> Result<RegionMask> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("mask dimensions must be positive"));
    }
    let mut mask = RegionMask::new(width, height);
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); height];
    let mut horizontal_spans: Vec<(usize, f64, f64)> = Vec::new();

    for contour in contours {
        let gap = contour.closure_gap();
        if gap > CLOSURE_TOL {
            return Err(Error::structural(format!(
                "cannot rasterize an open contour (gap {gap:.3e})"
            )));
        }
        // Interpolated straight edges carry ~1e-15 wobble; snap vertex
        // coordinates that sit within 1e-7 of a pixel row/column so exactly
        // horizontal boundary runs are recognized as such.
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() <= 1e-7 {
                r
            } else {
                v
            }
        };
        let pts: Vec<Point2> = contour
            .sample(RASTER_SAMPLES_PER_PATCH)
            .into_iter()
            .map(|p| Point2::new(snap(p.x), snap(p.y)))
            .collect();
        let n = pts.len();
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            if a.y == b.y {
                // Horizontal edge exactly on a pixel row: its pixels are
                // boundary pixels and count as inside.
                if a.y == a.y.round() && a.y >= 0.0 && a.y < height as f64 {
                    horizontal_spans.push((a.y as usize, a.x.min(b.x), a.x.max(b.x)));
                }
                continue;
            }
            let (lo, hi) = if a.y < b.y { (a, b) } else { (b, a) };
            let y_start = lo.y.ceil().max(0.0) as usize;
            let mut y = y_start as f64;
            while y < hi.y && (y as usize) < height {
                let t = (y - lo.y) / (hi.y - lo.y);
                crossings[y as usize].push(lo.x + t * (hi.x - lo.x));
                y += 1.0;
            }
        }
    }

    for (y, xs) in crossings.iter_mut().enumerate() {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in xs.chunks_exact(2) {
            let x0 = (pair[0] - 1e-9).ceil().max(0.0) as usize;
            let x1f = (pair[1] + 1e-9).floor();
            if x1f < 0.0 {
                continue;
            }
            let x1 = (x1f as usize).min(width - 1);
            for x in x0..=x1 {
                if x < width {
                    mask.set(x, y, true);
                }
            }
        }
    }

    for (y, x_lo, x_hi) in horizontal_spans {
        let x0 = (x_lo - 1e-9).ceil().max(0.0) as usize;
        let x1f = (x_hi + 1e-9).floor();
        if x1f < 0.0 {
            continue;
        }
        let x1 = (x1f as usize).min(width.saturating_sub(1));
        for x in x0..=x1 {
            mask.set(x, y, true);
        }
    }

    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn square_contour(origin: Point2, side: f64) -> FreeFormContour {
        let map = InterpolationMap::uniform(3).unwrap();
        let corners = [
            origin,
            origin + pt(side, 0.0),
            origin + pt(side, side),
            origin + pt(0.0, side),
        ];
        let mut points = Vec::new();
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            for k in 0..3 {
                points.push(a + (b - a) * (k as f64 / 3.0));
            }
        }
        FreeFormContour::through_points(&points, &map).unwrap()
    }

    #[test]
    fn circle_endpoints_on_circle() {
        let c = FreeFormContour::circle(pt(0.0, 0.0), 100.0, 8, 3).unwrap();
        for patch in c.patches() {
            assert!((patch.start().norm() - 100.0).abs() < 1e-9);
            assert!((patch.end().norm() - 100.0).abs() < 1e-9);
        }
        assert!(c.closure_gap() <= CLOSURE_TOL);
    }

    #[test]
    fn circle_mid_patch_radius_error_small() {
        let c = FreeFormContour::circle(pt(0.0, 0.0), 100.0, 8, 3).unwrap();
        for patch in c.patches() {
            for step in 1..8 {
                let r = patch.eval(step as f64 / 8.0).norm();
                assert!((r - 100.0).abs() < 0.5, "radius deviation {}", (r - 100.0).abs());
            }
        }
    }

    #[test]
    fn circle_rejects_bad_arguments() {
        assert!(FreeFormContour::circle(pt(0.0, 0.0), 10.0, 2, 3).is_err());
        assert!(FreeFormContour::circle(pt(0.0, 0.0), -1.0, 8, 3).is_err());
    }

    #[test]
    fn global_eval_endpoints_and_boundaries() {
        let c = FreeFormContour::circle(pt(0.0, 0.0), 50.0, 6, 3) .unwrap();
        let p0 = c.patches()[0].start();
        assert_eq!(c.eval_global(0.0), p0);
        assert!((c.eval_global(1.0) - p0).norm() <= CLOSURE_TOL);
        for i in 0..c.len() {
            let t = i as f64 / c.len() as f64;
            let expect = c.patches()[i].start();
            assert!((c.eval_global(t) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn global_eval_continuous_at_patch_boundaries() {
        let c = FreeFormContour::circle(pt(0.0, 0.0), 50.0, 6, 3).unwrap();
        let patch_len = 2.0 * std::f64::consts::PI * 50.0 / 6.0;
        let eps = 1e-6;
        for i in 1..c.len() {
            let t = i as f64 / c.len() as f64;
            let jump = (c.eval_global(t - eps) - c.eval_global(t + eps)).norm();
            assert!(jump < 1e-3 * patch_len, "jump {jump} at boundary {i}");
        }
    }

    #[test]
    fn sample_count_and_endpoints() {
        let c = FreeFormContour::circle(pt(0.0, 0.0), 50.0, 6, 3).unwrap();
        let s = c.sample(5);
        assert_eq!(s.len(), 6 * 4);
        assert_eq!(s[0], c.patches()[0].start());
        assert_eq!(s[4], c.patches()[1].start());
        for p in &s {
            assert!((p.norm() - 50.0).abs() < 0.5);
        }
    }

    #[test]
    fn signed_area_circle() {
        let c = FreeFormContour::circle(pt(10.0, -5.0), 40.0, 8, 3).unwrap();
        let area = c.signed_area();
        let expect = std::f64::consts::PI * 40.0 * 40.0;
        assert!(area > 0.0);
        assert!((area - expect).abs() < 0.01 * expect, "area {area} vs {expect}");
        let rev = c.reversed();
        assert!((rev.signed_area() + area).abs() < 1e-6);
        assert_eq!(rev.orientation(), Orientation::Cw);
    }

    #[test]
    fn json_round_trip_bit_exact() {
        let c = FreeFormContour::circle(pt(0.123456789, 9.87654321), 33.25, 5, 3).unwrap();
        let json = c.to_json_string().unwrap();
        let back = FreeFormContour::from_json_str(&json).unwrap();
        assert_eq!(c.degree(), back.degree());
        for (a, b) in c.patches().iter().zip(back.patches()) {
            for (pa, pb) in a.control().iter().zip(b.control()) {
                assert_eq!(pa.x.to_bits(), pb.x.to_bits());
                assert_eq!(pa.y.to_bits(), pb.y.to_bits());
            }
        }
        assert_eq!(json, back.to_json_string().unwrap());
    }

    #[test]
    fn rejects_open_contour() {
        let map = InterpolationMap::uniform(3).unwrap();
        let a = map
            .interpolate(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0), pt(3.0, 0.0)])
            .unwrap();
        let b = map
            .interpolate(&[pt(3.0, 0.0), pt(3.0, 1.0), pt(3.0, 2.0), pt(3.0, 3.0)])
            .unwrap();
        // Two patches that do not loop back to the start.
        assert!(FreeFormContour::new(3, vec![a, b]).is_err());
    }

    #[test]
    fn sorted_index_is_valid_permutation() {
        let c = FreeFormContour::circle(pt(0.0, 0.0), 75.0, 12, 3).unwrap();
        assert!(c.is_sorted_index_valid());
    }

    #[test]
    fn rasterize_square_area() {
        let side = 20.0;
        let c = square_contour(pt(5.0, 5.0), side);
        let mask = c.rasterize(40, 40).unwrap();
        let count = mask.count() as f64;
        let area = side * side;
        let perimeter = 4.0 * side;
        assert!((count - area).abs() <= 2.0 * perimeter, "count {count} area {area}");
        // Boundary pixels count as inside.
        assert!(mask.get(5, 5));
        assert!(mask.get(25, 25));
        assert!(mask.get(15, 25));
    }

    #[test]
    fn rasterize_outside_image_is_empty() {
        let c = square_contour(pt(100.0, 100.0), 20.0);
        let mask = c.rasterize(50, 50).unwrap();
        assert!(mask.is_empty());
    }

    #[test]
    fn rasterize_nested_contours_make_annulus() {
        let outer = square_contour(pt(5.0, 5.0), 30.0);
        let inner = square_contour(pt(15.0, 15.0), 10.0);
        let mask = rasterize_region(&[&outer, &inner], 50, 50).unwrap();
        let outer_only = outer.rasterize(50, 50).unwrap();
        let inner_only = inner.rasterize(50, 50).unwrap();
        let got = mask.count() as f64;
        // Boundary-inclusive fills overlap on the shared boundary ring, so
        // compare against the analytic difference with a perimeter margin.
        let expect = outer_only.count() as f64 - inner_only.count() as f64;
        assert!((got - expect).abs() <= 2.0 * 4.0 * 10.0 + 8.0, "got {got} expect {expect}");
        assert!(!mask.get(20, 20));
        assert!(mask.get(7, 7));
    }

    #[test]
    fn rasterize_circle_area_within_two_percent() {
        for r in [20.0, 35.0, 60.0] {
            let c = FreeFormContour::circle(pt(80.0, 80.0), r, 8, 3).unwrap();
            let mask = c.rasterize(160, 160).unwrap();
            let expect = std::f64::consts::PI * r * r;
            let got = mask.count() as f64;
            assert!(
                (got - expect).abs() < 0.02 * expect,
                "r {r}: got {got}, expect {expect}"
            );
        }
    }

    #[test]
    fn mask_set_ops() {
        let a = RegionMask::from_fn(4, 4, |x, _| x < 2);
        let b = RegionMask::from_fn(4, 4, |x, y| x < 2 && y < 2);
        assert_eq!(a.and_not(&b).count(), 4);
        assert_eq!(a.union(&b).count(), 8);
        assert!(a.contains_mask(&b));
        assert!(!b.contains_mask(&a));
        assert_eq!(a.iou(&b), 0.5);
    }
}
