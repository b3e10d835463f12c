//! Self-intersection detection and flip-based topology changes.
//!
//! Candidate patch pairs are found with a cheap filter: patch bounding
//! boxes, swept in the lexicographically sorted order maintained by the
//! contour. Only candidates that survive the filter are handed to the exact
//! test, which checks every segment pair of the two control polygons with
//! robust orientation predicates. Control polygons bound their curves (by
//! convexity), so a curve crossing cannot escape the filter.
//!
//! A confirmed crossing between patches `i < j` is resolved by the flip:
//! the two control polygons swap their tails around `k = floor(d/2)`, which
//! reconnects the contour into two closed components — the short chain
//! between `i` and `j` (plus the flipped closing patch) separates from the
//! rest. Tangential contact is treated as no intersection: only proper
//! crossings (strict straddles both ways) trigger a flip.

use robust::{orient2d, Coord};

use crate::bezier::BezierPatch;
use crate::contour::{BoundingBox, FreeFormContour};
use crate::error::{Error, Result};
use crate::metrics;
use crate::point::Point2;

/// A pair of distinct, cyclically non-successive patch indices whose
/// bounding boxes overlap (`first < second`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IntersectionCandidate {
    pub first: usize,
    pub second: usize,
}

/// A contour split into its connected components; `outer` is the component
/// with the largest absolute signed area.
#[derive(Debug, Clone)]
pub struct ComponentSet {
    pub outer: FreeFormContour,
    pub inner: Vec<FreeFormContour>,
}

impl ComponentSet {
    pub fn single(outer: FreeFormContour) -> Self {
        ComponentSet { outer, inner: Vec::new() }
    }

    pub fn component_count(&self) -> usize {
        1 + self.inner.len()
    }
}

/// Closed-box overlap test. Boxes touching in a point or an edge intersect.
pub fn box_inter(b1: &BoundingBox, b2: &BoundingBox) -> bool {
    metrics::count_box_comparison(1);
    !(b1.x_max < b2.x_min
        || b2.x_max < b1.x_min
        || b1.y_max < b2.y_min
        || b2.y_max < b1.y_min)
}

fn cyclically_adjacent(i: usize, j: usize, n: usize) -> bool {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    b - a == 1 || (a == 0 && b == n - 1)
}

/// Sweep the sorted box list and emit every non-successive pair whose boxes
/// overlap. Expects a valid sorted index (structural error otherwise);
/// costs `O(N + m)` box comparisons where `m` is the number of x-overlaps.
pub fn find_candidates(contour: &FreeFormContour) -> Result<Vec<IntersectionCandidate>> {
    if !contour.is_sorted_index_valid() {
        return Err(Error::structural("sorted index is stale; resort before sweeping"));
    }
    let n = contour.len();
    let perm = contour.sorted_index();
    let boxes = contour.boxes();
    let mut out = Vec::new();
    for si in 0..n {
        let i = perm[si];
        for &j in &perm[si + 1..] {
            metrics::count_box_comparison(1);
            if boxes[j].x_min > boxes[i].x_max {
                break;
            }
            if cyclically_adjacent(i, j, n) {
                continue;
            }
            if box_inter(&boxes[i], &boxes[j]) {
                out.push(IntersectionCandidate { first: i.min(j), second: i.max(j) });
            }
        }
    }
    out.sort();
    Ok(out)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    orient2d(
        Coord { x: a.x, y: a.y },
        Coord { x: b.x, y: b.y },
        Coord { x: c.x, y: c.y },
    )
}

/// Proper (interior, transversal) intersection of two segments, decided
/// with exact orientation predicates. Collinear overlap and endpoint
/// contact do not count.
pub fn segments_properly_intersect(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> bool {
    metrics::count_segment_test(1);
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// True iff any segment of `a`'s control polygon properly intersects any
/// segment of `b`'s (`d * d` exact segment tests).
pub fn polygons_intersect(a: &BezierPatch, b: &BezierPatch) -> bool {
    let ca = a.control();
    let cb = b.control();
    for sa in ca.windows(2) {
        for sb in cb.windows(2) {
            if segments_properly_intersect(sa[0], sa[1], sb[0], sb[1]) {
                return true;
            }
        }
    }
    false
}

/// Flip the control points of crossing patches `i < j` and reconnect the
/// contour into two closed components.
///
/// With `k = floor(d/2)`, the patch closing the big chain takes the head of
/// `i`'s polygon and the tail of `j`'s; the patch closing the short chain
/// (`i+1 .. j-1`) takes the head of `j`'s and the tail of `i`'s. No control
/// point is created or destroyed. Fails with a structural error when the
/// two new patches still intersect (incompatible orientations).
pub fn flip(contour: &FreeFormContour, cand: IntersectionCandidate) -> Result<ComponentSet> {
    let n = contour.len();
    let (i, j) = (cand.first, cand.second);
    if i >= j || j >= n {
        return Err(Error::invalid(format!("bad candidate ({i}, {j}) for {n} patches")));
    }
    if cyclically_adjacent(i, j, n) {
        return Err(Error::invalid(format!(
            "candidate ({i}, {j}) is cyclically adjacent"
        )));
    }
    let d = contour.degree();
    let k = d / 2;
    let pi = contour.patches()[i].control();
    let pj = contour.patches()[j].control();

    let mut outer_close = Vec::with_capacity(d + 1);
    outer_close.extend_from_slice(&pi[..=k]);
    outer_close.extend_from_slice(&pj[k + 1..]);
    let outer_close = BezierPatch::new(outer_close)?;

    let mut inner_close = Vec::with_capacity(d + 1);
    inner_close.extend_from_slice(&pj[..=k]);
    inner_close.extend_from_slice(&pi[k + 1..]);
    let inner_close = BezierPatch::new(inner_close)?;

    if polygons_intersect(&outer_close, &inner_close) {
        return Err(Error::structural(format!(
            "flip of ({i}, {j}) did not separate the crossing"
        )));
    }

    let mut big_chain = Vec::with_capacity(n - (j - i));
    big_chain.extend_from_slice(&contour.patches()[..i]);
    big_chain.push(outer_close);
    big_chain.extend_from_slice(&contour.patches()[j + 1..]);

    let mut short_chain = Vec::with_capacity(j - i);
    short_chain.extend_from_slice(&contour.patches()[i + 1..j]);
    short_chain.push(inner_close);

    let big = FreeFormContour::new(d, big_chain)?;
    let short = FreeFormContour::new(d, short_chain)?;

    if big.signed_area().abs() >= short.signed_area().abs() {
        Ok(ComponentSet { outer: big, inner: vec![short] })
    } else {
        Ok(ComponentSet { outer: short, inner: vec![big] })
    }
}

/// Repeatedly sweep, test and flip until no proper control-polygon
/// intersection remains between non-successive patches of any component.
///
/// Candidates whose flip fails to separate are skipped. The number of flips
/// is capped at the initial patch count; exceeding the cap is a structural
/// error.
pub fn resolve_topology(contour: FreeFormContour) -> Result<ComponentSet> {
    let cap = contour.len();
    let mut flips = 0usize;
    let mut work = vec![contour];
    let mut done: Vec<FreeFormContour> = Vec::new();
    while let Some(c) = work.pop() {
        let mut flipped = false;
        for cand in find_candidates(&c)? {
            if !polygons_intersect(&c.patches()[cand.first], &c.patches()[cand.second]) {
                continue;
            }
            if flips >= cap {
                return Err(Error::structural(format!(
                    "topology resolution exceeded {cap} flips"
                )));
            }
            match flip(&c, cand) {
                Ok(cs) => {
                    flips += 1;
                    work.push(cs.outer);
                    work.extend(cs.inner);
                    flipped = true;
                    break;
                }
                // Unresolvable crossing at this candidate; try the next.
                Err(Error::Structural(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        if !flipped {
            done.push(c);
        }
    }
    let outer_pos = done
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.signed_area()
                .abs()
                .partial_cmp(&b.signed_area().abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .expect("at least one component");
    let outer = done.remove(outer_pos);
    Ok(ComponentSet { outer, inner: done })
}

/// Does any non-successive patch pair of the contour properly intersect?
pub fn has_self_intersection(contour: &FreeFormContour) -> Result<bool> {
    Ok(find_candidates(contour)?
        .into_iter()
        .any(|c| polygons_intersect(&contour.patches()[c.first], &contour.patches()[c.second])))
}
