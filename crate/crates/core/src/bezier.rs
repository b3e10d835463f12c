//! Bezier curve evaluation, interpolation and control-polygon deformation.
//!
//! A patch of degree `d` is stored as its `d + 1` control points. Curve
//! points are evaluated with the De Casteljau corner-cutting recurrence.
//! For a fixed subdivision `t_0 = 0 < t_1 < ... < t_d = 1`, the matrix `V`
//! of Bernstein basis values at the nodes maps control points to on-curve
//! samples; its inverse maps samples back to control points, which gives
//! both interpolation (fit a patch through `d + 1` points) and deformation
//! (move the sampled points by deltas, pull the control points along).
//! `V` and its inverse are computed once per `(degree, nodes)` pair and
//! cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::metrics;
use crate::point::Point2;

/// Largest residual tolerated in the `V * V^-1 = I` check.
const INVERSE_RESIDUAL_TOL: f64 = 1e-9;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// Bernstein basis polynomial `b_{d,i}(t) = C(d,i) t^i (1-t)^(d-i)`.
pub fn bernstein(degree: usize, index: usize, t: f64) -> Result<f64> {
    if index > degree {
        return Err(Error::invalid(format!(
            "bernstein index {index} out of range for degree {degree}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("bernstein parameter {t} outside [0, 1]")));
    }
    Ok(bernstein_unchecked(degree, index, t))
}

pub(crate) fn bernstein_unchecked(degree: usize, index: usize, t: f64) -> f64 {
    binomial(degree, index) * t.powi(index as i32) * (1.0 - t).powi((degree - index) as i32)
}

/// A Bezier patch: `degree + 1` ordered control points.
///
/// The first and last control points are the curve endpoints; interior
/// control points generally do not lie on the curve. A patch with all
/// control points coincident is legal (its derivative is the zero vector).
#[derive(Debug, Clone, PartialEq)]
pub struct BezierPatch {
    control: Vec<Point2>,
}

impl BezierPatch {
    pub fn new(control: Vec<Point2>) -> Result<Self> {
        if control.is_empty() {
            return Err(Error::invalid("a patch needs at least one control point"));
        }
        if let Some(p) = control.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite control point ({}, {})",
                p.x, p.y
            )));
        }
        Ok(BezierPatch { control })
    }

    pub fn degree(&self) -> usize {
        self.control.len() - 1
    }

    pub fn control(&self) -> &[Point2] {
        &self.control
    }

    pub fn start(&self) -> Point2 {
        self.control[0]
    }

    pub fn end(&self) -> Point2 {
        *self.control.last().unwrap()
    }

    /// Reverse the parametrization (control points in opposite order).
    pub fn reversed(&self) -> BezierPatch {
        let mut control = self.control.clone();
        control.reverse();
        BezierPatch { control }
    }

    /// Curve point at `t` by the De Casteljau recurrence.
    ///
    /// At `t = 0` and `t = 1` this returns the first/last control point
    /// exactly (every lerp degenerates to one endpoint).
    pub fn eval(&self, t: f64) -> Point2 {
        debug_assert!((-1e-12..=1.0 + 1e-12).contains(&t), "parameter {t} outside [0,1]");
        metrics::count_curve_eval(1);
        let mut pts = self.control.clone();
        let n = pts.len();
        for level in 1..n {
            for j in 0..n - level {
                pts[j] = pts[j] * (1.0 - t) + pts[j + 1] * t;
            }
        }
        pts[0]
    }

    /// Tangent vector of the parametrization at `t`.
    ///
    /// Evaluates the hodograph patch with control points `d * (P_{i+1} - P_i)`;
    /// a degree-0 patch returns the zero vector.
    pub fn derivative(&self, t: f64) -> Point2 {
        metrics::count_derivative_eval(1);
        let d = self.degree();
        if d == 0 {
            return Point2::ZERO;
        }
        let mut pts: Vec<Point2> = self
            .control
            .windows(2)
            .map(|w| (w[1] - w[0]) * d as f64)
            .collect();
        let n = pts.len();
        for level in 1..n {
            for j in 0..n - level {
                pts[j] = pts[j] * (1.0 - t) + pts[j + 1] * t;
            }
        }
        pts[0]
    }
}

/// Parameter nodes `t_0 = 0 < t_1 < ... < t_d = 1` for interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdivision {
    nodes: Vec<f64>,
}

impl Subdivision {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("a subdivision needs at least two nodes"));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::invalid("subdivision must start at 0 and end at 1"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("subdivision nodes must be strictly increasing"));
        }
        Ok(Subdivision { nodes })
    }

    /// Uniform nodes `t_i = i / d` for degree `d`.
    pub fn uniform(degree: usize) -> Self {
        let nodes = (0..=degree).map(|i| i as f64 / degree as f64).collect();
        Subdivision { nodes }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Precomputed interpolation matrices for a fixed `(degree, nodes)` pair.
#[derive(Debug, Clone)]
pub struct InterpolationMap {
    degree: usize,
    nodes: Subdivision,
    v: Vec<f64>,
    v_inv: Vec<f64>,
}

impl InterpolationMap {
    /// Assemble `V` (Bernstein basis at the nodes) and invert it by Gaussian
    /// elimination with partial pivoting.
    ///
    /// The Bernstein-Vandermonde system is well conditioned for small
    /// degrees; conditioning degrades as the degree grows, so callers should
    /// stay at `degree <= 8` or check the returned error. Because
    /// `b_{d,i}(0) = [i = 0]` and `b_{d,i}(1) = [i = d]`, the exact inverse
    /// has unit first and last rows; those rows are set exactly so endpoint
    /// samples map to endpoint control points without rounding.
    pub fn new(degree: usize, nodes: Subdivision) -> Result<Arc<Self>> {
        if degree < 1 {
            return Err(Error::invalid("interpolation needs degree >= 1"));
        }
        if nodes.degree() != degree {
            return Err(Error::invalid(format!(
                "subdivision has {} nodes, degree {} needs {}",
                nodes.nodes().len(),
                degree,
                degree + 1
            )));
        }
        let n = degree + 1;
        let mut v = vec![0.0; n * n];
        for (k, &t) in nodes.nodes().iter().enumerate() {
            for i in 0..n {
                v[k * n + i] = bernstein_unchecked(degree, i, t);
            }
        }
        let mut v_inv = invert(&v, n)?;
        for j in 0..n {
            v_inv[j] = if j == 0 { 1.0 } else { 0.0 };
            v_inv[(n - 1) * n + j] = if j == n - 1 { 1.0 } else { 0.0 };
        }
        let map = InterpolationMap { degree, nodes, v, v_inv };
        let residual = map.identity_residual();
        if residual > INVERSE_RESIDUAL_TOL {
            return Err(Error::numeric(format!(
                "interpolation matrix inverse residual {residual:.3e} exceeds {INVERSE_RESIDUAL_TOL:.0e} at degree {degree}"
            )));
        }
        Ok(Arc::new(map))
    }

    /// Cached map for the uniform subdivision of `degree`; built exactly once
    /// per degree for the lifetime of the process.
    pub fn uniform(degree: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<InterpolationMap>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        if let Some(map) = guard.get(&degree) {
            return Ok(Arc::clone(map));
        }
        let map = InterpolationMap::new(degree, Subdivision::uniform(degree))?;
        guard.insert(degree, Arc::clone(&map));
        Ok(map)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[f64] {
        self.nodes.nodes()
    }

    pub fn subdivision(&self) -> &Subdivision {
        &self.nodes
    }

    /// Row `k` of `V` (the Bernstein basis evaluated at `t_k`).
    pub fn v_row(&self, k: usize) -> &[f64] {
        let n = self.degree + 1;
        &self.v[k * n..(k + 1) * n]
    }

    /// Max-norm residual of `V * V^-1 - I`.
    pub fn identity_residual(&self) -> f64 {
        let n = self.degree + 1;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.v[r * n + k] * self.v_inv[k * n + c];
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((acc - expect).abs());
            }
        }
        worst
    }

    /// Apply `V^-1` to a sample vector: one interpolation in the cost model.
    fn apply_inverse(&self, rhs: &[Point2]) -> Vec<Point2> {
        metrics::count_interpolation(1);
        let n = self.degree + 1;
        (0..n)
            .map(|i| {
                let mut acc = Point2::ZERO;
                for j in 0..n {
                    acc += rhs[j] * self.v_inv[i * n + j];
                }
                acc
            })
            .collect()
    }

    /// The patch passing through `samples[k]` at node `t_k`.
    pub fn interpolate(&self, samples: &[Point2]) -> Result<BezierPatch> {
        if samples.len() != self.degree + 1 {
            return Err(Error::invalid(format!(
                "expected {} samples for degree {}, got {}",
                self.degree + 1,
                self.degree,
                samples.len()
            )));
        }
        BezierPatch::new(self.apply_inverse(samples))
    }

    /// New patch whose curve passes through `M_k + deltas[k]` at node `t_k`,
    /// where `M_k` are the node samples of `patch`. Equals the old control
    /// points plus `V^-1 * deltas`.
    pub fn deform(&self, patch: &BezierPatch, deltas: &[Point2]) -> Result<BezierPatch> {
        if deltas.len() != self.degree + 1 {
            return Err(Error::invalid(format!(
                "expected {} deltas for degree {}, got {}",
                self.degree + 1,
                self.degree,
                deltas.len()
            )));
        }
        if patch.degree() != self.degree {
            return Err(Error::invalid(format!(
                "patch degree {} does not match map degree {}",
                patch.degree(),
                self.degree
            )));
        }
        let control_deltas = self.apply_inverse(deltas);
        let control = patch
            .control()
            .iter()
            .zip(control_deltas)
            .map(|(&p, dp)| p + dp)
            .collect();
        BezierPatch::new(control)
    }
}

/// Invert a dense `n x n` matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns a numeric error for (near-)singular input.
fn invert(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut work = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                work[r1 * n + col]
                    .abs()
                    .partial_cmp(&work[r2 * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        let pivot = work[pivot_row * n + col];
        if pivot.abs() < 1e-300 {
            return Err(Error::numeric("singular interpolation matrix"));
        }
        if pivot_row != col {
            for j in 0..n {
                work.swap(col * n + j, pivot_row * n + j);
                inv.swap(col * n + j, pivot_row * n + j);
            }
        }
        let inv_pivot = 1.0 / pivot;
        for j in 0..n {
            work[col * n + j] *= inv_pivot;
            inv[col * n + j] *= inv_pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                work[row * n + j] -= factor * work[col * n + j];
                inv[row * n + j] -= factor * inv[col * n + j];
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn bernstein_known_values() {
        assert_eq!(bernstein(2, 1, 0.0).unwrap(), 0.0);
        assert_eq!(bernstein(2, 1, 0.5).unwrap(), 0.5);
        assert_eq!(bernstein(5, 0, 0.0).unwrap(), 1.0);
        assert!((bernstein(3, 2, 0.25).unwrap() - 3.0 * 0.0625 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn bernstein_rejects_bad_arguments() {
        assert!(bernstein(2, 3, 0.5).is_err());
        assert!(bernstein(2, 1, -0.1).is_err());
        assert!(bernstein(2, 1, 1.1).is_err());
    }

    #[test]
    fn bernstein_partition_of_unity() {
        for d in 1..=8 {
            for step in 0..=10 {
                let t = step as f64 / 10.0;
                let sum: f64 = (0..=d).map(|i| bernstein_unchecked(d, i, t)).sum();
                assert!((sum - 1.0).abs() < 1e-12, "d={d} t={t} sum={sum}");
            }
        }
    }

    #[test]
    fn eval_degree_zero_is_constant() {
        let p = BezierPatch::new(vec![pt(3.0, -2.0)]).unwrap();
        assert_eq!(p.eval(0.0), pt(3.0, -2.0));
        assert_eq!(p.eval(0.7), pt(3.0, -2.0));
    }

    #[test]
    fn eval_segment_midpoint() {
        let p = BezierPatch::new(vec![pt(0.0, 0.0), pt(2.0, 0.0)]).unwrap();
        assert_eq!(p.eval(0.5), pt(1.0, 0.0));
    }

    #[test]
    fn eval_matches_bernstein_sum_for_cubic() {
        let p = BezierPatch::new(vec![pt(0.0, 0.0), pt(1.0, 2.0), pt(3.0, 2.0), pt(4.0, 0.0)])
            .unwrap();
        let t = 0.5;
        let mut expect = Point2::ZERO;
        for (i, &c) in p.control().iter().enumerate() {
            expect += c * bernstein_unchecked(3, i, t);
        }
        let got = p.eval(t);
        assert!((got.x - expect.x).abs() < 1e-12);
        assert!((got.y - expect.y).abs() < 1e-12);
    }

    #[test]
    fn eval_endpoints_exact() {
        let p = BezierPatch::new(vec![pt(0.1, 0.7), pt(1.3, 2.9), pt(3.7, -2.2), pt(4.1, 0.3)])
            .unwrap();
        assert_eq!(p.eval(0.0), p.start());
        assert_eq!(p.eval(1.0), p.end());
    }

    #[test]
    fn derivative_of_segment_is_constant() {
        let p = BezierPatch::new(vec![pt(0.0, 0.0), pt(2.0, 0.0)]).unwrap();
        assert_eq!(p.derivative(0.0), pt(2.0, 0.0));
        assert_eq!(p.derivative(0.8), pt(2.0, 0.0));
    }

    #[test]
    fn derivative_at_parabola_apex() {
        let p = BezierPatch::new(vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(2.0, 0.0)]).unwrap();
        let d = p.derivative(0.5);
        assert!((d.x - 2.0).abs() < 1e-12);
        assert!(d.y.abs() < 1e-12);
        // Central finite difference as an independent check.
        let h = 1e-6;
        let fd = (p.eval(0.5 + h) - p.eval(0.5 - h)) / (2.0 * h);
        assert!((d - fd).norm() < 1e-5 * d.norm().max(1.0));
    }

    #[test]
    fn derivative_endpoint_formula() {
        let c = vec![pt(0.0, 0.0), pt(1.0, 3.0), pt(2.0, -1.0), pt(5.0, 2.0)];
        let p = BezierPatch::new(c.clone()).unwrap();
        let expect = (c[1] - c[0]) * 3.0;
        assert_eq!(p.derivative(0.0), expect);
    }

    #[test]
    fn derivative_degree_zero_is_zero() {
        let p = BezierPatch::new(vec![pt(1.0, 1.0)]).unwrap();
        assert_eq!(p.derivative(0.3), Point2::ZERO);
    }

    #[test]
    fn map_degree_one_is_identity() {
        let map = InterpolationMap::new(1, Subdivision::uniform(1)).unwrap();
        assert_eq!(map.v_row(0), &[1.0, 0.0]);
        assert_eq!(map.v_row(1), &[0.0, 1.0]);
        let patch = map.interpolate(&[pt(0.0, 0.0), pt(5.0, 5.0)]).unwrap();
        assert_eq!(patch.control(), &[pt(0.0, 0.0), pt(5.0, 5.0)]);
    }

    #[test]
    fn map_degree_two_middle_row() {
        let map = InterpolationMap::new(2, Subdivision::uniform(2)).unwrap();
        let row = map.v_row(1);
        assert!((row[0] - 0.25).abs() < 1e-15);
        assert!((row[1] - 0.5).abs() < 1e-15);
        assert!((row[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn map_inverse_residual_small() {
        for d in 1..=8 {
            let map = InterpolationMap::uniform(d).unwrap();
            assert!(map.identity_residual() < 1e-9, "degree {d}");
        }
    }

    #[test]
    fn uniform_cache_returns_same_instance() {
        let a = InterpolationMap::uniform(3).unwrap();
        let b = InterpolationMap::uniform(3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn interpolate_reproduces_straight_line() {
        let map = InterpolationMap::uniform(3).unwrap();
        let samples: Vec<Point2> = (0..4).map(|i| pt(i as f64, 2.0 * i as f64)).collect();
        let patch = map.interpolate(&samples).unwrap();
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let p = patch.eval(t);
            assert!((p.y - 2.0 * p.x).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolate_round_trips_control_points() {
        let map = InterpolationMap::uniform(3).unwrap();
        let original =
            BezierPatch::new(vec![pt(0.0, 0.0), pt(1.0, 4.0), pt(3.0, -2.0), pt(5.0, 1.0)])
                .unwrap();
        let samples: Vec<Point2> = map.nodes().iter().map(|&t| original.eval(t)).collect();
        let recovered = map.interpolate(&samples).unwrap();
        for (a, b) in original.control().iter().zip(recovered.control()) {
            assert!((*a - *b).norm() < 1e-9);
        }
    }

    #[test]
    fn interpolate_rejects_wrong_sample_count() {
        let map = InterpolationMap::uniform(3).unwrap();
        assert!(map.interpolate(&[pt(0.0, 0.0)]).is_err());
    }

    #[test]
    fn deform_zero_deltas_is_identity() {
        let map = InterpolationMap::uniform(3).unwrap();
        let patch =
            BezierPatch::new(vec![pt(0.0, 0.0), pt(1.0, 4.0), pt(3.0, -2.0), pt(5.0, 1.0)])
                .unwrap();
        let out = map.deform(&patch, &[Point2::ZERO; 4]).unwrap();
        assert_eq!(out.control(), patch.control());
    }

    #[test]
    fn deform_uniform_delta_translates() {
        let map = InterpolationMap::uniform(3).unwrap();
        let patch =
            BezierPatch::new(vec![pt(0.0, 0.0), pt(1.0, 4.0), pt(3.0, -2.0), pt(5.0, 1.0)])
                .unwrap();
        let c = pt(2.5, -1.5);
        let out = map.deform(&patch, &[c; 4]).unwrap();
        for (a, b) in patch.control().iter().zip(out.control()) {
            assert!((*a + c - *b).norm() < 1e-9);
        }
    }

    #[test]
    fn deform_single_sample_lift_passes_through_lifted_point() {
        let map = InterpolationMap::uniform(3).unwrap();
        let patch =
            BezierPatch::new(vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0), pt(3.0, 0.0)])
                .unwrap();
        let mut deltas = [Point2::ZERO; 4];
        deltas[2] = pt(0.0, 1.5);
        let node = map.nodes()[2];
        let before = patch.eval(node);
        let out = map.deform(&patch, &deltas).unwrap();
        let after = out.eval(node);
        assert!((after - (before + deltas[2])).norm() < 1e-9);
        // Endpoints stay put: unit endpoint rows of the inverse.
        assert_eq!(out.start(), patch.start());
        assert_eq!(out.end(), patch.end());
    }

    #[test]
    fn new_map_rejects_mismatched_nodes() {
        assert!(InterpolationMap::new(3, Subdivision::uniform(2)).is_err());
    }

    #[test]
    fn subdivision_validation() {
        assert!(Subdivision::new(vec![0.0, 0.5, 1.0]).is_ok());
        assert!(Subdivision::new(vec![0.0, 1.0, 0.5]).is_err());
        assert!(Subdivision::new(vec![0.1, 0.5, 1.0]).is_err());
        assert!(Subdivision::new(vec![0.0, 0.5, 0.9]).is_err());
        assert!(Subdivision::new(vec![0.0]).is_err());
    }

    #[test]
    fn patch_rejects_non_finite() {
        assert!(BezierPatch::new(vec![pt(f64::NAN, 0.0)]).is_err());
        assert!(BezierPatch::new(vec![]).is_err());
    }

    #[test]
    fn split_cost_model_counts() {
        // interpolate() is one interpolation regardless of degree.
        let map = InterpolationMap::uniform(3).unwrap();
        metrics::reset();
        let _ = map.interpolate(&[pt(0.0, 0.0), pt(1.0, 1.0), pt(2.0, 1.0), pt(3.0, 0.0)]);
        assert_eq!(metrics::snapshot().interpolations, 1);
    }
}
