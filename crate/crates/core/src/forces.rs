//! Image-derived force field and the balloon displacement rule.
//!
//! The diffusion map is `f_diff = 1 / (1 + f_edge)` with
//! `f_edge = |grad(G_sigma * I)|^p`: close to 1 in homogeneous regions,
//! close to 0 near edges. The gradient magnitude is expressed in units of
//! the peak response of a full-contrast step edge at the same sigma
//! (`|grad| * sigma * sqrt(2*pi) / gradient_ref`), so the same `edge_stop`
//! threshold freezes the contour roughly one pixel from an edge regardless
//! of smoothing scale or intensity encoding.
//!
//! A sampled contour point moves by `step * f_diff` along the outward
//! normal while `f_diff` is above `edge_stop`; once it drops below, the
//! point has reached an edge and is frozen.

use crate::bezier::BezierPatch;
use crate::contour::Orientation;
use crate::error::{Error, Result};
use crate::metrics;
use crate::point::Point2;

/// Default gradient reference level: fraction of a full-contrast step
/// response treated as unit edge strength.
pub const DEFAULT_GRADIENT_REF: f64 = 0.35;

/// Edge weight assigned to binary Canny edge pixels.
const CANNY_EDGE_WEIGHT: f64 = 99.0;

/// Grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::invalid(format!(
                "image data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::invalid("intensities must be finite and within [0, 1]"));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn from_luma8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| b as f64 / 255.0).collect();
        GrayImage::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Intensity at integer coordinates, replicating the border outside.
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Normalized 1-D Gaussian taps with radius `ceil(3*sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64 * k as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian convolution of a raw plane with replicated borders.
pub(crate) fn blur_plane(data: &[f64], width: usize, height: usize, sigma: f64) -> Result<Vec<f64>> {
    if sigma <= 0.0 {
        return Err(Error::invalid("sigma must be positive"));
    }
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as isize;
    if (width as isize) < 2 * radius + 1 || (height as isize) < 2 * radius + 1 {
        return Err(Error::invalid(format!(
            "image {width}x{height} smaller than kernel support {}",
            2 * radius + 1
        )));
    }
    let (w, h) = (width, height);
    let at = |x: isize, y: isize| {
        let xi = x.clamp(0, w as isize - 1) as usize;
        let yi = y.clamp(0, h as isize - 1) as usize;
        data[yi * w + xi]
    };
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                acc += tap * at(x as isize + k as isize - radius, y as isize);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                let yy = (y as isize + k as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += tap * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    Ok(out)
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let mut out = blur_plane(&img.data, img.width, img.height, sigma)?;
    for v in &mut out {
        *v = v.clamp(0.0, 1.0);
    }
    GrayImage::new(img.width, img.height, out)
}

/// Per-pixel edge magnitude, diffusion map and edge-map gradient.
#[derive(Debug, Clone)]
pub struct ForceField {
    width: usize,
    height: usize,
    f_edge: Vec<f64>,
    f_diff: Vec<f64>,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
    sigma: f64,
    p: u32,
}

impl ForceField {
    /// Build with the default gradient reference level.
    pub fn build(img: &GrayImage, sigma: f64, p: u32) -> Result<Self> {
        Self::build_scaled(img, sigma, p, DEFAULT_GRADIENT_REF)
    }

    /// Build the smoothed-gradient edge map and its diffusion map.
    pub fn build_scaled(img: &GrayImage, sigma: f64, p: u32, gradient_ref: f64) -> Result<Self> {
        if p < 1 {
            return Err(Error::invalid("edge power p must be >= 1"));
        }
        if gradient_ref <= 0.0 {
            return Err(Error::invalid("gradient reference must be positive"));
        }
        let blurred = gaussian_blur(img, sigma)?;
        let (w, h) = (img.width, img.height);
        let scale = sigma * (2.0 * std::f64::consts::PI).sqrt() / gradient_ref;
        let mut f_edge = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let gx = (blurred.get_clamped(x as isize + 1, y as isize)
                    - blurred.get_clamped(x as isize - 1, y as isize))
                    / 2.0;
                let gy = (blurred.get_clamped(x as isize, y as isize + 1)
                    - blurred.get_clamped(x as isize, y as isize - 1))
                    / 2.0;
                let mag = gx.hypot(gy) * scale;
                f_edge[y * w + x] = mag.powi(p as i32);
            }
        }
        Self::from_edge_map(f_edge, w, h, sigma, p)
    }

    /// Build from a Canny binary edge map instead of the raw gradient
    /// magnitude. Thresholds are relative to the maximum gradient magnitude.
    pub fn build_canny(img: &GrayImage, sigma: f64, low: f64, high: f64) -> Result<Self> {
        if !(0.0 < low && low <= high && high <= 1.0) {
            return Err(Error::invalid("need 0 < low <= high <= 1 for canny thresholds"));
        }
        let edges = canny_edges(img, sigma, low, high)?;
        let (w, h) = (img.width, img.height);
        let f_edge = edges
            .into_iter()
            .map(|e| if e { CANNY_EDGE_WEIGHT } else { 0.0 })
            .collect();
        Self::from_edge_map(f_edge, w, h, sigma, 1)
    }

    /// Build from an externally supplied edge-magnitude plane.
    pub fn from_edge_map(f_edge: Vec<f64>, w: usize, h: usize, sigma: f64, p: u32) -> Result<Self> {
        let f_diff: Vec<f64> = f_edge.iter().map(|&e| 1.0 / (1.0 + e)).collect();
        let mut grad_x = vec![0.0; w * h];
        let mut grad_y = vec![0.0; w * h];
        let at = |x: isize, y: isize| {
            let xi = x.clamp(0, w as isize - 1) as usize;
            let yi = y.clamp(0, h as isize - 1) as usize;
            f_edge[yi * w + xi]
        };
        for y in 0..h {
            for x in 0..w {
                grad_x[y * w + x] =
                    (at(x as isize + 1, y as isize) - at(x as isize - 1, y as isize)) / 2.0;
                grad_y[y * w + x] =
                    (at(x as isize, y as isize + 1) - at(x as isize, y as isize - 1)) / 2.0;
            }
        }
        Ok(ForceField { width: w, height: h, f_edge, f_diff, grad_x, grad_y, sigma, p })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn f_edge(&self) -> &[f64] {
        &self.f_edge
    }

    pub fn f_diff(&self) -> &[f64] {
        &self.f_diff
    }

    pub fn grad(&self, x: usize, y: usize) -> Point2 {
        Point2::new(self.grad_x[y * self.width + x], self.grad_y[y * self.width + x])
    }

    fn bilinear(&self, data: &[f64], p: Point2) -> f64 {
        let x = p.x.clamp(0.0, (self.width - 1) as f64);
        let y = p.y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = data[y0 * self.width + x0];
        let v10 = data[y0 * self.width + x1];
        let v01 = data[y1 * self.width + x0];
        let v11 = data[y1 * self.width + x1];
        v00 * (1.0 - fx) * (1.0 - fy)
            + v10 * fx * (1.0 - fy)
            + v01 * (1.0 - fx) * fy
            + v11 * fx * fy
    }

    /// Diffusion value at a real-valued point (bilinear, border-clamped).
    pub fn f_diff_at(&self, p: Point2) -> f64 {
        self.bilinear(&self.f_diff, p)
    }

    pub fn f_edge_at(&self, p: Point2) -> f64 {
        self.bilinear(&self.f_edge, p)
    }

    /// Is the point inside the image domain `[0, w-1] x [0, h-1]`?
    pub fn in_bounds(&self, p: Point2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= (self.width - 1) as f64 && p.y <= (self.height - 1) as f64
    }

    /// Is the point on (or beyond) the image border?
    pub fn on_border(&self, p: Point2) -> bool {
        p.x <= 0.0
            || p.y <= 0.0
            || p.x >= (self.width - 1) as f64
            || p.y >= (self.height - 1) as f64
    }

    /// Clamp a point into the image domain.
    pub fn clamp_point(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x.clamp(0.0, (self.width - 1) as f64),
            p.y.clamp(0.0, (self.height - 1) as f64),
        )
    }
}

/// Evolution step size, stopping threshold and convergence parameters.
#[derive(Debug, Clone)]
pub struct EvolutionParams {
    /// Balloon displacement per iteration, pixels.
    pub step: f64,
    /// Freeze threshold on `f_diff`: a point with `f_diff <= edge_stop` has
    /// reached an edge.
    pub edge_stop: f64,
    /// Deformation samples per patch; must equal `degree + 1` so the
    /// interpolation-based deformation applies exactly.
    pub samples_per_patch: usize,
    /// Steady-state displacement threshold, pixels.
    pub move_eps: f64,
    /// Fraction of frozen node points that counts as convergence.
    pub steady_fraction: f64,
    pub max_iters: u32,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            step: 1.0,
            edge_stop: 0.15,
            samples_per_patch: 4,
            move_eps: 0.1,
            steady_fraction: 0.98,
            max_iters: 2000,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<()> {
        if self.step <= 0.0 {
            return Err(Error::invalid("step must be positive"));
        }
        if !(0.0 < self.edge_stop && self.edge_stop < 1.0) {
            return Err(Error::invalid("edge_stop must be in (0, 1)"));
        }
        if self.samples_per_patch < 2 {
            return Err(Error::invalid("need at least two samples per patch"));
        }
        if self.move_eps <= 0.0 {
            return Err(Error::invalid("move_eps must be positive"));
        }
        if !(0.0 < self.steady_fraction && self.steady_fraction <= 1.0) {
            return Err(Error::invalid("steady_fraction must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Outcome of one displacement query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub delta: Point2,
    /// The point has reached an edge (or left the image) and will not move.
    pub frozen: bool,
    /// The query point was outside the image domain.
    pub outside: bool,
}

/// Balloon displacement at a sampled contour point: `step * f_diff` along
/// the outward normal in homogeneous regions, zero once `f_diff` drops to
/// `edge_stop`. Points outside the image return zero with the `outside`
/// flag set; the magnitude never exceeds `step`.
pub fn displacement_at(
    field: &ForceField,
    pt: Point2,
    outward_normal: Point2,
    params: &EvolutionParams,
) -> Displacement {
    metrics::count_force_sample(1);
    if !field.in_bounds(pt) {
        return Displacement { delta: Point2::ZERO, frozen: true, outside: true };
    }
    let fd = field.f_diff_at(pt);
    if fd > params.edge_stop {
        Displacement {
            delta: outward_normal * (params.step * fd),
            frozen: false,
            outside: false,
        }
    } else {
        Displacement { delta: Point2::ZERO, frozen: true, outside: false }
    }
}

/// Unit outward normal at patch parameter `t`: the unit tangent rotated a
/// quarter turn, with the sense fixed by the contour orientation so the
/// normal points away from the enclosed region. `None` when the tangent
/// degenerates (coincident control points); the caller skips the sample.
pub fn outward_normal(patch: &BezierPatch, t: f64, orientation: Orientation) -> Option<Point2> {
    let unit = patch.derivative(t).normalized()?;
    let n = Point2::new(unit.y, -unit.x);
    Some(match orientation {
        Orientation::Ccw => n,
        Orientation::Cw => -n,
    })
}

/// Binary Canny edge detection: blur, gradient, non-maximum suppression,
/// hysteresis. Thresholds are fractions of the maximum gradient magnitude.
fn canny_edges(img: &GrayImage, sigma: f64, low: f64, high: f64) -> Result<Vec<bool>> {
    let blurred = gaussian_blur(img, sigma)?;
    let (w, h) = (img.width, img.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut mag = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let dx = (blurred.get_clamped(x as isize + 1, y as isize)
                - blurred.get_clamped(x as isize - 1, y as isize))
                / 2.0;
            let dy = (blurred.get_clamped(x as isize, y as isize + 1)
                - blurred.get_clamped(x as isize, y as isize - 1))
                / 2.0;
            gx[y * w + x] = dx;
            gy[y * w + x] = dy;
            mag[y * w + x] = dx.hypot(dy);
        }
    }
    let max_mag = mag.iter().cloned().fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Ok(vec![false; w * h]);
    }
    let low_t = low * max_mag;
    let high_t = high * max_mag;

    // Non-maximum suppression along the quantized gradient direction.
    let mut thin = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let m = mag[y * w + x];
            if m == 0.0 {
                continue;
            }
            let angle = gy[y * w + x].atan2(gx[y * w + x]).to_degrees();
            let angle = if angle < 0.0 { angle + 180.0 } else { angle };
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (1, -1)
            };
            let m1 = mag[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let m2 = mag[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            if m >= m1 && m >= m2 {
                thin[y * w + x] = m;
            }
        }
    }

    // Hysteresis: strong pixels seed, weak pixels join if connected.
    let mut edges = vec![false; w * h];
    let mut stack = Vec::new();
    for i in 0..w * h {
        if thin[i] >= high_t && !edges[i] {
            edges[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = (j % w, j / w);
                for ny in jy.saturating_sub(1)..=(jy + 1).min(h - 1) {
                    for nx in jx.saturating_sub(1)..=(jx + 1).min(w - 1) {
                        let nj = ny * w + nx;
                        if !edges[nj] && thin[nj] >= low_t {
                            edges[nj] = true;
                            stack.push(nj);
                        }
                    }
                }
            }
        }
    }
    Ok(edges)
}
