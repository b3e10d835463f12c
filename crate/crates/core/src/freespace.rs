//! Free-space segmentation with false-obstacle rejection.
//!
//! The evolved contour separates the traversable region (outer component)
//! from enclosed candidate obstacles (inner components). Each inner
//! component is then classified with a structural test over an image pair:
//! Harris interest points are matched between the two images inside the
//! component, their altitudes come from a pluggable oracle, and the
//! component is kept as a true obstacle iff at least one matched point sits
//! at or above the altitude threshold. False obstacles (painted road lines
//! and the like, all matches at ground level) merge back into free space.
//! Components without usable matches are kept: no evidence, no merge.

use std::path::Path;

use serde::Serialize;

use crate::contour::{BoundingBox, FreeFormContour, RegionMask};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::forces::{blur_plane, GrayImage};
use crate::pipeline;
use crate::point::Point2;

/// Two successive frames of equal size.
#[derive(Debug, Clone)]
pub struct ImagePair {
    pub prev: GrayImage,
    pub curr: GrayImage,
}

impl ImagePair {
    pub fn new(prev: GrayImage, curr: GrayImage) -> Result<Self> {
        if prev.width() != curr.width() || prev.height() != curr.height() {
            return Err(Error::invalid("image pair dimensions differ"));
        }
        Ok(ImagePair { prev, curr })
    }
}

/// Harris corner with its response value.
#[derive(Debug, Clone, Copy)]
pub struct InterestPoint {
    pub position: Point2,
    pub response: f64,
}

/// A mutual-best normalized-cross-correlation match.
#[derive(Debug, Clone, Copy)]
pub struct PointMatch {
    pub prev: Point2,
    pub curr: Point2,
    pub correlation: f64,
}

/// Altitude source for matched point pairs. `None` means no altitude is
/// known for the pair; such matches contribute no evidence.
pub trait AltitudeOracle {
    fn altitude(&self, prev: Point2, curr: Point2) -> Option<f64>;
}

/// Ground-truth altitude raster sampled at the current-image position.
#[derive(Debug, Clone)]
pub struct RasterAltitude {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RasterAltitude {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid("altitude raster size mismatch"));
        }
        Ok(RasterAltitude { width, height, data })
    }
}

impl AltitudeOracle for RasterAltitude {
    fn altitude(&self, _prev: Point2, curr: Point2) -> Option<f64> {
        let x = curr.x.round();
        let y = curr.y.round();
        if x < 0.0 || y < 0.0 || x as usize >= self.width || y as usize >= self.height {
            return None;
        }
        Some(self.data[y as usize * self.width + x as usize])
    }
}

/// Per-point altitude table (`x,y,altitude_m` rows in current-image
/// coordinates); nearest entry within `radius` pixels answers a query.
#[derive(Debug, Clone)]
pub struct TableAltitude {
    entries: Vec<(Point2, f64)>,
    radius: f64,
}

impl TableAltitude {
    pub fn new(entries: Vec<(Point2, f64)>, radius: f64) -> Self {
        TableAltitude { entries, radius }
    }

    /// Parse CSV text with rows `x,y,altitude_m`; a header line is skipped.
    pub fn from_csv_str(text: &str, radius: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::invalid(format!(
                    "altitude csv line {}: expected x,y,altitude_m",
                    lineno + 1
                )));
            }
            if lineno == 0 && fields[0].parse::<f64>().is_err() {
                continue; // header
            }
            let x: f64 = fields[0]
                .parse()
                .map_err(|_| Error::invalid(format!("bad x on line {}", lineno + 1)))?;
            let y: f64 = fields[1]
                .parse()
                .map_err(|_| Error::invalid(format!("bad y on line {}", lineno + 1)))?;
            let alt: f64 = fields[2]
                .parse()
                .map_err(|_| Error::invalid(format!("bad altitude on line {}", lineno + 1)))?;
            entries.push((Point2::new(x, y), alt));
        }
        Ok(TableAltitude::new(entries, radius))
    }

    pub fn from_csv_path(path: impl AsRef<Path>, radius: f64) -> Result<Self> {
        TableAltitude::from_csv_str(&std::fs::read_to_string(path)?, radius)
    }
}

impl AltitudeOracle for TableAltitude {
    fn altitude(&self, _prev: Point2, curr: Point2) -> Option<f64> {
        self.entries
            .iter()
            .map(|(p, alt)| (p.distance(curr), *alt))
            .filter(|(d, _)| *d <= self.radius)
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .map(|(_, alt)| alt)
    }
}

/// Oracle with no data: every component keeps its obstacle status.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAltitudeData;

impl AltitudeOracle for NoAltitudeData {
    fn altitude(&self, _prev: Point2, _curr: Point2) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct HarrisParams {
    pub sigma: f64,
    pub k: f64,
    /// Response threshold as a fraction of the maximum response in the
    /// region.
    pub rel_threshold: f64,
}

impl Default for HarrisParams {
    fn default() -> Self {
        HarrisParams { sigma: 1.5, k: 0.06, rel_threshold: 0.01 }
    }
}

/// Harris corner response `det(M) - k * trace(M)^2` on the Gaussian-
/// smoothed structure tensor, 3x3 non-max suppressed, thresholded relative
/// to the strongest response, restricted to `region`.
pub fn harris_points(
    img: &GrayImage,
    region: &RegionMask,
    params: &HarrisParams,
) -> Result<Vec<InterestPoint>> {
    let (w, h) = (img.width(), img.height());
    if region.width() != w || region.height() != h {
        return Err(Error::invalid("region mask dimensions differ from image"));
    }
    let mut ix = vec![0.0; w * h];
    let mut iy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            ix[y * w + x] = (img.get_clamped(x as isize + 1, y as isize)
                - img.get_clamped(x as isize - 1, y as isize))
                / 2.0;
            iy[y * w + x] = (img.get_clamped(x as isize, y as isize + 1)
                - img.get_clamped(x as isize, y as isize - 1))
                / 2.0;
        }
    }
    let xx: Vec<f64> = ix.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = iy.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = ix.iter().zip(&iy).map(|(a, b)| a * b).collect();
    let sxx = blur_plane(&xx, w, h, params.sigma)?;
    let syy = blur_plane(&yy, w, h, params.sigma)?;
    let sxy = blur_plane(&xy, w, h, params.sigma)?;
    let mut response = vec![0.0; w * h];
    for i in 0..w * h {
        let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
        let trace = sxx[i] + syy[i];
        response[i] = det - params.k * trace * trace;
    }
    let mut max_r: f64 = 0.0;
    for (i, &r) in response.iter().enumerate() {
        if region.get(i % w, i / w) {
            max_r = max_r.max(r);
        }
    }
    if max_r <= 0.0 {
        return Ok(Vec::new());
    }
    let threshold = params.rel_threshold * max_r;
    let mut out = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !region.get(x, y) {
                continue;
            }
            let r = response[y * w + x];
            if r < threshold {
                continue;
            }
            let mut is_max = true;
            'nms: for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let ni = (y as i32 + dy) as usize * w + (x as i32 + dx) as usize;
                    if response[ni] > r {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                out.push(InterestPoint {
                    position: Point2::new(x as f64, y as f64),
                    response: r,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MatchParams {
    /// Half-width of the correlation window (`(2w+1)^2` pixels).
    pub window: usize,
    /// Maximum displacement between matched positions, pixels.
    pub max_disp: f64,
    pub min_correlation: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams { window: 3, max_disp: 30.0, min_correlation: 0.8 }
    }
}

fn ncc(a: &GrayImage, pa: Point2, b: &GrayImage, pb: Point2, w: usize) -> f64 {
    let (ax, ay) = (pa.x.round() as isize, pa.y.round() as isize);
    let (bx, by) = (pb.x.round() as isize, pb.y.round() as isize);
    let n = (2 * w + 1) * (2 * w + 1);
    let mut sa = 0.0;
    let mut sb = 0.0;
    for dy in -(w as isize)..=w as isize {
        for dx in -(w as isize)..=w as isize {
            sa += a.get_clamped(ax + dx, ay + dy);
            sb += b.get_clamped(bx + dx, by + dy);
        }
    }
    let ma = sa / n as f64;
    let mb = sb / n as f64;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for dy in -(w as isize)..=w as isize {
        for dx in -(w as isize)..=w as isize {
            let da = a.get_clamped(ax + dx, ay + dy) - ma;
            let db = b.get_clamped(bx + dx, by + dy) - mb;
            cov += da * db;
            va += da * da;
            vb += db * db;
        }
    }
    if va <= 1e-12 || vb <= 1e-12 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

fn window_fits(img: &GrayImage, p: Point2, w: usize) -> bool {
    let (x, y) = (p.x.round() as isize, p.y.round() as isize);
    x >= w as isize
        && y >= w as isize
        && x + (w as isize) < img.width() as isize
        && y + (w as isize) < img.height() as isize
}

/// Mutual-best NCC matching between two interest point sets within
/// `max_disp`; pairs below `min_correlation` are dropped, as are points
/// whose windows do not fit inside the images.
pub fn match_points(
    pair: &ImagePair,
    pts_prev: &[InterestPoint],
    pts_curr: &[InterestPoint],
    params: &MatchParams,
) -> Vec<PointMatch> {
    let prev: Vec<&InterestPoint> = pts_prev
        .iter()
        .filter(|p| window_fits(&pair.prev, p.position, params.window))
        .collect();
    let curr: Vec<&InterestPoint> = pts_curr
        .iter()
        .filter(|p| window_fits(&pair.curr, p.position, params.window))
        .collect();
    let score = |i: usize, j: usize| {
        ncc(
            &pair.prev,
            prev[i].position,
            &pair.curr,
            curr[j].position,
            params.window,
        )
    };
    let mut best_for_prev: Vec<Option<(usize, f64)>> = vec![None; prev.len()];
    let mut best_for_curr: Vec<Option<(usize, f64)>> = vec![None; curr.len()];
    for i in 0..prev.len() {
        for j in 0..curr.len() {
            if prev[i].position.distance(curr[j].position) > params.max_disp {
                continue;
            }
            let c = score(i, j);
            if c < params.min_correlation {
                continue;
            }
            if best_for_prev[i].map_or(true, |(_, bc)| c > bc) {
                best_for_prev[i] = Some((j, c));
            }
            if best_for_curr[j].map_or(true, |(_, bc)| c > bc) {
                best_for_curr[j] = Some((i, c));
            }
        }
    }
    let mut out = Vec::new();
    for (i, best) in best_for_prev.iter().enumerate() {
        if let Some((j, c)) = best {
            if best_for_curr[*j] == Some((i, *c)) || best_for_curr[*j].map(|(bi, _)| bi) == Some(i)
            {
                out.push(PointMatch {
                    prev: prev[i].position,
                    curr: curr[*j].position,
                    correlation: *c,
                });
            }
        }
    }
    out
}

/// Classification of an inner component by the altitude test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// True obstacle: stays carved out of the free space.
    Keep,
    /// False obstacle: merged back into free space.
    Merge,
}

/// Per-component entry of the free-space report.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentReport {
    pub id: usize,
    pub classified: Classification,
    pub matched_points: usize,
    pub max_altitude: Option<f64>,
}

/// Classify one inner component: keep iff any matched point inside it has
/// altitude `>= eps_alt`; merge iff all evaluable matches are below;
/// keep when there is no usable evidence.
pub fn classify_component(
    comp: &FreeFormContour,
    pair: &ImagePair,
    oracle: &dyn AltitudeOracle,
    eps_alt: f64,
    harris: &HarrisParams,
    matching: &MatchParams,
) -> Result<(Classification, usize, Option<f64>)> {
    let (w, h) = (pair.curr.width(), pair.curr.height());
    let mask = comp.rasterize(w, h)?;
    // Matching region in the previous frame: the component box dilated by
    // the maximum displacement.
    let all_points: Vec<Point2> = comp
        .patches()
        .iter()
        .flat_map(|p| p.control().iter().copied())
        .collect();
    let bbox = BoundingBox::from_points(&all_points);
    let dilated = RegionMask::from_fn(w, h, |x, y| {
        (x as f64) >= bbox.x_min - matching.max_disp
            && (x as f64) <= bbox.x_max + matching.max_disp
            && (y as f64) >= bbox.y_min - matching.max_disp
            && (y as f64) <= bbox.y_max + matching.max_disp
    });
    let pts_curr = harris_points(&pair.curr, &mask, harris)?;
    let pts_prev = harris_points(&pair.prev, &dilated, harris)?;
    let matches = match_points(pair, &pts_prev, &pts_curr, matching);
    let inside: Vec<&PointMatch> =
        matches.iter().filter(|m| mask.contains_point(m.curr)).collect();
    let altitudes: Vec<f64> = inside
        .iter()
        .filter_map(|m| oracle.altitude(m.prev, m.curr))
        .collect();
    let max_altitude = altitudes.iter().cloned().fold(None, |acc: Option<f64>, a| {
        Some(acc.map_or(a, |m| m.max(a)))
    });
    let classification = if altitudes.is_empty() {
        // No usable evidence: conservative keep.
        Classification::Keep
    } else if altitudes.iter().any(|&a| a >= eps_alt) {
        Classification::Keep
    } else {
        Classification::Merge
    };
    Ok((classification, inside.len(), max_altitude))
}

/// Free-space extraction output.
#[derive(Debug, Clone)]
pub struct FreeSpaceResult {
    pub outer: FreeFormContour,
    /// Inner components kept as true obstacles.
    pub retained_obstacles: Vec<FreeFormContour>,
    /// Inner components merged back into free space.
    pub merged_components: Vec<FreeFormContour>,
    /// Outer region minus the retained obstacles.
    pub free_space_mask: RegionMask,
    pub converged: bool,
    pub reports: Vec<ComponentReport>,
}

/// Run segmentation on the current frame, then classify every inner
/// component with the altitude test and merge the false obstacles.
pub fn segment_free_space(
    pair: &ImagePair,
    cfg: &PipelineConfig,
    oracle: &dyn AltitudeOracle,
) -> Result<FreeSpaceResult> {
    let seg = pipeline::segment_image(&pair.curr, cfg)?;
    let harris = HarrisParams {
        sigma: cfg.harris_sigma,
        k: cfg.harris_k,
        rel_threshold: cfg.harris_threshold,
    };
    let matching = MatchParams {
        window: cfg.match_window,
        max_disp: cfg.match_max_disp,
        min_correlation: cfg.match_min_correlation,
    };
    let mut retained = Vec::new();
    let mut merged = Vec::new();
    let mut reports = Vec::new();
    for (id, comp) in seg.components.inner.iter().enumerate() {
        let (classification, matched_points, max_altitude) =
            classify_component(comp, pair, oracle, cfg.eps_alt, &harris, &matching)?;
        reports.push(ComponentReport { id, classified: classification, matched_points, max_altitude });
        match classification {
            Classification::Keep => retained.push(comp.clone()),
            Classification::Merge => merged.push(comp.clone()),
        }
    }
    let (w, h) = (pair.curr.width(), pair.curr.height());
    let mut free_space_mask = seg.outer_mask.clone();
    for obstacle in &retained {
        free_space_mask = free_space_mask.and_not(&obstacle.rasterize(w, h)?);
    }
    Ok(FreeSpaceResult {
        outer: seg.components.outer,
        retained_obstacles: retained,
        merged_components: merged,
        free_space_mask,
        converged: seg.converged,
        reports,
    })
}
