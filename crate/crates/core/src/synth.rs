//! Deterministic synthetic test scenes with analytic ground truth.
//!
//! All shapes are binary: the free region (foreground) is white, the rest
//! black. The ground-truth mask comes from the analytic inside predicate,
//! not from any contour machinery, so it can serve as an independent
//! reference for segmentation quality.

use std::str::FromStr;

use crate::contour::RegionMask;
use crate::error::{Error, Result};
use crate::forces::GrayImage;
use crate::point::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Disk,
    Blob,
    BlobWithHoles,
    Dumbbell,
    TwoHoles,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(Shape::Disk),
            "blob" => Ok(Shape::Blob),
            "blob-with-holes" => Ok(Shape::BlobWithHoles),
            "dumbbell" => Ok(Shape::Dumbbell),
            "two-holes" => Ok(Shape::TwoHoles),
            _ => Err(Error::invalid(format!(
                "unknown shape {s:?} (disk, blob, blob-with-holes, dumbbell, two-holes)"
            ))),
        }
    }
}

impl Shape {
    pub const ALL: [Shape; 5] =
        [Shape::Disk, Shape::Blob, Shape::BlobWithHoles, Shape::Dumbbell, Shape::TwoHoles];

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Blob => "blob",
            Shape::BlobWithHoles => "blob-with-holes",
            Shape::Dumbbell => "dumbbell",
            Shape::TwoHoles => "two-holes",
        }
    }
}

fn blob_radius(base: f64, theta: f64) -> f64 {
    base * (1.0
        + 0.16 * (3.0 * theta + 0.7).cos()
        + 0.09 * (5.0 * theta + 2.1).cos()
        + 0.06 * (2.0 * theta + 4.0).cos())
}

fn inside(shape: Shape, width: usize, height: usize, x: f64, y: f64) -> bool {
    let w = width as f64;
    let h = height as f64;
    let m = w.min(h);
    let c = Point2::new(w / 2.0, h / 2.0);
    let p = Point2::new(x, y);
    match shape {
        Shape::Disk => (p - c).norm() <= 0.35 * m,
        Shape::Blob => {
            let r = (p - c).norm();
            let theta = (p.y - c.y).atan2(p.x - c.x);
            r <= blob_radius(0.33 * m, theta)
        }
        Shape::BlobWithHoles => {
            if !inside(Shape::Blob, width, height, x, y) {
                return false;
            }
            let h1 = c + Point2::new(-0.10 * w, 0.0);
            let h2 = c + Point2::new(0.10 * w, 0.0);
            (p - h1).norm() > 0.06 * m && (p - h2).norm() > 0.06 * m
        }
        Shape::Dumbbell => {
            let c1 = Point2::new(0.28 * w, h / 2.0);
            let c2 = Point2::new(0.72 * w, h / 2.0);
            let bulbs = (p - c1).norm() <= 0.18 * m || (p - c2).norm() <= 0.18 * m;
            let neck =
                x >= c1.x && x <= c2.x && (y - h / 2.0).abs() <= 0.08 * m;
            bulbs || neck
        }
        Shape::TwoHoles => {
            let dx = (x - c.x) / (0.42 * w);
            let dy = (y - c.y) / (0.40 * h);
            if dx * dx + dy * dy > 1.0 {
                return false;
            }
            let h1 = c + Point2::new(-0.16 * w, 0.0);
            let h2 = c + Point2::new(0.16 * w, 0.0);
            (p - h1).norm() > 0.085 * m && (p - h2).norm() > 0.085 * m
        }
    }
}

/// Render a shape as a binary image plus its analytic ground-truth mask.
pub fn synth_image(shape: Shape, width: usize, height: usize) -> Result<(GrayImage, RegionMask)> {
    if width < 32 || height < 32 {
        return Err(Error::invalid("synthetic images must be at least 32x32"));
    }
    let mask = RegionMask::from_fn(width, height, |x, y| {
        inside(shape, width, height, x as f64, y as f64)
    });
    let data = (0..width * height)
        .map(|i| if mask.get(i % width, i / width) { 1.0 } else { 0.0 })
        .collect();
    Ok((GrayImage::new(width, height, data)?, mask))
}

/// A scene for the false-obstacle pipeline: flat ground with a painted line
/// (altitude 0) and a raised box (altitude 0.3 m), plus the ground-truth
/// altitude raster.
#[derive(Debug, Clone)]
pub struct FreeSpaceScene {
    pub image: GrayImage,
    /// Altitude in meters per pixel.
    pub altitudes: Vec<f64>,
    /// Inclusive pixel rect `(x0, y0, x1, y1)` of the painted line.
    pub line_rect: (usize, usize, usize, usize),
    /// Inclusive pixel rect of the raised box.
    pub box_rect: (usize, usize, usize, usize),
}

pub const BOX_ALTITUDE_M: f64 = 0.3;

pub fn freespace_scene(width: usize, height: usize) -> Result<FreeSpaceScene> {
    if width < 160 || height < 120 {
        return Err(Error::invalid("free-space scene needs at least 160x120"));
    }
    let (w, h) = (width, height);
    let line_rect = (
        (0.22 * w as f64) as usize,
        (0.40 * h as f64) as usize,
        (0.28 * w as f64) as usize,
        (0.62 * h as f64) as usize,
    );
    let box_w = (0.14 * w.min(h) as f64) as usize;
    let bx = (0.70 * w as f64) as usize;
    let by = (0.46 * h as f64) as usize;
    let box_rect = (bx, by, bx + box_w, by + box_w);
    let in_rect = |r: (usize, usize, usize, usize), x: usize, y: usize| {
        x >= r.0 && x <= r.2 && y >= r.1 && y <= r.3
    };
    let mut data = vec![0.8; w * h];
    let mut altitudes = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            if in_rect(line_rect, x, y) {
                data[y * w + x] = 0.1;
            } else if in_rect(box_rect, x, y) {
                data[y * w + x] = 0.15;
                altitudes[y * w + x] = BOX_ALTITUDE_M;
            }
        }
    }
    Ok(FreeSpaceScene { image: GrayImage::new(w, h, data)?, altitudes, line_rect, box_rect })
}

/// Count connected components of the foreground (8-connectivity) or the
/// background (4-connectivity).
pub fn connected_component_count(mask: &RegionMask, foreground: bool) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        let v = mask.get(start % w, start / w);
        if v != foreground || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            let neighbors: &[(isize, isize)] = if foreground {
                &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
            } else {
                &[(0, -1), (-1, 0), (1, 0), (0, 1)]
            };
            for (dx, dy) in neighbors {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let ni = ny as usize * w + nx as usize;
                if !seen[ni] && mask.get(nx as usize, ny as usize) == foreground {
                    seen[ni] = true;
                    stack.push(ni);
                }
            }
        }
    }
    count
}

/// Euler number of the mask: foreground components minus holes.
pub fn euler_number(mask: &RegionMask) -> isize {
    let components = connected_component_count(mask, true) as isize;
    let background = connected_component_count(mask, false) as isize;
    components - (background - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_area_close_to_analytic() {
        let (img, gt) = synth_image(Shape::Disk, 200, 200).unwrap();
        let r = 0.35 * 200.0;
        let area = std::f64::consts::PI * r * r;
        let count = gt.count() as f64;
        assert!((count - area).abs() <= 2.0 * std::f64::consts::PI * r + 200.0);
        assert_eq!(img.width(), 200);
    }

    #[test]
    fn synth_is_deterministic() {
        let (a, _) = synth_image(Shape::Blob, 160, 120).unwrap();
        let (b, _) = synth_image(Shape::Blob, 160, 120).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn two_holes_euler_number_is_minus_one() {
        let (_, gt) = synth_image(Shape::TwoHoles, 240, 180).unwrap();
        assert_eq!(connected_component_count(&gt, true), 1);
        assert_eq!(euler_number(&gt), -1);
    }

    #[test]
    fn blob_with_holes_euler_number_is_minus_one() {
        let (_, gt) = synth_image(Shape::BlobWithHoles, 240, 180).unwrap();
        assert_eq!(euler_number(&gt), -1);
    }

    #[test]
    fn dumbbell_is_one_component_no_holes() {
        let (_, gt) = synth_image(Shape::Dumbbell, 240, 180).unwrap();
        assert_eq!(connected_component_count(&gt, true), 1);
        assert_eq!(euler_number(&gt), 1);
    }

    #[test]
    fn shape_names_round_trip() {
        for shape in Shape::ALL {
            assert_eq!(shape.name().parse::<Shape>().unwrap(), shape);
        }
        assert!("pentagon".parse::<Shape>().is_err());
    }

    #[test]
    fn freespace_scene_altitudes_match_box() {
        let scene = freespace_scene(320, 240).unwrap();
        let (w, _) = (320usize, 240usize);
        let (x0, y0, x1, y1) = scene.box_rect;
        assert_eq!(scene.altitudes[y0 * w + x0], BOX_ALTITUDE_M);
        assert_eq!(scene.altitudes[(y0 + 1) * w + (x1 - 1)], BOX_ALTITUDE_M);
        let (lx0, ly0, _, _) = scene.line_rect;
        assert_eq!(scene.altitudes[ly0 * w + lx0], 0.0);
        // Center of the image is free ground.
        assert_eq!(scene.image.data()[120 * w + 160], 0.8);
        let _ = y1;
    }
}
