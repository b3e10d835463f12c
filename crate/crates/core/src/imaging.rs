//! Image decoding/encoding, overlay rendering and debug dumps.
//!
//! Grayscale input is accepted as 8-bit PGM (P5) or PNG (converted to
//! luminance); masks round-trip through 8-bit PNG with 255 = inside. The
//! overlay renderer draws contours in red, natively as cubic path segments
//! in SVG (exact for degree 3, dense polylines otherwise) and as sampled
//! polylines in PNG.

use std::io::Cursor;
use std::path::Path;

use base64::Engine as _;
use image::{GrayImage as LumaBuf, Luma, Rgb, RgbImage};

use crate::contour::{FreeFormContour, RegionMask, RASTER_SAMPLES_PER_PATCH};
use crate::error::{Error, Result};
use crate::forces::{ForceField, GrayImage};
use crate::point::Point2;
use crate::topology::ComponentSet;

/// Load a grayscale image (PGM P5 or PNG; color PNG converts to luminance).
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let img = image::open(path.as_ref())?.to_luma8();
    GrayImage::from_luma8(img.width() as usize, img.height() as usize, img.as_raw())
}

/// Save a grayscale image as 8-bit PNG.
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let buf = gray_to_luma8(img);
    buf.save(path.as_ref())?;
    Ok(())
}

/// Save a mask as 8-bit PNG, 255 inside.
pub fn save_mask(mask: &RegionMask, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = LumaBuf::new(mask.width() as u32, mask.height() as u32);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            buf.put_pixel(x as u32, y as u32, Luma([if mask.get(x, y) { 255 } else { 0 }]));
        }
    }
    buf.save(path.as_ref())?;
    Ok(())
}

/// Load a mask saved by `save_mask` (any pixel above half counts inside).
pub fn load_mask(path: impl AsRef<Path>) -> Result<RegionMask> {
    let img = image::open(path.as_ref())?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(RegionMask::from_fn(w, h, |x, y| img.get_pixel(x as u32, y as u32)[0] > 127))
}

fn gray_to_luma8(img: &GrayImage) -> LumaBuf {
    let mut buf = LumaBuf::new(img.width() as u32, img.height() as u32);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = (img.data()[y * img.width() + x] * 255.0).round().clamp(0.0, 255.0) as u8;
            buf.put_pixel(x as u32, y as u32, Luma([v]));
        }
    }
    buf
}

fn draw_segment(buf: &mut RgbImage, a: Point2, b: Point2, color: Rgb<u8>) {
    let n = (b - a).norm().ceil().max(1.0) as usize;
    for k in 0..=n {
        let p = a + (b - a) * (k as f64 / n as f64);
        let (x, y) = (p.x.round(), p.y.round());
        if x >= 0.0 && y >= 0.0 && (x as u32) < buf.width() && (y as u32) < buf.height() {
            buf.put_pixel(x as u32, y as u32, color);
        }
    }
}

/// Rasterized overlay: the image with every component drawn in red.
pub fn overlay_png(img: &GrayImage, components: &[&FreeFormContour]) -> RgbImage {
    let mut buf = RgbImage::new(img.width() as u32, img.height() as u32);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = (img.data()[y * img.width() + x] * 255.0).round() as u8;
            buf.put_pixel(x as u32, y as u32, Rgb([v, v, v]));
        }
    }
    let red = Rgb([255, 0, 0]);
    for contour in components {
        let pts = contour.sample(RASTER_SAMPLES_PER_PATCH);
        for i in 0..pts.len() {
            draw_segment(&mut buf, pts[i], pts[(i + 1) % pts.len()], red);
        }
    }
    buf
}

/// SVG overlay with the raster embedded and one red path element per patch
/// (exact cubic commands for degree 3, sampled polylines otherwise).
pub fn overlay_svg(img: &GrayImage, components: &[&FreeFormContour]) -> Result<String> {
    let (w, h) = (img.width(), img.height());
    let mut png_bytes = Vec::new();
    gray_to_luma8(img).write_to(&mut Cursor::new(&mut png_bytes), image::ImageFormat::Png)?;
    let encoded = base64::engine::general_purpose::STANDARD.encode(&png_bytes);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str(&format!(
        "  <image width=\"{w}\" height=\"{h}\" href=\"data:image/png;base64,{encoded}\"/>\n"
    ));
    for contour in components {
        for patch in contour.patches() {
            let c = patch.control();
            if contour.degree() == 3 {
                svg.push_str(&format!(
                    "  <path d=\"M {} {} C {} {}, {} {}, {} {}\" fill=\"none\" stroke=\"red\" stroke-width=\"1\"/>\n",
                    c[0].x, c[0].y, c[1].x, c[1].y, c[2].x, c[2].y, c[3].x, c[3].y
                ));
            } else {
                let mut points = String::new();
                for k in 0..=RASTER_SAMPLES_PER_PATCH {
                    let p = patch.eval(k as f64 / RASTER_SAMPLES_PER_PATCH as f64);
                    points.push_str(&format!("{},{} ", p.x, p.y));
                }
                svg.push_str(&format!(
                    "  <polyline points=\"{}\" fill=\"none\" stroke=\"red\" stroke-width=\"1\"/>\n",
                    points.trim_end()
                ));
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Write both overlay forms next to each other.
pub fn render_overlay(
    img: &GrayImage,
    components: &[&FreeFormContour],
    png_path: impl AsRef<Path>,
    svg_path: impl AsRef<Path>,
) -> Result<()> {
    overlay_png(img, components).save(png_path.as_ref())?;
    std::fs::write(svg_path.as_ref(), overlay_svg(img, components)?)?;
    Ok(())
}

/// Component set as one JSON document: `{"outer": <contour>, "inner": [...]}`.
pub fn components_to_json(components: &ComponentSet) -> Result<String> {
    let outer = components.outer.to_json_string()?;
    let inner: Vec<String> = components
        .inner
        .iter()
        .map(|c| c.to_json_string())
        .collect::<Result<_>>()?;
    Ok(format!("{{\"outer\":{},\"inner\":[{}]}}", outer, inner.join(",")))
}

pub fn save_components_json(components: &ComponentSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), components_to_json(components)?)?;
    Ok(())
}

/// Debug dump of a force field: magic `FFLD`, u32 width/height/planes (LE),
/// then the f32 planes f_edge, f_diff, grad_x, grad_y in row-major order.
pub fn save_force_field(field: &ForceField, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + field.width() * field.height() * 16);
    bytes.extend_from_slice(b"FFLD");
    bytes.extend_from_slice(&(field.width() as u32).to_le_bytes());
    bytes.extend_from_slice(&(field.height() as u32).to_le_bytes());
    bytes.extend_from_slice(&4u32.to_le_bytes());
    let mut plane = |data: &[f64]| {
        for &v in data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    };
    plane(field.f_edge());
    plane(field.f_diff());
    let (w, h) = (field.width(), field.height());
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let g = field.grad(x, y);
            gx.push(g.x);
            gy.push(g.y);
        }
    }
    plane(&gx);
    plane(&gy);
    std::fs::write(path.as_ref(), bytes)?;
    Ok(())
}

/// Decode error wrapper so malformed files surface as image errors.
pub fn decode_gray_bytes(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory(bytes)
        .map_err(Error::Image)?
        .to_luma8();
    GrayImage::from_luma8(img.width() as usize, img.height() as usize, img.as_raw())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_2x2() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.pgm");
        // P5, 2x2, maxval 255, pixels 0, 85, 170, 255.
        std::fs::write(&path, b"P5\n2 2\n255\n\x00\x55\xaa\xff").unwrap();
        let img = load_gray(&path).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        let expect = [0.0, 85.0 / 255.0, 170.0 / 255.0, 1.0];
        for (a, b) in img.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        // Deterministic content check of the decoded fixture.
        let sum: f64 = img.data().iter().sum();
        assert!((sum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn png_white_is_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("white.png");
        let img = GrayImage::constant(4, 4, 1.0).unwrap();
        save_gray(&img, &path).unwrap();
        let back = load_gray(&path).unwrap();
        assert!(back.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.png");
        let mask = RegionMask::from_fn(16, 12, |x, y| (x + y) % 3 == 0);
        save_mask(&mask, &path).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(mask, back);
    }

    #[test]
    fn empty_and_full_masks() {
        let dir = tempfile::tempdir().unwrap();
        let empty = RegionMask::new(8, 8);
        let full = RegionMask::from_fn(8, 8, |_, _| true);
        let pe = dir.path().join("empty.png");
        let pf = dir.path().join("full.png");
        save_mask(&empty, &pe).unwrap();
        save_mask(&full, &pf).unwrap();
        assert_eq!(load_mask(&pe).unwrap().count(), 0);
        assert_eq!(load_mask(&pf).unwrap().count(), 64);
    }

    #[test]
    fn overlay_svg_path_count_matches_patches() {
        let img = GrayImage::constant(64, 64, 0.5).unwrap();
        let c = FreeFormContour::circle(Point2::new(32.0, 32.0), 20.0, 7, 3).unwrap();
        let svg = overlay_svg(&img, &[&c]).unwrap();
        assert_eq!(svg.matches("<path ").count(), 7);
        // No components: just the embedded image.
        let svg = overlay_svg(&img, &[]).unwrap();
        assert_eq!(svg.matches("<path ").count(), 0);
        assert_eq!(svg.matches("<image ").count(), 1);
    }

    #[test]
    fn overlay_png_pixels_hug_the_curve() {
        let img = GrayImage::constant(64, 64, 0.0).unwrap();
        let c = FreeFormContour::circle(Point2::new(32.0, 32.0), 20.0, 8, 3).unwrap();
        let buf = overlay_png(&img, &[&c]);
        let mut red_pixels = 0;
        for y in 0..64u32 {
            for x in 0..64u32 {
                if buf.get_pixel(x, y)[0] == 255 && buf.get_pixel(x, y)[1] == 0 {
                    red_pixels += 1;
                    let r = Point2::new(x as f64 - 32.0, y as f64 - 32.0).norm();
                    assert!((r - 20.0).abs() <= 1.0, "red pixel at radius {r}");
                }
            }
        }
        assert!(red_pixels > 60);
    }

    #[test]
    fn malformed_file_is_decode_error() {
        assert!(decode_gray_bytes(b"not an image").is_err());
    }

    #[test]
    fn force_field_dump_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.ffld");
        let img = GrayImage::constant(16, 16, 0.5).unwrap();
        let field = ForceField::build(&img, 1.0, 2).unwrap();
        save_force_field(&field, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"FFLD");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 16);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        assert_eq!(bytes.len(), 16 + 4 * 16 * 16 * 4);
    }
}
