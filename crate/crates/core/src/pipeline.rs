//! Glue from a configuration to a finished segmentation: force field,
//! initial contour, evolution, masks.

use crate::config::{EdgeDetector, PipelineConfig};
use crate::contour::{rasterize_region, FreeFormContour, RegionMask};
use crate::error::Result;
use crate::evolve::{self, EvolutionState};
use crate::forces::{ForceField, GrayImage};
use crate::point::Point2;
use crate::topology::ComponentSet;

/// Everything a segmentation run produces.
#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub components: ComponentSet,
    /// Region enclosed by the outer contour.
    pub outer_mask: RegionMask,
    /// Outer region minus every inner component.
    pub free_mask: RegionMask,
    pub converged: bool,
    pub iterations: u32,
    /// Distinct control points of the initial contour.
    pub initial_points: usize,
    /// Distinct control points across all final components.
    pub final_points: usize,
}

pub fn build_field(img: &GrayImage, cfg: &PipelineConfig) -> Result<ForceField> {
    match cfg.edge_detector {
        EdgeDetector::Gradient => {
            ForceField::build_scaled(img, cfg.sigma, cfg.edge_power, cfg.gradient_ref)
        }
        EdgeDetector::Canny => {
            ForceField::build_canny(img, cfg.sigma, cfg.canny_low, cfg.canny_high)
        }
    }
}

/// Seed circle from the config, defaulting to the image center and 12% of
/// the smaller dimension.
pub fn initial_contour(width: usize, height: usize, cfg: &PipelineConfig) -> Result<FreeFormContour> {
    let cx = cfg.init_center_x.unwrap_or(width as f64 / 2.0);
    let cy = cfg.init_center_y.unwrap_or(height as f64 / 2.0);
    let radius = cfg
        .init_radius
        .unwrap_or(0.12 * (width.min(height)) as f64);
    FreeFormContour::circle(Point2::new(cx, cy), radius, cfg.n_patches, cfg.degree)
}

fn total_points(components: &ComponentSet) -> usize {
    components.outer.point_count()
        + components.inner.iter().map(|c| c.point_count()).sum::<usize>()
}

fn masks_for(
    components: &ComponentSet,
    width: usize,
    height: usize,
) -> Result<(RegionMask, RegionMask)> {
    let outer_mask = components.outer.rasterize(width, height)?;
    let mut free = outer_mask.clone();
    for inner in &components.inner {
        free = free.and_not(&rasterize_region(&[inner], width, height)?);
    }
    Ok((outer_mask, free))
}

/// Run the full segmentation pipeline on one image.
pub fn segment_image(img: &GrayImage, cfg: &PipelineConfig) -> Result<SegmentationResult> {
    segment_image_with_observer(img, cfg, |_| Ok(()))
}

/// `segment_image` with a per-iteration callback.
pub fn segment_image_with_observer<F>(
    img: &GrayImage,
    cfg: &PipelineConfig,
    observer: F,
) -> Result<SegmentationResult>
where
    F: FnMut(&EvolutionState) -> Result<()>,
{
    cfg.validate()?;
    let field = build_field(img, cfg)?;
    let contour = initial_contour(img.width(), img.height(), cfg)?;
    let initial_points = contour.point_count();
    let outcome = evolve::run_with_observer(contour, &field, &cfg.evolve_options(), observer)?;
    let (outer_mask, free_mask) = masks_for(&outcome.components, img.width(), img.height())?;
    let final_points = total_points(&outcome.components);
    Ok(SegmentationResult {
        components: outcome.components,
        outer_mask,
        free_mask,
        converged: outcome.converged,
        iterations: outcome.iterations,
        initial_points,
        final_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_image, Shape};

    #[test]
    fn disk_segmentation_has_high_iou() {
        let (img, gt) = synth_image(Shape::Disk, 240, 240).unwrap();
        let cfg = PipelineConfig::default();
        let result = segment_image(&img, &cfg).unwrap();
        assert!(result.converged);
        assert!(result.components.inner.is_empty());
        let iou = result.free_mask.iou(&gt);
        assert!(iou >= 0.97, "disk IoU {iou}");
    }

    #[test]
    fn blank_image_fills_to_border_rectangle() {
        let img = GrayImage::constant(120, 90, 0.6).unwrap();
        let cfg = PipelineConfig::default();
        let result = segment_image(&img, &cfg).unwrap();
        assert!(result.converged);
        // The free region covers nearly the whole frame.
        let coverage = result.free_mask.count() as f64 / (120.0 * 90.0);
        assert!(coverage > 0.95, "coverage {coverage}");
    }

    #[test]
    fn dumbbell_needs_refinement_to_fill_bulbs() {
        let (img, gt) = synth_image(Shape::Dumbbell, 240, 180).unwrap();
        // Seed inside the neck, which is thinner than the default radius.
        let cfg = PipelineConfig { init_radius: Some(10.0), ..PipelineConfig::default() };
        let with = segment_image(&img, &cfg).unwrap();
        let iou_with = with.free_mask.iou(&gt);
        assert!(iou_with >= 0.93, "refined dumbbell IoU {iou_with}");
        assert!(with.final_points > with.initial_points);

        // Without refinement the fixed patches cannot wrap both bulbs.
        let frozen_cfg = PipelineConfig {
            refine_enabled: false,
            init_radius: Some(10.0),
            ..PipelineConfig::default()
        };
        let without = segment_image(&img, &frozen_cfg).unwrap();
        let iou_without = without.free_mask.iou(&gt);
        assert!(
            iou_without < iou_with,
            "refinement did not help: {iou_without} vs {iou_with}"
        );
    }
}
