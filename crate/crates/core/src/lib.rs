//! Free-form active contours: closed piecewise-Bezier curves deformed by
//! image forces, with interpolation-based local deformation, dynamic patch
//! refinement, and flip-based topology changes.
//!
//! The pipeline drives a closed chain of Bezier patches outward from a seed
//! circle under a balloon force modulated by an edge/diffusion map. Patches
//! that stretch beyond a threshold are split in two; when the contour crosses
//! itself, the crossing patches are flipped so the contour separates into
//! connected components. The `freespace` module layers a false-obstacle test
//! on top: inner components whose matched interest points all sit at ground
//! altitude are merged back into the free-space region.

pub mod bench;
pub mod bezier;
pub mod config;
pub mod contour;
pub mod error;
pub mod evolve;
pub mod forces;
pub mod freespace;
pub mod imaging;
pub mod metrics;
pub mod pipeline;
pub mod point;
pub mod refine;
pub mod synth;
pub mod topology;

pub use bezier::{BezierPatch, InterpolationMap, Subdivision};
pub use contour::{BoundingBox, FreeFormContour, Orientation, RegionMask};
pub use error::{Error, Result};
pub use evolve::{EvolutionState, EvolveOptions, EvolveOutcome};
pub use forces::{EvolutionParams, ForceField, GrayImage};
pub use point::Point2;
pub use topology::ComponentSet;
