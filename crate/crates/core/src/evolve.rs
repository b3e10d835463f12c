//! The main deformation loop: split, flip, then deform each patch at its
//! interpolation nodes.
//!
//! Each iteration runs in the fixed order: refinement pass, topology pass,
//! deformation. Deformation samples every non-frozen patch at the `d + 1`
//! interpolation nodes, queries the balloon displacement along the outward
//! normal, and applies the deltas through the interpolation map so the
//! deformed curve passes through the displaced samples exactly. A node
//! shared by two patches receives the average of the two patch-local
//! deltas, which keeps the closure exact. Inner components produced by
//! flips stop evolving; the outer contour carries on until almost all of
//! its nodes are frozen.

use crate::bezier::InterpolationMap;
use crate::contour::{FreeFormContour, Orientation};
use crate::error::{Error, Result};
use crate::forces::{displacement_at, outward_normal, EvolutionParams, ForceField};
use crate::point::Point2;
use crate::refine::{merge_pass, split_pass};
use crate::topology::{has_self_intersection, resolve_topology, ComponentSet};

/// Evolution parameters plus the structural-pass toggles.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub params: EvolutionParams,
    /// Split threshold on the max pairwise control-point distance, pixels.
    pub split_epsilon: f64,
    pub refine_enabled: bool,
    pub topology_enabled: bool,
    /// Merge threshold for contour shrinking; `None` disables merging.
    pub merge_epsilon: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            params: EvolutionParams::default(),
            split_epsilon: 40.0,
            refine_enabled: true,
            topology_enabled: true,
            merge_epsilon: None,
        }
    }
}

/// Loop state: current components, iteration count and freeze bookkeeping.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub components: ComponentSet,
    pub iteration: u32,
    /// Fraction of the outer contour's distinct node points that are frozen.
    pub frozen_fraction: f64,
    /// Per-patch flags for the outer contour: all node points frozen.
    pub patch_frozen: Vec<bool>,
    /// Largest node displacement applied in the last iteration, pixels.
    pub last_max_displacement: f64,
    orientation: Orientation,
}

impl EvolutionState {
    /// Start a run: normalize the contour to counter-clockwise and check it
    /// lies inside the image domain.
    pub fn new(contour: FreeFormContour, field: &ForceField) -> Result<Self> {
        let contour = match contour.orientation() {
            Orientation::Ccw => contour,
            Orientation::Cw => contour.reversed(),
        };
        let inside = contour
            .patches()
            .iter()
            .flat_map(|p| p.control())
            .all(|c| field.in_bounds(*c));
        if !inside {
            return Err(Error::invalid("initial contour must lie inside the image"));
        }
        let n = contour.len();
        Ok(EvolutionState {
            components: ComponentSet::single(contour),
            iteration: 0,
            frozen_fraction: 0.0,
            patch_frozen: vec![false; n],
            last_max_displacement: f64::INFINITY,
            orientation: Orientation::Ccw,
        })
    }
}

/// Final components of a run plus convergence information.
#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub components: ComponentSet,
    pub iterations: u32,
    pub converged: bool,
}

/// One outer iteration: split pass, topology pass, then node-wise balloon
/// deformation of the outer contour.
pub fn evolve_step(
    state: EvolutionState,
    field: &ForceField,
    map: &InterpolationMap,
    opts: &EvolveOptions,
) -> Result<EvolutionState> {
    opts.params.validate()?;
    let d = map.degree();
    if opts.params.samples_per_patch != d + 1 {
        return Err(Error::invalid(format!(
            "deformation needs samples_per_patch = degree + 1 = {}, got {}",
            d + 1,
            opts.params.samples_per_patch
        )));
    }
    let EvolutionState {
        components,
        iteration,
        orientation,
        patch_frozen: prev_frozen,
        ..
    } = state;
    let ComponentSet { mut outer, mut inner } = components;
    let mut prev_frozen = prev_frozen;

    if opts.refine_enabled {
        let before = outer.len();
        outer = split_pass(&outer, map, opts.split_epsilon)?;
        if let Some(eps_min) = opts.merge_epsilon {
            outer = merge_pass(&outer, map, eps_min)?;
        }
        if outer.len() != before {
            // Structure changed; sample everything next.
            prev_frozen = vec![false; outer.len()];
        }
    }

    if opts.topology_enabled && has_self_intersection(&outer)? {
        let cs = resolve_topology(outer)?;
        outer = cs.outer;
        inner.extend(cs.inner);
        prev_frozen = vec![false; outer.len()];
    }

    let n = outer.len();
    let nodes = map.nodes();
    let mut node_pos = vec![vec![Point2::ZERO; d + 1]; n];
    let mut node_frozen = vec![vec![false; d + 1]; n];
    let mut deltas = vec![vec![Point2::ZERO; d + 1]; n];

    for p in 0..n {
        if prev_frozen[p] {
            node_frozen[p] = vec![true; d + 1];
            continue;
        }
        let patch = &outer.patches()[p];
        for (ni, &t) in nodes.iter().enumerate() {
            let pos = patch.eval(t);
            node_pos[p][ni] = pos;
            if !field.in_bounds(pos) || field.on_border(pos) {
                node_frozen[p][ni] = true;
                continue;
            }
            // A degenerate tangent leaves the node in place this iteration.
            if let Some(normal) = outward_normal(patch, t, orientation) {
                let disp = displacement_at(field, pos, normal, &opts.params);
                if disp.frozen {
                    node_frozen[p][ni] = true;
                } else {
                    deltas[p][ni] = disp.delta;
                }
            }
        }
    }

    // Shared nodes get the average of the two patch-local deltas so both
    // copies of the joint move identically.
    for p in 0..n {
        let q = (p + 1) % n;
        let avg = (deltas[p][d] + deltas[q][0]) * 0.5;
        deltas[p][d] = avg;
        deltas[q][0] = avg;
    }

    // Clamp moves into the image; a node landing on the border freezes on
    // the next iteration.
    let mut max_disp: f64 = 0.0;
    for p in 0..n {
        for ni in 0..=d {
            if deltas[p][ni] == Point2::ZERO {
                continue;
            }
            let target = node_pos[p][ni] + deltas[p][ni];
            let clamped = field.clamp_point(target);
            deltas[p][ni] = clamped - node_pos[p][ni];
            max_disp = max_disp.max(deltas[p][ni].norm());
        }
    }

    let mut new_patches = Vec::with_capacity(n);
    let mut any_change = false;
    for p in 0..n {
        let patch = &outer.patches()[p];
        if deltas[p].iter().all(|dp| *dp == Point2::ZERO) {
            new_patches.push(patch.clone());
        } else {
            new_patches.push(map.deform(patch, &deltas[p])?);
            any_change = true;
        }
    }
    if any_change {
        outer.replace_patches_in_place(new_patches);
    }

    let patch_frozen: Vec<bool> = node_frozen.iter().map(|f| f.iter().all(|&b| b)).collect();
    let distinct_frozen: usize = node_frozen
        .iter()
        .map(|f| f[..d].iter().filter(|&&b| b).count())
        .sum();
    let frozen_fraction = distinct_frozen as f64 / (n * d) as f64;

    Ok(EvolutionState {
        components: ComponentSet { outer, inner },
        iteration: iteration + 1,
        frozen_fraction,
        patch_frozen,
        last_max_displacement: if any_change { max_disp } else { 0.0 },
        orientation,
    })
}

/// Iterate until almost all nodes are frozen, displacements stall for three
/// consecutive iterations, or the iteration budget runs out.
pub fn run(
    contour: FreeFormContour,
    field: &ForceField,
    opts: &EvolveOptions,
) -> Result<EvolveOutcome> {
    run_with_observer(contour, field, opts, |_| Ok(()))
}

/// `run` with a per-iteration callback (snapshot emission and the like).
pub fn run_with_observer<F>(
    contour: FreeFormContour,
    field: &ForceField,
    opts: &EvolveOptions,
    mut observer: F,
) -> Result<EvolveOutcome>
where
    F: FnMut(&EvolutionState) -> Result<()>,
{
    let map = InterpolationMap::uniform(contour.degree())?;
    let mut state = EvolutionState::new(contour, field)?;
    let mut stall_streak = 0u32;
    let mut converged = false;
    while state.iteration < opts.params.max_iters {
        state = evolve_step(state, field, &map, opts)?;
        observer(&state)?;
        if state.last_max_displacement < opts.params.move_eps {
            stall_streak += 1;
        } else {
            stall_streak = 0;
        }
        if state.frozen_fraction >= opts.params.steady_fraction || stall_streak >= 3 {
            converged = true;
            break;
        }
    }
    Ok(EvolveOutcome {
        components: state.components,
        iterations: state.iteration,
        converged,
    })
}
