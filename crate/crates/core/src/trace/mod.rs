//! Mask-to-vector tracing: boundary decomposition, optimal polygons and
//! optional curve smoothing.
//!
//! 1. [`decompose`] walks pixel boundaries into closed lattice paths.
//! 2. [`optimal_polygon`] replaces each path by a minimal polygon.
//! 3. [`smooth`] optionally fits Bézier arcs at soft corners and flattens
//!    them back into points.
//! 4. [`trace`] runs the stages and maps lattice coordinates to meters.

pub mod decompose;
pub mod polygon;
pub mod smooth;

use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::types::{GridSpec, InstanceMask, VectorInstance};

pub use decompose::{decompose, PathSign, PixelPath};
pub use polygon::{adjust_vertices, optimal_polygon, optimal_vertices, MAX_ADJUSTED_DEVIATION, MAX_DEVIATION};

/// Resolution of ambiguous (checkerboard) boundary junctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnPolicy {
    #[default]
    Minority,
    Majority,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    pub turn_policy: TurnPolicy,
    /// Paths enclosing fewer pixels than this are dropped.
    pub turd_size: usize,
    pub smooth: bool,
    pub corner_threshold: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            turn_policy: TurnPolicy::Minority,
            turd_size: 2,
            smooth: false,
            corner_threshold: 1.0,
        }
    }
}

/// Smoothing stage on a closed polygon; the identity when `cfg.smooth` is
/// off or the instance is open.
pub fn smooth(poly: &VectorInstance, cfg: &TraceConfig) -> VectorInstance {
    if !cfg.smooth || !poly.closed {
        return poly.clone();
    }
    let mut out = poly.clone();
    out.points = smooth::smooth_ring(&poly.points, cfg.corner_threshold);
    out
}

/// Traced closed rings in lattice coordinates, outer boundaries
/// counterclockwise and holes clockwise.
pub fn trace_lattice(mask: &InstanceMask, cfg: &TraceConfig) -> Vec<Vec<Point>> {
    decompose(&mask.bitmap, cfg)
        .iter()
        .map(|path| {
            let poly = optimal_polygon(path);
            if cfg.smooth {
                smooth::smooth_ring(&poly, cfg.corner_threshold)
            } else {
                poly
            }
        })
        .collect()
}

/// Full tracing of one mask into closed instances in meters, carrying the
/// mask's class and confidence.
pub fn trace(mask: &InstanceMask, grid: &GridSpec, cfg: &TraceConfig) -> Vec<VectorInstance> {
    trace_lattice(mask, cfg)
        .into_iter()
        .filter_map(|ring| {
            let pts = ring.into_iter().map(|q| grid.from_lattice(q)).collect();
            VectorInstance::new(mask.class, pts, true, mask.confidence).ok()
        })
        .collect()
}
