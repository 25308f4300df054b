//! Per-class conversion of traced rings into final map elements: ped
//! crossings pass through, dividers collapse to their centerline, curbs drop
//! the parts of their domain outline that run along the image border.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::geom::{douglas_peucker, resample_count, Point};
use crate::trace::{self, PathSign, TraceConfig};
use crate::types::{GridSpec, InstanceMask, MapClass, VectorInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocessConfig {
    /// Masks at or below this confidence are skipped.
    pub confidence_threshold: f64,
    /// Ring points closer than this (pixels) to the image border are removed
    /// from curb outlines.
    pub edge_margin_px: f64,
    pub centerline_samples: usize,
    pub simplify_eps_px: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.5,
            edge_margin_px: 1.0,
            centerline_samples: 50,
            simplify_eps_px: 1.0,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(crate::Error::Config(format!(
                "confidence_threshold {} outside [0, 1]",
                self.confidence_threshold
            )));
        }
        if self.edge_margin_px < 0.0 || self.simplify_eps_px < 0.0 {
            return Err(crate::Error::Config("margins must be non-negative".into()));
        }
        if self.centerline_samples < 2 {
            return Err(crate::Error::Config("centerline_samples must be at least 2".into()));
        }
        Ok(())
    }
}

/// Centerline of a thin closed ring, in the ring's own units.
///
/// The ring is split at its two mutually farthest vertices; both halves are
/// resampled to the same number of points running in the same direction and
/// averaged pointwise, then simplified.
pub fn centerline(ring: &[Point], samples: usize, simplify_eps: f64) -> Vec<Point> {
    let n = ring.len();
    // Thin strips often trace to sliver triangles, which split fine.
    if n < 3 {
        warn!("ring with {n} vertices is too small for centerline extraction");
        return ring.to_vec();
    }
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = ring[i].dist_sq(ring[j]);
            if d > best {
                (bi, bj, best) = (i, j, d);
            }
        }
    }
    let forward: Vec<Point> = ring[bi..=bj].to_vec();
    let backward: Vec<Point> = (0..=n - (bj - bi))
        .map(|k| ring[(bi + n - k) % n])
        .collect();
    let samples = samples.max(2);
    let a = resample_count(&forward, samples);
    let b = resample_count(&backward, samples);
    let mid: Vec<Point> = a.iter().zip(&b).map(|(p, q)| p.midpoint(*q)).collect();
    let mut out = douglas_peucker(&mid, simplify_eps);
    out.dedup_by(|p, q| p.dist(*q) < 1e-12);
    out
}

/// Open centerline of a closed divider outline, in meters.
pub fn extract_centerline(ring: &VectorInstance, grid: &GridSpec, cfg: &PostprocessConfig) -> Option<VectorInstance> {
    let lattice: Vec<Point> = ring.points.iter().map(|p| grid.to_lattice(*p)).collect();
    let line = centerline(&lattice, cfg.centerline_samples, cfg.simplify_eps_px);
    let pts = line.into_iter().map(|q| grid.from_lattice(q)).collect();
    VectorInstance::new(ring.class, pts, false, ring.confidence).ok()
}

fn border_distance(p: Point, width: f64, height: f64) -> f64 {
    p.x.min(width - p.x).min(p.y).min(height - p.y)
}

/// Open chains of a closed ring that stay away from the image border, in
/// lattice units. Edges are densified to unit spacing first so that long
/// edges crossing the image keep their interior.
pub fn strip_border(ring: &[Point], width: f64, height: f64, margin: f64) -> Vec<Vec<Point>> {
    let n = ring.len();
    if n < 2 {
        return Vec::new();
    }
    let mut dense = Vec::new();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let steps = a.dist(b).ceil().max(1.0) as usize;
        for s in 0..steps {
            dense.push(a.lerp(b, s as f64 / steps as f64));
        }
    }
    let keep: Vec<bool> = dense
        .iter()
        .map(|p| border_distance(*p, width, height) >= margin)
        .collect();
    let m = dense.len();
    let Some(first_gap) = keep.iter().position(|k| !k) else {
        // Never touches the border: report the loop itself, closed by
        // repeating its start.
        let mut pts = dense.clone();
        pts.push(dense[0]);
        return vec![douglas_peucker(&pts, 1e-6)];
    };
    let mut runs = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    for k in 1..=m {
        let idx = (first_gap + k) % m;
        if keep[idx] {
            current.push(dense[idx]);
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs.into_iter()
        .filter(|r| r.len() >= 2)
        .map(|r| douglas_peucker(&r, 1e-6))
        .collect()
}

/// Curb outline chains in meters, one per maximal run of ring points away
/// from the image border.
pub fn remove_image_edges(ring: &VectorInstance, grid: &GridSpec, cfg: &PostprocessConfig) -> Vec<VectorInstance> {
    let lattice: Vec<Point> = ring.points.iter().map(|p| grid.to_lattice(*p)).collect();
    let chains = strip_border(&lattice, grid.width() as f64, grid.height() as f64, cfg.edge_margin_px);
    if chains.is_empty() {
        warn!("curb outline lies entirely on the image border");
    }
    chains
        .into_iter()
        .filter_map(|c| {
            let pts = c.into_iter().map(|q| grid.from_lattice(q)).collect();
            VectorInstance::new(ring.class, pts, false, ring.confidence).ok()
        })
        .collect()
}

/// Converts one mask into final vectors following its class rule.
pub fn vectorize_mask(
    mask: &InstanceMask,
    grid: &GridSpec,
    trace_cfg: &TraceConfig,
    cfg: &PostprocessConfig,
) -> Vec<VectorInstance> {
    if mask.confidence <= cfg.confidence_threshold {
        return Vec::new();
    }
    let paths = trace::decompose(&mask.bitmap, trace_cfg);
    if paths.is_empty() {
        debug!("{} mask traced to nothing", mask.class);
        return Vec::new();
    }
    let (w, h) = (grid.width() as f64, grid.height() as f64);
    let mut out = Vec::new();
    for path in &paths {
        let mut ring = trace::optimal_polygon(path);
        if trace_cfg.smooth {
            ring = trace::smooth::smooth_ring(&ring, trace_cfg.corner_threshold);
        }
        let chains: Vec<(Vec<Point>, bool)> = match mask.class {
            MapClass::PedCross => vec![(ring, true)],
            MapClass::Divider => {
                // Holes inside a divider blob carry no centerline.
                if path.sign == PathSign::Negative {
                    continue;
                }
                vec![(centerline(&ring, cfg.centerline_samples, cfg.simplify_eps_px), false)]
            }
            MapClass::Curb => strip_border(&ring, w, h, cfg.edge_margin_px)
                .into_iter()
                .map(|c| (c, false))
                .collect(),
        };
        for (pts, closed) in chains {
            let pts = pts.into_iter().map(|q| grid.from_lattice(q)).collect();
            if let Ok(v) = VectorInstance::new(mask.class, pts, closed, mask.confidence) {
                out.push(v);
            }
        }
    }
    out
}

/// Vectorizes a set of masks: confidence gate, tracing, then the per-class
/// rule. Output order follows mask order.
pub fn vectorize(
    masks: &[InstanceMask],
    grid: &GridSpec,
    trace_cfg: &TraceConfig,
    cfg: &PostprocessConfig,
) -> Vec<VectorInstance> {
    masks
        .iter()
        .flat_map(|m| vectorize_mask(m, grid, trace_cfg, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Bitmap;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn strip_centerline_is_midline() {
        let ring = pts(&[(0.0, 1.0), (0.0, 0.0), (20.0, 0.0), (20.0, 1.0)]);
        let c = centerline(&ring, 50, 1.0);
        for p in &c {
            assert!((p.y - 0.5).abs() <= 0.5 + 1e-9);
        }
        let (a, b) = (c[0], *c.last().unwrap());
        let ends = [Point::new(0.0, 0.5), Point::new(20.0, 0.5)];
        assert!(ends.iter().any(|e| e.dist(a) <= 1.0));
        assert!(ends.iter().any(|e| e.dist(b) <= 1.0));
        assert!(a.dist(b) >= 19.0);
    }

    #[test]
    fn centerline_respects_point_symmetry() {
        // Parallelogram symmetric under rotation by 180 degrees about (10, 1).
        let ring = pts(&[(0.0, 0.0), (18.0, 0.0), (20.0, 2.0), (2.0, 2.0)]);
        let c = centerline(&ring, 41, 0.0);
        let rotated: Vec<Point> = c.iter().rev().map(|p| Point::new(20.0 - p.x, 2.0 - p.y)).collect();
        for p in &c {
            assert!(crate::geom::point_polyline_distance(*p, &rotated, false) < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn sliver_triangle_keeps_full_length() {
        // Optimal polygon of a slightly bent 1 x 400 strip.
        let c = centerline(&pts(&[(123.0, 400.0), (124.0, 0.0), (125.0, 240.0)]), 50, 1.0);
        let (a, b) = (c[0], *c.last().unwrap());
        assert!(a.dist(Point::new(123.0, 400.0)) < 1e-9 || b.dist(Point::new(123.0, 400.0)) < 1e-9);
        assert!((a.y - b.y).abs() == 400.0);
        assert!(c.iter().all(|p| (123.0..=125.0).contains(&p.x)));
    }

    #[test]
    fn full_image_rectangle_strips_to_nothing() {
        let ring = pts(&[(0.0, 0.0), (40.0, 0.0), (40.0, 30.0), (0.0, 30.0)]);
        assert!(strip_border(&ring, 40.0, 30.0, 1.0).is_empty());
    }

    #[test]
    fn half_plane_keeps_the_interior_side() {
        let ring = pts(&[(0.0, 30.0), (0.0, 0.0), (17.0, 0.0), (17.0, 30.0)]);
        let chains = strip_border(&ring, 40.0, 30.0, 1.0);
        assert_eq!(chains.len(), 1);
        assert!(chains[0].iter().all(|p| (p.x - 17.0).abs() < 1.0));
        assert!(chains[0].len() >= 2);
    }

    #[test]
    fn interior_loop_is_kept_closed() {
        let ring = pts(&[(5.0, 5.0), (10.0, 5.0), (10.0, 10.0), (5.0, 10.0)]);
        let chains = strip_border(&ring, 40.0, 30.0, 1.0);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].first(), chains[0].last());
    }

    #[test]
    fn gate_and_passthrough() {
        let grid = GridSpec::new(0.0, 4.0, 0.0, 4.0, 0.1).unwrap();
        let bitmap = Bitmap::from_fn(40, 40, |x, y| if (10..30).contains(&x) && (5..15).contains(&y) { 1.0 } else { 0.0 });
        let mut m = InstanceMask {
            class: MapClass::PedCross,
            bitmap,
            confidence: 0.9,
        };
        let out = vectorize(std::slice::from_ref(&m), &grid, &TraceConfig::default(), &PostprocessConfig::default());
        assert_eq!(out.len(), 1);
        assert!(out[0].closed);
        m.confidence = 0.4;
        assert!(vectorize(&[m.clone()], &grid, &TraceConfig::default(), &PostprocessConfig::default()).is_empty());
        m.confidence = 0.5;
        assert!(vectorize(&[m], &grid, &TraceConfig::default(), &PostprocessConfig::default()).is_empty());
    }
}
