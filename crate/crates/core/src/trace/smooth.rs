//! Corner analysis and Bézier smoothing of optimal polygons, flattened back
//! into point rings.

use crate::geom::{point_segment_distance, Point};

/// Maximum distance between a flattened cubic and its chord.
pub const FLATNESS: f64 = 0.25;

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Corner sharpness at `b` for the path `a -> b -> c`: the distance of `b`
/// from the chord `a c`, normalized by the L-infinity unit square, mapped
/// so that values >= 1 mean a sharp corner.
pub fn corner_alpha(a: Point, b: Point, c: Point) -> f64 {
    let r = Point::new(-sign(c.y - a.y), sign(c.x - a.x));
    let denom = r.y * (c.x - a.x) - r.x * (c.y - a.y);
    if denom == 0.0 {
        return 4.0 / 3.0;
    }
    let dd = ((b - a).cross(c - a) / denom).abs();
    let alpha = if dd > 1.0 { 1.0 - 1.0 / dd } else { 0.0 };
    alpha / 0.75
}

fn cubic_at(p: [Point; 4], t: f64) -> Point {
    let s = 1.0 - t;
    p[0] * (s * s * s) + p[1] * (3.0 * s * s * t) + p[2] * (3.0 * s * t * t) + p[3] * (t * t * t)
}

fn flatten_cubic(p: [Point; 4], out: &mut Vec<Point>, depth: u32) {
    let flat = point_segment_distance(p[1], p[0], p[3]).max(point_segment_distance(p[2], p[0], p[3]));
    if flat <= FLATNESS || depth >= 16 {
        out.push(p[3]);
        return;
    }
    // de Casteljau split at t = 0.5
    let ab = p[0].midpoint(p[1]);
    let bc = p[1].midpoint(p[2]);
    let cd = p[2].midpoint(p[3]);
    let abc = ab.midpoint(bc);
    let bcd = bc.midpoint(cd);
    let mid = abc.midpoint(bcd);
    debug_assert!(mid.dist(cubic_at(p, 0.5)) < 1e-9);
    flatten_cubic([p[0], ab, abc, mid], out, depth + 1);
    flatten_cubic([mid, bcd, cd, p[3]], out, depth + 1);
}

/// Replaces smooth vertices by cubic arcs between adjacent edge midpoints
/// and flattens them; vertices whose alpha reaches `alpha_max` stay sharp
/// corners. Rings with fewer than three vertices are returned unchanged.
pub fn smooth_ring(poly: &[Point], alpha_max: f64) -> Vec<Point> {
    let m = poly.len();
    if m < 3 {
        return poly.to_vec();
    }
    let mut out: Vec<Point> = Vec::new();
    for j in 0..m {
        let i = (j + m - 1) % m;
        let k = (j + 1) % m;
        let (a, b, c) = (poly[i], poly[j], poly[k]);
        let start = a.midpoint(b);
        let end = b.midpoint(c);
        let alpha = corner_alpha(a, b, c);
        if alpha >= alpha_max {
            out.push(b);
        } else {
            let alpha = alpha.clamp(0.55, 1.0);
            let c1 = a.lerp(b, 0.5 + 0.5 * alpha);
            let c2 = c.lerp(b, 0.5 + 0.5 * alpha);
            out.push(start);
            flatten_cubic([start, c1, c2, end], &mut out, 0);
        }
    }
    // Drop consecutive duplicates (a midpoint may be emitted twice) and
    // points lying exactly on the straight run between their neighbors.
    out.dedup_by(|a, b| a.dist(*b) < 1e-12);
    while out.len() > 1 && out[0].dist(*out.last().unwrap()) < 1e-12 {
        out.pop();
    }
    let n = out.len();
    if n < 4 {
        return out;
    }
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            let (p, q, r) = (out[(i + n - 1) % n], out[i], out[(i + 1) % n]);
            (q - p).cross(r - q).abs() > 1e-12 || (q - p).dot(r - q) < 0.0
        })
        .collect();
    out.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}
