//! Planar geometry helpers shared by the rasterizer, tracer and metrics.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A 2D point. Units depend on context (meters in world space, pixel
/// units on the tracing lattice).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Point at parameter `t` on the segment from `self` to `other`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn midpoint(self, other: Point) -> Point {
        self.lerp(other, 0.5)
    }

    /// Lexicographic comparison on (x, y) using a total order.
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Distance from `p` to the nearest point of a polyline (or ring when
/// `closed`).
pub fn point_polyline_distance(p: Point, points: &[Point], closed: bool) -> f64 {
    match points.len() {
        0 => f64::INFINITY,
        1 => p.dist(points[0]),
        n => {
            let mut best = f64::INFINITY;
            for i in 0..n - 1 {
                best = best.min(point_segment_distance(p, points[i], points[i + 1]));
            }
            if closed {
                best = best.min(point_segment_distance(p, points[n - 1], points[0]));
            }
            best
        }
    }
}

fn segment_iter(points: &[Point], closed: bool) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = points.len();
    let count = if closed && n > 1 { n } else { n.saturating_sub(1) };
    (0..count).map(move |i| (points[i], points[(i + 1) % n]))
}

pub fn polyline_length(points: &[Point], closed: bool) -> f64 {
    segment_iter(points, closed).map(|(a, b)| a.dist(b)).sum()
}

/// Arc-length resampling at a fixed spacing.
///
/// Open curves keep both endpoints; closed curves are sampled once around
/// the ring starting at the first vertex. A zero-length curve collapses to
/// its first point.
pub fn resample(points: &[Point], closed: bool, interval: f64) -> Vec<Point> {
    assert!(interval > 0.0, "resample interval must be positive");
    if points.is_empty() {
        return Vec::new();
    }
    let total = polyline_length(points, closed);
    if total == 0.0 {
        return vec![points[0]];
    }
    let mut out = vec![points[0]];
    let mut next = interval;
    let mut travelled = 0.0;
    for (a, b) in segment_iter(points, closed) {
        let len = a.dist(b);
        while len > 0.0 && next <= travelled + len && next < total - 1e-12 {
            out.push(a.lerp(b, (next - travelled) / len));
            next += interval;
        }
        travelled += len;
    }
    if !closed {
        let last = *points.last().unwrap();
        if out.last().map_or(true, |p| p.dist(last) > 1e-12) {
            out.push(last);
        }
    }
    out
}

/// Resamples an open polyline to exactly `count` points evenly spaced by
/// arc length.
pub fn resample_count(points: &[Point], count: usize) -> Vec<Point> {
    assert!(count >= 2);
    if points.len() < 2 {
        return vec![points.first().copied().unwrap_or_default(); count];
    }
    let total = polyline_length(points, false);
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..count {
        let target = total * k as f64 / (count - 1) as f64;
        while seg < points.len() - 2 && seg_start + points[seg].dist(points[seg + 1]) < target {
            seg_start += points[seg].dist(points[seg + 1]);
            seg += 1;
        }
        let len = points[seg].dist(points[seg + 1]);
        let t = if len > 0.0 {
            ((target - seg_start) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    out
}

/// Ramer-Douglas-Peucker simplification of an open polyline. Endpoints are
/// always kept.
pub fn douglas_peucker(points: &[Point], epsilon: f64) -> Vec<Point> {
    if points.len() < 3 {
        return points.to_vec();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0, points.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut worst, mut worst_d) = (lo, -1.0);
        for i in lo + 1..hi {
            let d = point_segment_distance(points[i], points[lo], points[hi]);
            if d > worst_d {
                worst = i;
                worst_d = d;
            }
        }
        if worst_d > epsilon {
            keep[worst] = true;
            stack.push((lo, worst));
            stack.push((worst, hi));
        }
    }
    points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

/// Shoelace signed area; positive for counterclockwise rings in a
/// y-up frame.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += ring[i].cross(ring[(i + 1) % n]);
    }
    acc / 2.0
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// True when a closed ring crosses or touches itself anywhere other than at
/// the shared vertex of consecutive edges.
pub fn ring_self_intersects(ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (ring[i], ring[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        // Consecutive edges folding back onto each other.
        let (_, c) = edge((i + 1) % n);
        if orient(a, b, c) == 0.0 && (b - a).dot(c - b) < 0.0 {
            return true;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = edge(j);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Axis-aligned rectangle used for clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Liang-Barsky parametric clip of segment `a -> b`.
    fn clip_segment(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        let d = b - a;
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        let checks = [
            (-d.x, a.x - self.x_min),
            (d.x, self.x_max - a.x),
            (-d.y, a.y - self.y_min),
            (d.y, self.y_max - a.y),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }

    /// Clips an open polyline, splitting it wherever it leaves the rectangle.
    pub fn clip_polyline(&self, points: &[Point]) -> Vec<Vec<Point>> {
        let mut pieces = Vec::new();
        let mut current: Vec<Point> = Vec::new();
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            match self.clip_segment(a, b) {
                None => {
                    if current.len() >= 2 {
                        pieces.push(std::mem::take(&mut current));
                    }
                    current.clear();
                }
                Some((t0, t1)) => {
                    let start = self.snap(a.lerp(b, t0));
                    let end = self.snap(a.lerp(b, t1));
                    let continues = current.last().is_some_and(|l| l.dist(start) <= 1e-12);
                    if !continues {
                        if current.len() >= 2 {
                            pieces.push(std::mem::take(&mut current));
                        }
                        current = vec![start];
                    }
                    if current.last().map_or(true, |l| l.dist(end) > 1e-12) {
                        current.push(end);
                    }
                    if t1 < 1.0 {
                        if current.len() >= 2 {
                            pieces.push(std::mem::take(&mut current));
                        }
                        current.clear();
                    }
                }
            }
        }
        if current.len() >= 2 {
            pieces.push(current);
        }
        pieces
    }

    /// Sutherland-Hodgman clip of a closed ring.
    pub fn clip_polygon(&self, ring: &[Point]) -> Vec<Point> {
        type Inside = fn(&Rect, Point) -> bool;
        let planes: [(Inside, u8); 4] = [
            (|r, p| p.x >= r.x_min, 0),
            (|r, p| p.x <= r.x_max, 1),
            (|r, p| p.y >= r.y_min, 2),
            (|r, p| p.y <= r.y_max, 3),
        ];
        let mut poly = ring.to_vec();
        for (inside, which) in planes {
            if poly.is_empty() {
                break;
            }
            let input = std::mem::take(&mut poly);
            let n = input.len();
            for i in 0..n {
                let cur = input[i];
                let prev = input[(i + n - 1) % n];
                let (ci, pi) = (inside(self, cur), inside(self, prev));
                if ci {
                    if !pi {
                        poly.push(self.intersect_plane(prev, cur, which));
                    }
                    poly.push(cur);
                } else if pi {
                    poly.push(self.intersect_plane(prev, cur, which));
                }
            }
        }
        poly.into_iter().map(|p| self.snap(p)).collect()
    }

    fn intersect_plane(&self, a: Point, b: Point, which: u8) -> Point {
        let (t, fixed_x, fixed_y) = match which {
            0 => ((self.x_min - a.x) / (b.x - a.x), Some(self.x_min), None),
            1 => ((self.x_max - a.x) / (b.x - a.x), Some(self.x_max), None),
            2 => ((self.y_min - a.y) / (b.y - a.y), None, Some(self.y_min)),
            _ => ((self.y_max - a.y) / (b.y - a.y), None, Some(self.y_max)),
        };
        let p = a.lerp(b, t);
        Point::new(fixed_x.unwrap_or(p.x), fixed_y.unwrap_or(p.y))
    }

    fn snap(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
        )
    }
}
