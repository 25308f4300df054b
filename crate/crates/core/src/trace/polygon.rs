//! Penalty-optimal polygon approximation of a lattice path.
//!
//! A segment from corner `i` to corner `j` (walking forward along the
//! path) is admissible when
//!
//! * the steps from `i` to `j` do not use all four directions,
//! * every corner strictly between lies within [`MAX_DEVIATION`] of the
//!   segment, and
//! * the segment from `i` to `j - 1` is admissible as well.
//!
//! The polygon keeps the path's first corner as a vertex, uses the fewest
//! admissible segments (at least three), and among those minimizes the
//! summed squared distance of the covered corners to each segment's line.
//! Each vertex then moves, within the unit square around its corner, to
//! the point closest to the best-fit lines of its two segments, unless
//! that pushes a covered corner beyond [`MAX_ADJUSTED_DEVIATION`].

use crate::geom::{point_segment_distance, Point};

use super::decompose::PixelPath;

/// Largest allowed distance (pixel units) between a replaced path corner
/// and its polygon segment.
pub const MAX_DEVIATION: f64 = 1.0;

/// Bound on the same distance once vertices have been adjusted.
pub const MAX_ADJUSTED_DEVIATION: f64 = 1.5;

fn dir_index(dx: i64, dy: i64) -> usize {
    match (dx, dy) {
        (1, 0) => 0,
        (0, 1) => 1,
        (-1, 0) => 2,
        _ => 3,
    }
}

struct Unrolled {
    n: usize,
    /// Corner coordinates relative to the first corner, for indices
    /// `0..2n` (the second copy repeats the cycle).
    pts: Vec<Point>,
    /// Indices (in `0..2n`) where the walk changes direction.
    turns: Vec<usize>,
    sum_x: Vec<f64>,
    sum_y: Vec<f64>,
    sum_xx: Vec<f64>,
    sum_xy: Vec<f64>,
    sum_yy: Vec<f64>,
    /// Step direction leaving each index.
    dirs: Vec<usize>,
}

impl Unrolled {
    fn new(path: &[(i64, i64)]) -> Self {
        let n = path.len();
        let (ox, oy) = path[0];
        let pts: Vec<Point> = (0..2 * n)
            .map(|k| {
                let (x, y) = path[k % n];
                Point::new((x - ox) as f64, (y - oy) as f64)
            })
            .collect();
        let dirs: Vec<usize> = (0..2 * n)
            .map(|k| {
                let (a, b) = (path[k % n], path[(k + 1) % n]);
                dir_index(b.0 - a.0, b.1 - a.1)
            })
            .collect();
        let turns = (0..2 * n)
            .filter(|&k| dirs[k] != dirs[(k + 2 * n - 1) % (2 * n)])
            .collect();
        let mut sums = vec![vec![0.0; 2 * n + 1]; 5];
        for k in 0..2 * n {
            let p = pts[k];
            let vals = [p.x, p.y, p.x * p.x, p.x * p.y, p.y * p.y];
            for (s, v) in sums.iter_mut().zip(vals) {
                s[k + 1] = s[k] + v;
            }
        }
        let mut it = sums.into_iter();
        Self {
            n,
            pts,
            turns,
            sum_x: it.next().unwrap(),
            sum_y: it.next().unwrap(),
            sum_xx: it.next().unwrap(),
            sum_xy: it.next().unwrap(),
            sum_yy: it.next().unwrap(),
            dirs,
        }
    }

    /// Summed squared distance of corners `i..=j` to the line through
    /// corners `i` and `j`.
    fn penalty(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.pts[i], self.pts[j]);
        let d = b - a;
        let len_sq = d.dot(d);
        if len_sq == 0.0 {
            return 0.0;
        }
        let count = (j - i + 1) as f64;
        let sx = self.sum_x[j + 1] - self.sum_x[i];
        let sy = self.sum_y[j + 1] - self.sum_y[i];
        let sxx = self.sum_xx[j + 1] - self.sum_xx[i];
        let sxy = self.sum_xy[j + 1] - self.sum_xy[i];
        let syy = self.sum_yy[j + 1] - self.sum_yy[i];
        // Residual of corner k is x_k*dy - y_k*dx - c.
        let c = a.x * d.y - a.y * d.x;
        let s = d.y * d.y * sxx + d.x * d.x * syy + count * c * c
            - 2.0 * d.x * d.y * sxy
            - 2.0 * c * d.y * sx
            + 2.0 * c * d.x * sy;
        s.max(0.0) / len_sq
    }

    /// Furthest `j` reachable from `i` by one admissible segment.
    fn reach(&self, i: usize) -> usize {
        let limit = i + self.n - 1;
        let mut seen = [false; 4];
        seen[self.dirs[i]] = true;
        let first_turn = self.turns.partition_point(|&t| t <= i);
        let mut j = i + 1;
        while j < limit {
            let cand = j + 1;
            let step = self.dirs[j];
            if !seen[step] && seen.iter().filter(|s| **s).count() == 3 {
                break;
            }
            let (a, b) = (self.pts[i], self.pts[cand]);
            let ok = self.turns[first_turn..]
                .iter()
                .take_while(|&&t| t < cand)
                .all(|&t| within_one(self.pts[t], a, b));
            if !ok {
                break;
            }
            seen[step] = true;
            j = cand;
        }
        j
    }
}

/// Exact test of `dist(p, segment ab) <= 1` for lattice points; floating
/// distances land a hair above 1 for many corners sitting exactly one
/// pixel off the segment.
fn within_one(p: Point, a: Point, b: Point) -> bool {
    let (px, py) = (p.x as i128, p.y as i128);
    let (ax, ay) = (a.x as i128, a.y as i128);
    let (dx, dy) = (b.x as i128 - ax, b.y as i128 - ay);
    let (rx, ry) = (px - ax, py - ay);
    let len_sq = dx * dx + dy * dy;
    let t = rx * dx + ry * dy;
    if t <= 0 || len_sq == 0 {
        rx * rx + ry * ry <= 1
    } else if t >= len_sq {
        let (qx, qy) = (px - b.x as i128, py - b.y as i128);
        qx * qx + qy * qy <= 1
    } else {
        let cross = rx * dy - ry * dx;
        cross * cross <= len_sq
    }
}

/// Vertex indices (into the path) of the optimal polygon.
pub fn optimal_vertices(path: &PixelPath) -> Vec<usize> {
    let n = path.len();
    if n < 4 {
        return (0..n).collect();
    }
    let u = Unrolled::new(&path.points);
    let reach: Vec<usize> = (0..n).map(|i| u.reach(i).min(n)).collect();

    // Fewest segments from 0 to every node, and from every node to n.
    let mut fwd = vec![usize::MAX; n + 1];
    fwd[0] = 0;
    for i in 0..n {
        if fwd[i] == usize::MAX {
            continue;
        }
        for j in i + 1..=reach[i] {
            fwd[j] = fwd[j].min(fwd[i] + 1);
        }
    }
    let mut bwd = vec![usize::MAX; n + 1];
    bwd[n] = 0;
    for i in (0..n).rev() {
        bwd[i] = (i + 1..=reach[i])
            .map(|j| bwd[j])
            .min()
            .map_or(usize::MAX, |b| b.saturating_add(1));
    }
    // The penalty has to be minimized over cycles of exactly the minimal
    // length: a cheaper cycle may reach some node through a prefix that is
    // not the shortest one to that node.
    let k = fwd[n].max(3);
    exactly_k(&u, &reach, k, &fwd, &bwd).unwrap_or_else(|| u.turns.iter().copied().filter(|&t| t < n).collect())
}

/// Minimum-penalty polygon with exactly `k` segments through corner 0.
/// Nodes that cannot sit at a given layer of a `k`-segment cycle (by the
/// segment bounds `fwd` and `bwd`) are skipped.
fn exactly_k(u: &Unrolled, reach: &[usize], k: usize, fwd: &[usize], bwd: &[usize]) -> Option<Vec<usize>> {
    let n = u.n;
    let mut layer = vec![f64::INFINITY; n + 1];
    layer[0] = 0.0;
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(k);
    for t in 0..k {
        let mut next = vec![f64::INFINITY; n + 1];
        let mut from = vec![usize::MAX; n + 1];
        for i in 0..n {
            if !layer[i].is_finite() || fwd[i] > t || bwd[i] > k - t {
                continue;
            }
            for j in i + 1..=reach[i] {
                let c = layer[i] + u.penalty(i, j);
                if c < next[j] {
                    next[j] = c;
                    from[j] = i;
                }
            }
        }
        back.push(from);
        layer = next;
    }
    if !layer[n].is_finite() {
        return None;
    }
    let mut out = Vec::with_capacity(k);
    let mut j = n;
    for from in back.iter().rev() {
        j = from[j];
        out.push(j);
    }
    out.reverse();
    Some(out)
}

/// Least-squares line through corners `i..=j`: centroid and unit
/// direction (zero when the points coincide).
fn fit_line(u: &Unrolled, i: usize, j: usize) -> (Point, Point) {
    let k = (j - i + 1) as f64;
    let sx = (u.sum_x[j + 1] - u.sum_x[i]) / k;
    let sy = (u.sum_y[j + 1] - u.sum_y[i]) / k;
    let mut a = (u.sum_xx[j + 1] - u.sum_xx[i]) / k - sx * sx;
    let b = (u.sum_xy[j + 1] - u.sum_xy[i]) / k - sx * sy;
    let mut c = (u.sum_yy[j + 1] - u.sum_yy[i]) / k - sy * sy;
    // Eigenvector of the larger eigenvalue of the covariance.
    let lambda = (a + c + ((a - c) * (a - c) + 4.0 * b * b).sqrt()) / 2.0;
    a -= lambda;
    c -= lambda;
    let dir = if a.abs() >= c.abs() {
        let l = a.hypot(b);
        if l != 0.0 {
            Point::new(-b / l, a / l)
        } else {
            Point::new(0.0, 0.0)
        }
    } else {
        let l = c.hypot(b);
        if l != 0.0 {
            Point::new(-c / l, b / l)
        } else {
            Point::new(0.0, 0.0)
        }
    };
    (Point::new(sx, sy), dir)
}

type Quad = [[f64; 3]; 3];

/// Squared distance to the line as a quadratic form in `(x, y, 1)`.
fn line_form(ctr: Point, dir: Point) -> Quad {
    let d = dir.dot(dir);
    let mut q = [[0.0; 3]; 3];
    if d == 0.0 {
        return q;
    }
    let v = [dir.y, -dir.x, dir.x * ctr.y - dir.y * ctr.x];
    for (l, row) in q.iter_mut().enumerate() {
        for (m, cell) in row.iter_mut().enumerate() {
            *cell = v[l] * v[m] / d;
        }
    }
    q
}

fn quad_at(q: &Quad, p: Point) -> f64 {
    let v = [p.x, p.y, 1.0];
    let mut s = 0.0;
    for l in 0..3 {
        for m in 0..3 {
            s += v[l] * q[l][m] * v[m];
        }
    }
    s
}

/// Point of the unit square around `s` closest (in summed squared
/// distance) to the two lines encoded in `q`.
fn best_in_square(mut q: Quad, s: Point) -> Point {
    let w = loop {
        let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
        if det != 0.0 {
            break Point::new(
                (-q[0][2] * q[1][1] + q[1][2] * q[0][1]) / det,
                (q[0][2] * q[1][0] - q[1][2] * q[0][0]) / det,
            );
        }
        // Parallel lines: add a line through s orthogonal to them.
        let v = if q[0][0] > q[1][1] {
            [-q[0][1], q[0][0]]
        } else if q[1][1] != 0.0 {
            [-q[1][1], q[1][0]]
        } else {
            [1.0, 0.0]
        };
        let d = v[0] * v[0] + v[1] * v[1];
        let v = [v[0], v[1], -v[1] * s.y - v[0] * s.x];
        for l in 0..3 {
            for m in 0..3 {
                q[l][m] += v[l] * v[m] / d;
            }
        }
    };
    if (w.x - s.x).abs() <= 0.5 && (w.y - s.y).abs() <= 0.5 {
        return w;
    }
    // Otherwise the minimum lies on the square's boundary.
    let mut best = (quad_at(&q, s), s);
    let mut consider = |p: Point| {
        let c = quad_at(&q, p);
        if c < best.0 {
            best = (c, p);
        }
    };
    for z in [-0.5, 0.5] {
        if q[0][0] != 0.0 {
            let y = s.y + z;
            let x = -(q[0][1] * y + q[0][2]) / q[0][0];
            if (x - s.x).abs() <= 0.5 {
                consider(Point::new(x, y));
            }
        }
        if q[1][1] != 0.0 {
            let x = s.x + z;
            let y = -(q[1][0] * x + q[1][2]) / q[1][1];
            if (y - s.y).abs() <= 0.5 {
                consider(Point::new(x, y));
            }
        }
    }
    for dx in [-0.5, 0.5] {
        for dy in [-0.5, 0.5] {
            consider(Point::new(s.x + dx, s.y + dy));
        }
    }
    best.1
}

/// Moves every polygon vertex within the unit square around its path
/// corner to the point closest to the best-fit lines of its two adjacent
/// segments. Straight runs keep their exact corners.
pub fn adjust_vertices(path: &PixelPath, vertices: &[usize]) -> Vec<Point> {
    let n = path.len();
    let m = vertices.len();
    let lattice = |i: usize| {
        let (x, y) = path.points[i];
        Point::new(x as f64, y as f64)
    };
    if n < 4 || m < 3 {
        return vertices.iter().map(|&i| lattice(i)).collect();
    }
    let u = Unrolled::new(&path.points);
    let forms: Vec<Quad> = (0..m)
        .map(|k| {
            let i = vertices[k];
            let j = if k + 1 < m { vertices[k + 1] } else { vertices[0] + n };
            let (ctr, dir) = fit_line(&u, i, j);
            line_form(ctr, dir)
        })
        .collect();
    let mut moved: Vec<Point> = (0..m)
        .map(|k| {
            let (a, b) = (&forms[(k + m - 1) % m], &forms[k]);
            let mut q = [[0.0; 3]; 3];
            for l in 0..3 {
                for c in 0..3 {
                    q[l][c] = a[l][c] + b[l][c];
                }
            }
            best_in_square(q, u.pts[vertices[k]])
        })
        .collect();
    // Segments whose corners end up too far away get their endpoints put
    // back on the lattice, where the bound holds by construction.
    loop {
        let mut reverted = false;
        for k in 0..m {
            let (i, j) = (vertices[k], if k + 1 < m { vertices[k + 1] } else { vertices[0] + n });
            let (a, b) = (moved[k], moved[(k + 1) % m]);
            if (i..=j).any(|t| point_segment_distance(u.pts[t], a, b) > MAX_ADJUSTED_DEVIATION) {
                for v in [k, (k + 1) % m] {
                    let home = u.pts[vertices[v]];
                    reverted |= moved[v] != home;
                    moved[v] = home;
                }
            }
        }
        if !reverted {
            break;
        }
    }
    let origin = lattice(0);
    moved.into_iter().map(|w| Point::new(w.x + origin.x, w.y + origin.y)).collect()
}

/// Optimal polygon in lattice coordinates, with adjusted vertices. Paths
/// shorter than four points come back unchanged.
pub fn optimal_polygon(path: &PixelPath) -> Vec<Point> {
    adjust_vertices(path, &optimal_vertices(path))
}
