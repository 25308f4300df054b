//! Independent reference implementations used by the integration tests.
//! Everything here is written for clarity over speed and shares no code
//! with the library beyond plain data types.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rastmap::{Bitmap, Point};
use sha2::{Digest, Sha256};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Random binary masks

/// Union of a few random disks, rectangles and thick strokes plus salt
/// noise, so that holes, thin parts and diagonal junctions all show up.
pub fn random_blob(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Bitmap {
    let mut b = Bitmap::new(w, h);
    let shapes = rng.random_range(1..=5);
    for _ in 0..shapes {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        match rng.random_range(0..3) {
            0 => {
                let r = rng.random_range(1.5..(w.min(h) as f64 / 3.0));
                for y in 0..h {
                    for x in 0..w {
                        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                        if dx * dx + dy * dy <= r * r {
                            b.set(x, y, 1.0);
                        }
                    }
                }
            }
            1 => {
                let hw = rng.random_range(1.0..w as f64 / 4.0);
                let hh = rng.random_range(1.0..h as f64 / 4.0);
                for y in 0..h {
                    for x in 0..w {
                        if (x as f64 + 0.5 - cx).abs() <= hw && (y as f64 + 0.5 - cy).abs() <= hh {
                            b.set(x, y, 1.0);
                        }
                    }
                }
            }
            _ => {
                let ex = rng.random_range(0.0..w as f64);
                let ey = rng.random_range(0.0..h as f64);
                let half = rng.random_range(0.5..2.5);
                let (a, c) = (Point::new(cx, cy), Point::new(ex, ey));
                for y in 0..h {
                    for x in 0..w {
                        if seg_dist(Point::new(x as f64 + 0.5, y as f64 + 0.5), a, c) <= half {
                            b.set(x, y, 1.0);
                        }
                    }
                }
            }
        }
    }
    let flips = rng.random_range(0..(w * h / 50).max(1));
    for _ in 0..flips {
        let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
        let v = b.get(x, y);
        b.set(x, y, 1.0 - v);
    }
    b
}

pub fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx * dx + dy * dy;
    let t = if len == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.x + t * dx - p.x, a.y + t * dy - p.y);
    (qx * qx + qy * qy).sqrt()
}

/// Distance from a point to a closed ring.
pub fn ring_dist(p: Point, ring: &[Point]) -> f64 {
    (0..ring.len())
        .map(|k| seg_dist(p, ring[k], ring[(k + 1) % ring.len()]))
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Optimal polygon by exhaustive layered search

fn step_dir(a: (i64, i64), b: (i64, i64)) -> usize {
    match (b.0 - a.0, b.1 - a.1) {
        (1, 0) => 0,
        (0, 1) => 1,
        (-1, 0) => 2,
        (0, -1) => 3,
        d => panic!("not a unit step: {d:?}"),
    }
}

/// Cyclic path point at unrolled index `k`, shifted so that windows that
/// wrap past the end keep continuous coordinates.
fn at(path: &[(i64, i64)], k: usize) -> Point {
    let (x, y) = path[k % path.len()];
    Point::new(x as f64, y as f64)
}

/// Whether the squared distance from `p` to segment `ab` exceeds one,
/// decided with integers: the squared distance is `cross^2 / len^2` when
/// the foot of the perpendicular lies inside the segment.
fn lattice_dist_sq_gt_one(p: (i64, i64), a: (i64, i64), b: (i64, i64)) -> bool {
    let d = (b.0 - a.0, b.1 - a.1);
    let len_sq = d.0 * d.0 + d.1 * d.1;
    let to = |q: (i64, i64)| (p.0 - q.0) * (p.0 - q.0) + (p.1 - q.1) * (p.1 - q.1);
    let t = (p.0 - a.0) * d.0 + (p.1 - a.1) * d.1;
    if len_sq == 0 || t <= 0 {
        to(a) > 1
    } else if t >= len_sq {
        to(b) > 1
    } else {
        let cross = (p.0 - a.0) * d.1 - (p.1 - a.1) * d.0;
        cross * cross > len_sq
    }
}

/// Direct check of one segment `i -> j` (unrolled indices, `i < j`),
/// including all of its prefixes.
pub fn admissible(path: &[(i64, i64)], i: usize, j: usize) -> bool {
    let n = path.len();
    if j <= i || j - i > n - 1 {
        return false;
    }
    for end in i + 1..=j {
        let mut dirs = [false; 4];
        for k in i..end {
            dirs[step_dir(path[k % n], path[(k + 1) % n])] = true;
        }
        if dirs.iter().all(|d| *d) {
            return false;
        }
        let (a, b) = (path[i % n], path[end % n]);
        if (i + 1..end).any(|k| lattice_dist_sq_gt_one(path[k % n], a, b)) {
            return false;
        }
    }
    true
}

/// Summed squared distance of points `i..=j` to the line through `i`, `j`.
pub fn penalty(path: &[(i64, i64)], i: usize, j: usize) -> f64 {
    let (a, b) = (at(path, i), at(path, j));
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return 0.0;
    }
    (i..=j)
        .map(|k| {
            let p = at(path, k);
            let d = ((p.x - a.x) * dy - (p.y - a.y) * dx) / len;
            d * d
        })
        .sum()
}

/// Fewest admissible segments (at least three) closing the cycle through
/// point 0: the count, the least total penalty among such cycles and the
/// vertices of one cheapest cycle.
pub fn best_polygon(path: &[(i64, i64)]) -> Option<(usize, f64, Vec<usize>)> {
    let n = path.len();
    let mut ok = vec![vec![false; n + 1]; n + 1];
    for i in 0..n {
        for j in i + 1..=n {
            ok[i][j] = admissible(path, i, j);
        }
    }
    let mut layers = vec![vec![(0.0, usize::MAX); n + 1]];
    layers[0].iter_mut().skip(1).for_each(|c| c.0 = f64::INFINITY);
    for k in 1..=n {
        let prev = &layers[k - 1];
        let mut next = vec![(f64::INFINITY, usize::MAX); n + 1];
        for i in 0..n {
            if !prev[i].0.is_finite() {
                continue;
            }
            for j in i + 1..=n {
                let c = prev[i].0 + penalty(path, i, j);
                if ok[i][j] && c < next[j].0 {
                    next[j] = (c, i);
                }
            }
        }
        layers.push(next);
        if k >= 3 && layers[k][n].0.is_finite() {
            let mut verts = Vec::with_capacity(k);
            let mut j = n;
            for t in (1..=k).rev() {
                j = layers[t][j].1;
                verts.push(j);
            }
            verts.reverse();
            return Some((k, layers[k][n].0, verts));
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Assignment by enumeration

/// Minimum total cost over all matchings of size `min(rows, cols)`.
pub fn brute_assignment(rows: usize, cols: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    fn rec(r: usize, rows: usize, cols: usize, left: usize, used: &mut Vec<bool>, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
        if left == 0 {
            return 0.0;
        }
        if rows - r < left {
            return f64::INFINITY;
        }
        // Row r either stays unmatched (if rows can spare it) or takes a free column.
        let mut best = rec(r + 1, rows, cols, left, used, cost);
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                best = best.min(cost(r, c) + rec(r + 1, rows, cols, left - 1, used, cost));
                used[c] = false;
            }
        }
        best
    }
    rec(0, rows, cols, rows.min(cols), &mut vec![false; cols], cost)
}

// ---------------------------------------------------------------------------
// Connected background domains by breadth-first flood fill

/// 4-connected components of the cells with value below 0.5, as lists of
/// `(x, y)` cells in discovery order.
pub fn flood_components(b: &Bitmap) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (b.width(), b.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if seen[y * w + x] || b.get(x, y) >= 0.5 {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([(x, y)]);
            seen[y * w + x] = true;
            while let Some((cx, cy)) = queue.pop_front() {
                comp.push((cx, cy));
                let mut nbrs = Vec::with_capacity(4);
                if cx > 0 {
                    nbrs.push((cx - 1, cy));
                }
                if cx + 1 < w {
                    nbrs.push((cx + 1, cy));
                }
                if cy > 0 {
                    nbrs.push((cx, cy - 1));
                }
                if cy + 1 < h {
                    nbrs.push((cx, cy + 1));
                }
                for (nx, ny) in nbrs {
                    if !seen[ny * w + nx] && b.get(nx, ny) < 0.5 {
                        seen[ny * w + nx] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
            comp.sort_unstable_by_key(|&(x, y)| (y, x));
            out.push(comp);
        }
    }
    out
}

/// 8-connected components of the cells with value at least 0.5, each as
/// its own bitmap.
pub fn foreground_blobs(b: &Bitmap) -> Vec<Bitmap> {
    let (w, h) = (b.width() as i64, b.height() as i64);
    let mut seen = vec![false; (w * h) as usize];
    let mut out = Vec::new();
    for start in 0..(w * h) {
        if seen[start as usize] || b.get((start % w) as usize, (start / w) as usize) < 0.5 {
            continue;
        }
        let mut blob = Bitmap::new(w as usize, h as usize);
        let mut stack = vec![(start % w, start / w)];
        seen[start as usize] = true;
        while let Some((x, y)) = stack.pop() {
            blob.set(x as usize, y as usize, 1.0);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let k = (ny * w + nx) as usize;
                    if !seen[k] && b.get(nx as usize, ny as usize) >= 0.5 {
                        seen[k] = true;
                        stack.push((nx, ny));
                    }
                }
            }
        }
        out.push(blob);
    }
    out
}

// ---------------------------------------------------------------------------
// Average precision with exact rational arithmetic

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio(pub i128, pub i128);

impl Ratio {
    fn add(self, o: Ratio) -> Ratio {
        let (n, d) = (self.0 * o.1 + o.0 * self.1, self.1 * o.1);
        let g = gcd(n, d).max(1);
        Ratio(n / g, d / g)
    }

    fn gt(self, o: Ratio) -> bool {
        self.0 * o.1 > o.0 * self.1
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

/// One candidate of the ranking: scene, prediction index, confidence and
/// its Chamfer distance to every ground truth of the scene.
pub struct Ranked {
    pub scene: usize,
    pub pred: usize,
    pub confidence: f64,
    pub cds: Vec<f64>,
}

/// TP flags in ranking order: descending confidence with ties in (scene,
/// pred) order; each prediction takes its nearest unmatched ground truth
/// and counts when that distance is below the threshold.
pub fn greedy_flags(mut ranked: Vec<Ranked>, gts_per_scene: &[usize], threshold: f64) -> Vec<bool> {
    ranked.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(a.scene.cmp(&b.scene))
            .then(a.pred.cmp(&b.pred))
    });
    let mut used: Vec<Vec<bool>> = gts_per_scene.iter().map(|&g| vec![false; g]).collect();
    ranked
        .iter()
        .map(|r| {
            let mut best: Option<usize> = None;
            for (j, &c) in r.cds.iter().enumerate() {
                if !used[r.scene][j] && best.map_or(true, |b| c < r.cds[b]) {
                    best = Some(j);
                }
            }
            match best {
                Some(j) if r.cds[j] < threshold => {
                    used[r.scene][j] = true;
                    true
                }
                _ => false,
            }
        })
        .collect()
}

/// Area under the all-point interpolated PR curve: the sum over recall
/// steps of the best precision at that recall or beyond.
pub fn exact_ap(flags: &[bool], num_gts: usize) -> Ratio {
    if num_gts == 0 {
        return if flags.is_empty() { Ratio(1, 1) } else { Ratio(0, 1) };
    }
    let mut hits = 0i128;
    let points: Vec<(i128, Ratio)> = flags
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            hits += t as i128;
            (hits, Ratio(hits, k as i128 + 1))
        })
        .collect();
    let mut total = Ratio(0, 1);
    for r in 1..=hits {
        // Best precision over all cut-offs reaching recall r / G.
        let best = points
            .iter()
            .filter(|(h, _)| *h >= r)
            .map(|(_, p)| *p)
            .fold(Ratio(0, 1), |a, b| if b.gt(a) { b } else { a });
        total = total.add(best);
    }
    Ratio(total.0, total.1 * num_gts as i128)
}

// ---------------------------------------------------------------------------
// Matching costs recomputed from their definitions

/// Naive square-window maximum.
pub fn dilate_square(b: &Bitmap, r: usize) -> Bitmap {
    let (w, h) = (b.width() as i64, b.height() as i64);
    let r = r as i64;
    Bitmap::from_fn(b.width(), b.height(), |x, y| {
        let mut m = 0.0f32;
        for yy in (y as i64 - r).max(0)..=(y as i64 + r).min(h - 1) {
            for xx in (x as i64 - r).max(0)..=(x as i64 + r).min(w - 1) {
                m = m.max(b.get(xx as usize, yy as usize));
            }
        }
        m
    })
}

pub fn bce_mean(p: &Bitmap, g: &Bitmap) -> f64 {
    let eps = 1e-6;
    let n = p.data().len() as f64;
    p.data()
        .iter()
        .zip(g.data())
        .map(|(&pv, &gv)| {
            let q = (pv as f64).clamp(eps, 1.0 - eps);
            let t = if gv >= 0.5 { 1.0 } else { 0.0 };
            -(t * q.ln() + (1.0 - t) * (1.0 - q).ln())
        })
        .sum::<f64>()
        / n
}

pub fn smoothed_dice(p: &Bitmap, g: &Bitmap) -> f64 {
    let t = |v: f32| if v >= 0.5 { 1.0 } else { 0.0 };
    let inter: f64 = p.data().iter().zip(g.data()).map(|(&a, &b)| a as f64 * t(b)).sum();
    let sp: f64 = p.data().iter().map(|&a| a as f64).sum();
    let sg: f64 = g.data().iter().map(|&b| t(b)).sum();
    1.0 - (2.0 * inter + 1.0) / (sp + sg + 1.0)
}

/// Pixel line by the symmetric DDA: `max(|dx|, |dy|) + 1` cells, rounded.
pub fn pixel_line(b: &mut Bitmap, (x0, y0): (i64, i64), (x1, y1): (i64, i64)) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = (x0 as f64 + t * (x1 - x0) as f64).round() as i64;
        let y = (y0 as f64 + t * (y1 - y0) as f64).round() as i64;
        if x >= 0 && y >= 0 && (x as usize) < b.width() && (y as usize) < b.height() {
            b.set(x as usize, y as usize, 1.0);
        }
    }
}

/// The three masks of the dilation example on a 64x64 canvas: a
/// horizontal ground-truth line, a parallel prediction three pixels away
/// with no overlap, and a steep crossing prediction that overlaps the
/// ground truth but lies far from most of it.
pub fn fig2_masks() -> (Bitmap, Bitmap, Bitmap) {
    let mut gt = Bitmap::new(64, 64);
    pixel_line(&mut gt, (10, 32), (53, 32));
    let mut near = Bitmap::new(64, 64);
    pixel_line(&mut near, (10, 35), (53, 35));
    let mut crossing = Bitmap::new(64, 64);
    pixel_line(&mut crossing, (20, 12), (44, 52));
    (gt, near, crossing)
}

/// Two random non-overlapping thin strokes, 15 to 50 pixels long.
pub fn disjoint_strokes(rng: &mut ChaCha8Rng, size: usize) -> (Bitmap, Bitmap) {
    loop {
        let mut a = Bitmap::new(size, size);
        let mut b = Bitmap::new(size, size);
        for m in [&mut a, &mut b] {
            let len = rng.random_range(15.0..50.0);
            let ang = rng.random_range(0.0..std::f64::consts::PI);
            let cx = rng.random_range(len / 2.0..size as f64 - len / 2.0);
            let cy = rng.random_range(len / 2.0..size as f64 - len / 2.0);
            let (dx, dy) = (ang.cos() * len / 2.0, ang.sin() * len / 2.0);
            pixel_line(
                m,
                ((cx - dx).round() as i64, (cy - dy).round() as i64),
                ((cx + dx).round() as i64, (cy + dy).round() as i64),
            );
        }
        if a.data().iter().zip(b.data()).all(|(p, q)| p * q == 0.0) {
            return (a, b);
        }
    }
}

/// Random cost matrix with entries on a 1/8 grid, so sums are exact.
pub fn dyadic_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.random_range(0..400) as f64 / 8.0).collect()
}

// ---------------------------------------------------------------------------
// Random small evaluation cases

use rastmap::metrics::SceneVectors;
use rastmap::{MapClass, VectorInstance};

fn random_polyline(rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut p = Point::new(rng.random_range(0.0..12.0), rng.random_range(0.0..12.0));
    let mut out = vec![p];
    for _ in 0..rng.random_range(1..=2) {
        p = Point::new(p.x + rng.random_range(-3.0..3.0), p.y + rng.random_range(0.5..3.0));
        out.push(p);
    }
    out
}

/// A handful of scenes with a few divider ground truths each, noisy copies
/// of some of them, unrelated predictions, and predictions of another
/// class that must be ignored. Confidences come from a coarse set so that
/// ties are common.
pub fn random_ap_case(rng: &mut ChaCha8Rng) -> Vec<SceneVectors> {
    let confs = [0.2, 0.4, 0.6, 0.8, 1.0];
    (0..rng.random_range(1..=3))
        .map(|_| {
            let gts: Vec<VectorInstance> = (0..rng.random_range(0..=4))
                .map(|_| VectorInstance::new(MapClass::Divider, random_polyline(rng), false, 1.0).unwrap())
                .collect();
            let mut preds = Vec::new();
            for g in &gts {
                if rng.random_bool(0.7) {
                    let sigma = [0.05, 0.3, 0.8][rng.random_range(0..3)];
                    let (ox, oy) = (rng.random_range(-sigma..=sigma), rng.random_range(-sigma..=sigma));
                    let pts = g.points.iter().map(|p| Point::new(p.x + ox, p.y + oy)).collect();
                    let c = confs[rng.random_range(0..5)];
                    preds.push(VectorInstance::new(MapClass::Divider, pts, false, c).unwrap());
                }
            }
            for _ in 0..rng.random_range(0..=2) {
                let c = confs[rng.random_range(0..5)];
                preds.push(VectorInstance::new(MapClass::Divider, random_polyline(rng), false, c).unwrap());
            }
            if rng.random_bool(0.3) {
                preds.push(VectorInstance::new(MapClass::Curb, random_polyline(rng), false, 0.9).unwrap());
            }
            // Shuffle so prediction order carries no information.
            for k in (1..preds.len()).rev() {
                preds.swap(k, rng.random_range(0..=k));
            }
            SceneVectors { gts, preds }
        })
        .collect()
}

/// Oracle AP for one class: exhaustive Chamfer distances, independent
/// greedy matching and exact PR-curve area.
pub fn oracle_ap(scenes: &[SceneVectors], class: MapClass, threshold: f64, cfg: &rastmap::EvalConfig) -> (Vec<bool>, Ratio) {
    let mut ranked = Vec::new();
    let mut gts_per_scene = Vec::new();
    for (s, sc) in scenes.iter().enumerate() {
        let gts: Vec<&VectorInstance> = sc.gts.iter().filter(|g| g.class == class).collect();
        gts_per_scene.push(gts.len());
        for (k, p) in sc.preds.iter().enumerate().filter(|(_, p)| p.class == class) {
            ranked.push(Ranked {
                scene: s,
                pred: k,
                confidence: p.confidence,
                cds: gts.iter().map(|g| rastmap::chamfer(p, g, cfg)).collect(),
            });
        }
    }
    let flags = greedy_flags(ranked, &gts_per_scene, threshold);
    let g: usize = gts_per_scene.iter().sum();
    let ap = exact_ap(&flags, g);
    (flags, ap)
}

// ---------------------------------------------------------------------------
// Random curb layouts

/// Between one and four random curb polylines on a 12 m x 12 m grid at
/// 0.15 m/px, some spanning border to border and some ending inside, plus
/// a random ego position.
pub fn random_curb_layout(rng: &mut ChaCha8Rng) -> (rastmap::GridSpec, Vec<VectorInstance>, Point) {
    let grid = rastmap::GridSpec::new(0.0, 12.0, 0.0, 12.0, 0.15).unwrap();
    let border = |rng: &mut ChaCha8Rng| -> Point {
        let t = rng.random_range(0.0..12.0);
        match rng.random_range(0..4) {
            0 => Point::new(0.0, t),
            1 => Point::new(12.0, t),
            2 => Point::new(t, 0.0),
            _ => Point::new(t, 12.0),
        }
    };
    let inside = |rng: &mut ChaCha8Rng| Point::new(rng.random_range(0.5..11.5), rng.random_range(0.5..11.5));
    let curbs = (0..rng.random_range(1..=4))
        .map(|_| {
            let mut pts = vec![border(rng)];
            for _ in 0..rng.random_range(0..=2) {
                pts.push(inside(rng));
            }
            pts.push(if rng.random_bool(0.8) { border(rng) } else { inside(rng) });
            VectorInstance::new(MapClass::Curb, pts, false, 1.0).unwrap()
        })
        .collect();
    (grid, curbs, inside(rng))
}

// ---------------------------------------------------------------------------
// Golden files

/// Compares `content` with `tests/golden/<name>`. A missing file is
/// written (first build); set `RASTMAP_BLESS=1` to rewrite on purpose.
/// Returns whether the content matched.
pub fn golden(name: &str, content: &str) -> bool {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let bless = std::env::var("RASTMAP_BLESS").is_ok_and(|v| v == "1");
    if bless || !path.exists() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, content).unwrap();
        eprintln!("wrote golden file {}", path.display());
        return true;
    }
    let stored = std::fs::read_to_string(&path).unwrap();
    if stored != content {
        eprintln!("golden mismatch in {}", path.display());
        return false;
    }
    true
}

/// SHA-256 of every file in a directory, one `hash  name` line per file in
/// name order.
pub fn dir_digest(dir: &std::path::Path) -> String {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
        .iter()
        .map(|n| format!("{}  {n}\n", sha256_hex(&std::fs::read(dir.join(n)).unwrap())))
        .collect()
}

/// The fixed perturbation used by the golden files.
pub fn golden_spec() -> rastmap::PerturbSpec {
    rastmap::PerturbSpec {
        seed: 42,
        point_noise_sigma: 0.3,
        drop_prob: 0.1,
        spurious_rate: 1.0,
        blur_radius: 1,
        confidence_model: rastmap::perturb::ConfidenceModel::NoisyLogit,
    }
}

/// Scene JSON, mask-directory digest and evaluation report for the fixed
/// seed-42 scene under [`golden_spec`], written through a temp directory.
pub fn golden_artifacts() -> (String, String, String) {
    use rastmap::io::{gen_synthetic, scene_to_json, write_predictions, Difficulty, MaskFormat};
    let cfg = rastmap::RunConfig::default();
    let scene = gen_synthetic(42, 1, Difficulty::Hard).remove(0);
    let preds = rastmap::perturb_scene(&scene, &golden_spec(), &cfg.raster).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_predictions(dir.path(), &scene.grid, &preds, MaskFormat::Pgm).unwrap();
    let digest = dir_digest(dir.path());
    let masks: Vec<rastmap::InstanceMask> = preds.iter().map(|p| p.mask.clone()).collect();
    let out = rastmap::vectorize(&masks, &scene.grid, &cfg.trace, &cfg.postprocess);
    let gt = rastmap::rasterize_scene(&scene, &cfg.raster).unwrap();
    let ev = rastmap::pipeline::eval_scene(&scene, out, Some(gt), Some(masks));
    let report = rastmap::evaluate(&[ev], &cfg.eval).unwrap().to_json();
    (scene_to_json(&scene), digest, report)
}
