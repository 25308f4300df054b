//! Boundary path decomposition on the pixel-corner lattice.
//!
//! Pixel `(x, y)` is the unit square `[x, x+1] x [y, y+1]`. Paths walk
//! along pixel edges with the foreground on their left, so outer
//! boundaries come out counterclockwise. After each path is found its
//! interior is inverted in a working copy, which exposes holes as
//! foreground for the next search.

use serde::{Deserialize, Serialize};

use crate::types::Bitmap;

use super::{TraceConfig, TurnPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathSign {
    /// Outer boundary of a foreground region (counterclockwise).
    Positive,
    /// Boundary of a hole (clockwise).
    Negative,
}

/// A closed walk on the corner lattice. The closing step from the last
/// point back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelPath {
    pub points: Vec<(i64, i64)>,
    pub sign: PathSign,
    /// Signed enclosed area in pixels: positive for outer boundaries,
    /// negative for holes.
    pub area: i64,
}

impl PixelPath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of lattice points where the walk changes direction.
    pub fn corner_count(&self) -> usize {
        let n = self.points.len();
        (0..n)
            .filter(|&i| {
                let a = self.points[(i + n - 1) % n];
                let b = self.points[i];
                let c = self.points[(i + 1) % n];
                (b.0 - a.0, b.1 - a.1) != (c.0 - b.0, c.1 - b.1)
            })
            .count()
    }
}

struct WorkBitmap {
    width: i64,
    height: i64,
    bits: Vec<bool>,
}

impl WorkBitmap {
    fn get(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width && y < self.height && self.bits[(y * self.width + x) as usize]
    }

    fn toggle_row(&mut self, y: i64, from: i64, to: i64) {
        let row = (y * self.width) as usize;
        for x in from..to {
            let i = row + x as usize;
            self.bits[i] = !self.bits[i];
        }
    }

    /// Whether foreground dominates the neighborhood of corner `(x, y)`,
    /// probing square rings of growing radius.
    fn majority(&self, x: i64, y: i64) -> bool {
        for i in 2..5 {
            let mut ct = 0i32;
            for a in -i + 1..=i - 1 {
                ct += if self.get(x + a, y + i - 1) { 1 } else { -1 };
                ct += if self.get(x + i - 1, y + a - 1) { 1 } else { -1 };
                ct += if self.get(x + a - 1, y - i) { 1 } else { -1 };
                ct += if self.get(x - i, y + a) { 1 } else { -1 };
            }
            if ct > 0 {
                return true;
            } else if ct < 0 {
                return false;
            }
        }
        false
    }

    /// First foreground pixel scanning rows from the top (largest y) down,
    /// each row left to right, starting at row `y_start`.
    fn find_next(&self, y_start: i64) -> Option<(i64, i64)> {
        let mut y = y_start;
        while y >= 0 {
            let row = (y * self.width) as usize;
            if let Some(x) = self.bits[row..row + self.width as usize].iter().position(|b| *b) {
                return Some((x as i64, y));
            }
            y -= 1;
        }
        None
    }

    fn walk(&self, x0: i64, y0: i64, policy: TurnPolicy) -> (Vec<(i64, i64)>, i64) {
        let (mut x, mut y) = (x0, y0);
        let (mut dx, mut dy) = (0i64, -1i64);
        let mut points = Vec::new();
        let mut area = 0i64;
        loop {
            points.push((x, y));
            x += dx;
            y += dy;
            area += x * dy;
            if x == x0 && y == y0 {
                break;
            }
            // Pixels ahead on the right (c) and on the left (d).
            let c = self.get(x + (dx + dy - 1) / 2, y + (dy - dx - 1) / 2);
            let d = self.get(x + (dx - dy - 1) / 2, y + (dy + dx - 1) / 2);
            let turn_right = if c && !d {
                match policy {
                    TurnPolicy::Right => true,
                    TurnPolicy::Left => false,
                    TurnPolicy::Majority => self.majority(x, y),
                    TurnPolicy::Minority => !self.majority(x, y),
                }
            } else if c {
                true
            } else if !d {
                false
            } else {
                continue;
            };
            if turn_right {
                (dx, dy) = (dy, -dx);
            } else {
                (dx, dy) = (-dy, dx);
            }
        }
        (points, area)
    }

    /// Inverts every pixel enclosed by the path (even-odd), using each
    /// vertical edge to toggle the span between it and a reference column.
    fn xor_path(&mut self, points: &[(i64, i64)]) {
        let x_ref = points.iter().map(|p| p.0).min().unwrap_or(0);
        let n = points.len();
        for i in 0..n {
            let (x, y0) = points[i];
            let (_, y1) = points[(i + 1) % n];
            if y0 != y1 {
                self.toggle_row(y0.min(y1), x_ref, x);
            }
        }
    }
}

/// Decomposes the 0.5-binarized mask into closed boundary paths. Paths
/// enclosing fewer than `turd_size` pixels are discarded.
pub fn decompose(mask: &Bitmap, cfg: &TraceConfig) -> Vec<PixelPath> {
    let original = WorkBitmap {
        width: mask.width() as i64,
        height: mask.height() as i64,
        bits: mask.data().iter().map(|v| *v >= 0.5).collect(),
    };
    let mut work = WorkBitmap {
        width: original.width,
        height: original.height,
        bits: original.bits.clone(),
    };
    let mut paths = Vec::new();
    let mut y_scan = work.height - 1;
    while let Some((x, y)) = work.find_next(y_scan) {
        y_scan = y;
        let positive = original.get(x, y);
        let (mut points, area) = work.walk(x, y + 1, cfg.turn_policy);
        work.xor_path(&points);
        if area.abs() < cfg.turd_size as i64 {
            continue;
        }
        let (sign, area) = if positive {
            (PathSign::Positive, area)
        } else {
            // Walked counterclockwise in the inverted copy; flip so holes
            // run clockwise.
            points.reverse();
            (PathSign::Negative, -area)
        };
        paths.push(PixelPath { points, sign, area });
    }
    paths
}
