//! Shared domain types: the BEV grid, map classes, vector instances,
//! masks and scenes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{signed_area, Point, Rect};

/// Slack used when flooring world coordinates onto the pixel grid, so that
/// points computed as `origin + k * resolution` land in cell `k`.
const PIXEL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct GridParams {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    resolution: f64,
}

/// Bird's-eye-view extent in meters plus its pixel resolution.
///
/// Pixel `(col, row)` covers the half-open cell
/// `[x_min + col*res, x_min + (col+1)*res) x [y_min + row*res, ...)`.
/// Rows grow with world `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    resolution: f64,
    width: usize,
    height: usize,
}

impl TryFrom<GridParams> for GridSpec {
    type Error = Error;
    fn try_from(p: GridParams) -> Result<Self> {
        GridSpec::new(p.x_min, p.x_max, p.y_min, p.y_max, p.resolution)
    }
}

impl From<GridSpec> for GridParams {
    fn from(g: GridSpec) -> Self {
        GridParams {
            x_min: g.x_min,
            x_max: g.x_max,
            y_min: g.y_min,
            y_max: g.y_max,
            resolution: g.resolution,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::new(-15.0, 15.0, -30.0, 30.0, 0.15).expect("default grid is valid")
    }
}

/// Integer pixel address on a [`GridSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub col: usize,
    pub row: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, resolution: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max, resolution]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidGrid("non-finite bound".into()));
        }
        if x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidGrid(format!(
                "empty extent x=[{x_min}, {x_max}] y=[{y_min}, {y_max}]"
            )));
        }
        if resolution <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let width = ((x_max - x_min) / resolution).round();
        let height = ((y_max - y_min) / resolution).round();
        if width < 1.0 || height < 1.0 || width * height > 1e8 {
            return Err(Error::InvalidGrid(format!(
                "unsupported pixel size {width}x{height}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            resolution,
            width: width as usize,
            height: height as usize,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn extent(&self) -> Rect {
        Rect {
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }

    /// Continuous pixel-lattice coordinates of a world point (cell corners
    /// sit on integers).
    pub fn to_lattice(&self, p: Point) -> Point {
        Point::new(
            (p.x - self.x_min) / self.resolution,
            (p.y - self.y_min) / self.resolution,
        )
    }

    /// World position of a lattice point.
    pub fn from_lattice(&self, q: Point) -> Point {
        Point::new(
            self.x_min + q.x * self.resolution,
            self.y_min + q.y * self.resolution,
        )
    }

    /// Floors a world point onto the pixel grid, clamping out-of-extent
    /// points to the nearest border pixel. The flag is `true` when no
    /// clamping was needed.
    pub fn world_to_pixel(&self, p: Point) -> (Pixel, bool) {
        let q = self.to_lattice(p);
        let (col, col_ok) = clamp_index((q.x + PIXEL_EPS).floor(), self.width);
        let (row, row_ok) = clamp_index((q.y + PIXEL_EPS).floor(), self.height);
        // The closed upper border belongs to the last cell.
        let on_x_edge = p.x == self.x_max;
        let on_y_edge = p.y == self.y_max;
        (
            Pixel { col, row },
            (col_ok || on_x_edge) && (row_ok || on_y_edge) && p.x.is_finite() && p.y.is_finite(),
        )
    }

    /// World position of a pixel's cell center.
    pub fn pixel_to_world(&self, px: Pixel) -> Point {
        self.from_lattice(Point::new(px.col as f64 + 0.5, px.row as f64 + 0.5))
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }
}

fn clamp_index(v: f64, n: usize) -> (usize, bool) {
    if v.is_nan() || v < 0.0 {
        (0, false)
    } else if v >= n as f64 {
        (n - 1, false)
    } else {
        (v as usize, true)
    }
}

/// The three HD-map element classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MapClass {
    #[serde(rename = "divider")]
    Divider,
    #[serde(rename = "ped_crossing")]
    PedCross,
    #[serde(rename = "curb")]
    Curb,
}

impl MapClass {
    pub const ALL: [MapClass; 3] = [MapClass::Divider, MapClass::PedCross, MapClass::Curb];

    pub fn index(self) -> usize {
        match self {
            MapClass::Divider => 0,
            MapClass::PedCross => 1,
            MapClass::Curb => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MapClass::Divider => "divider",
            MapClass::PedCross => "ped_crossing",
            MapClass::Curb => "curb",
        }
    }

    /// Ped crossings are polygons; dividers and curbs are polylines.
    pub fn is_closed_shape(self) -> bool {
        self == MapClass::PedCross
    }
}

impl fmt::Display for MapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MapClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// A classed point sequence in meters: an open polyline or a closed
/// polygon (the closing edge is implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorInstance {
    pub class: MapClass,
    pub points: Vec<Point>,
    pub closed: bool,
    pub confidence: f64,
}

impl VectorInstance {
    /// Builds an instance, dropping consecutive duplicate points (and a
    /// repeated closing vertex on rings).
    pub fn new(class: MapClass, points: Vec<Point>, closed: bool, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidInstance(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidInstance("non-finite coordinate".into()));
        }
        let points = dedup_points(points, closed);
        if points.len() < 2 {
            return Err(Error::InvalidInstance(format!(
                "{} distinct point(s), need at least 2",
                points.len()
            )));
        }
        Ok(Self {
            class,
            points,
            closed,
            confidence,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.points.reverse();
        out
    }

    /// Canonical representative of the instance's equivalence class: for
    /// open shapes the lexicographically smaller of the two directions, for
    /// rings the counterclockwise rotation starting at the smallest vertex.
    pub fn canonicalize(&self) -> Result<Self> {
        if self.points.len() < 2 {
            return Err(Error::InvalidInstance(format!(
                "{} point(s), need at least 2",
                self.points.len()
            )));
        }
        let mut out = self.clone();
        if !self.closed {
            let rev: Vec<Point> = self.points.iter().rev().copied().collect();
            if lex_cmp_seq(&rev, &self.points).is_lt() {
                out.points = rev;
            }
            return Ok(out);
        }
        let area = signed_area(&self.points);
        let forward = self.points.clone();
        let backward: Vec<Point> = self.points.iter().rev().copied().collect();
        let mut candidates = Vec::new();
        if area >= 0.0 {
            candidates.push(forward.clone());
        }
        if area <= 0.0 {
            candidates.push(backward);
        }
        let mut best: Option<Vec<Point>> = None;
        for cand in candidates {
            for k in 0..cand.len() {
                let mut rot = cand.clone();
                rot.rotate_left(k);
                if best.as_ref().map_or(true, |b| lex_cmp_seq(&rot, b).is_lt()) {
                    best = Some(rot);
                }
            }
        }
        out.points = best.unwrap_or(forward);
        Ok(out)
    }
}

fn lex_cmp_seq(a: &[Point], b: &[Point]) -> std::cmp::Ordering {
    for (p, q) in a.iter().zip(b) {
        let o = p.lex_cmp(q);
        if o.is_ne() {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn dedup_points(mut points: Vec<Point>, closed: bool) -> Vec<Point> {
    points.dedup();
    if closed {
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
    }
    points
}

/// Row-major grid of values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn for_grid(grid: &GridSpec) -> Self {
        Self::new(grid.width(), grid.height())
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(width, height, data.len(), 1));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInstance("bitmap value outside [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Foreground test at the 0.5 threshold; out-of-range reads are
    /// background.
    #[inline]
    pub fn is_set(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize] >= 0.5
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|v| **v >= 0.5).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count_set() == 0
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0 || *v == 1.0)
    }

    /// Thresholds at 0.5 (values `>= 0.5` become 1).
    pub fn binarize(&self) -> Bitmap {
        Bitmap {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|v| if *v >= 0.5 { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn same_dims(&self, other: &Bitmap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Pointwise maximum with another bitmap of the same size.
    pub fn union_with(&mut self, other: &Bitmap) -> Result<()> {
        self.same_dims(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.max(*b);
        }
        Ok(())
    }

    /// Coordinates of all foreground cells in row-major order.
    pub fn set_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v >= 0.5)
            .map(|(i, _)| (i % self.width, i / self.width))
    }
}

/// A classed mask on the BEV grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMask {
    pub class: MapClass,
    pub bitmap: Bitmap,
    pub confidence: f64,
}

impl InstanceMask {
    /// Ground-truth mask: binary values, confidence 1.
    pub fn ground_truth(class: MapClass, bitmap: Bitmap) -> Self {
        Self {
            class,
            bitmap: bitmap.binarize(),
            confidence: 1.0,
        }
    }
}

/// Ground-truth vectors on a grid, with the ego position.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub grid: GridSpec,
    pub gt_vectors: Vec<VectorInstance>,
    pub ego: Point,
}

impl Scene {
    /// Builds a scene, clipping every instance to the grid extent. Open
    /// shapes leaving and re-entering the extent split into several
    /// instances; fragments shorter than two points are dropped.
    pub fn new(grid: GridSpec, instances: Vec<VectorInstance>, ego: Point) -> Result<Self> {
        let rect = grid.extent();
        let mut gt_vectors = Vec::with_capacity(instances.len());
        for inst in instances {
            if inst.closed {
                if inst.points.iter().all(|p| rect.contains(*p)) {
                    gt_vectors.push(inst);
                    continue;
                }
                let clipped = rect.clip_polygon(&inst.points);
                if let Ok(v) = VectorInstance::new(inst.class, clipped, true, inst.confidence) {
                    if v.points.len() >= 3 {
                        gt_vectors.push(v);
                    }
                }
            } else {
                for piece in rect.clip_polyline(&inst.points) {
                    if let Ok(v) = VectorInstance::new(inst.class, piece, false, inst.confidence) {
                        gt_vectors.push(v);
                    }
                }
            }
        }
        Ok(Self {
            grid,
            gt_vectors,
            ego,
        })
    }

    pub fn of_class(&self, class: MapClass) -> impl Iterator<Item = &VectorInstance> {
        self.gt_vectors.iter().filter(move |v| v.class == class)
    }
}
