//! Vector-to-mask conversion: polyline drawing, polygon filling, curb
//! domain masks and morphological dilation.

use std::collections::VecDeque;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ring_self_intersects, Point};
use crate::types::{Bitmap, GridSpec, InstanceMask, MapClass, Pixel, Scene, VectorInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    #[default]
    Square,
    Disk,
}

/// Structuring element for [`dilate`]. Radius 0 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DilationSpec {
    pub radius: usize,
    pub kernel_shape: KernelShape,
}

impl DilationSpec {
    pub const IDENTITY: DilationSpec = DilationSpec {
        radius: 0,
        kernel_shape: KernelShape::Square,
    };

    pub fn square(radius: usize) -> Self {
        Self {
            radius,
            kernel_shape: KernelShape::Square,
        }
    }

    pub fn disk(radius: usize) -> Self {
        Self {
            radius,
            kernel_shape: KernelShape::Disk,
        }
    }
}

/// Output of the primitive rasterizers.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub bitmap: Bitmap,
    /// Set when the input collapsed (a single pixel, or a ring with no
    /// interior) and only the outline could be drawn.
    pub degenerate: bool,
}

/// Integer cells of an 8-connected Bresenham segment, endpoints inclusive.
pub fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

fn draw_segment(bitmap: &mut Bitmap, a: Pixel, b: Pixel) {
    for (x, y) in bresenham(a.col as i64, a.row as i64, b.col as i64, b.row as i64) {
        bitmap.set(x as usize, y as usize, 1.0);
    }
}

fn pixelize(points: &[Point], grid: &GridSpec) -> Vec<Pixel> {
    let mut px: Vec<Pixel> = points.iter().map(|p| grid.world_to_pixel(*p).0).collect();
    px.dedup();
    px
}

/// Draws a polyline as 8-connected Bresenham segments between consecutive
/// vertex pixels. Widths above one pixel thicken the line with a disk of
/// radius `(width_px - 1) / 2`.
pub fn rasterize_polyline(points: &[Point], grid: &GridSpec, width_px: usize) -> Result<Raster> {
    if points.len() < 2 {
        return Err(Error::InvalidInstance(format!(
            "polyline needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut bitmap = Bitmap::for_grid(grid);
    let px = pixelize(points, grid);
    let degenerate = px.len() < 2;
    if degenerate {
        warn!("polyline collapsed to a single pixel");
        bitmap.set(px[0].col, px[0].row, 1.0);
    } else {
        for w in px.windows(2) {
            draw_segment(&mut bitmap, w[0], w[1]);
        }
    }
    let radius = width_px.max(1).saturating_sub(1) / 2;
    if radius > 0 {
        bitmap = dilate(&bitmap, DilationSpec::disk(radius));
    }
    Ok(Raster { bitmap, degenerate })
}

/// Fills a closed ring: even-odd scanline fill over the lattice of pixel
/// indices, together with the ring's Bresenham outline.
pub fn rasterize_polygon(points: &[Point], grid: &GridSpec) -> Result<Raster> {
    if points.len() < 3 {
        return Err(Error::InvalidInstance(format!(
            "polygon needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut px = pixelize(points, grid);
    while px.len() > 1 && px.first() == px.last() {
        px.pop();
    }
    let mut bitmap = Bitmap::for_grid(grid);
    for i in 0..px.len() {
        draw_segment(&mut bitmap, px[i], px[(i + 1) % px.len()]);
    }

    let outline_only = Raster {
        bitmap: bitmap.clone(),
        degenerate: true,
    };
    if all_collinear(points) {
        warn!("polygon has no interior, emitting outline only");
        return Ok(outline_only);
    }
    if ring_self_intersects(points) {
        return Err(Error::Geometry("self-intersecting ring".into()));
    }
    let lattice: Vec<(i64, i64)> = px.iter().map(|p| (p.col as i64, p.row as i64)).collect();
    if shoelace2(&lattice) == 0 {
        warn!("polygon collapsed on the pixel grid, emitting outline only");
        return Ok(outline_only);
    }
    scanline_fill(&mut bitmap, &lattice);
    Ok(Raster {
        bitmap,
        degenerate: false,
    })
}

fn all_collinear(points: &[Point]) -> bool {
    let a = points[0];
    let Some(b) = points.iter().copied().find(|p| *p != a) else {
        return true;
    };
    let scale = (b - a).norm();
    points
        .iter()
        .all(|p| ((b - a).cross(*p - a) / scale).abs() <= 1e-9 * scale.max(1.0))
}

fn shoelace2(ring: &[(i64, i64)]) -> i64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.0 * b.1 - a.1 * b.0
        })
        .sum()
}

/// Exact even-odd scanline fill: on each integer row, crossings use the
/// half-open edge rule and spans cover lattice points `ceil(xl)..=floor(xr)`.
fn scanline_fill(bitmap: &mut Bitmap, ring: &[(i64, i64)]) {
    let n = ring.len();
    let y_lo = ring.iter().map(|p| p.1).min().unwrap_or(0).max(0);
    let y_hi = ring
        .iter()
        .map(|p| p.1)
        .max()
        .unwrap_or(0)
        .min(bitmap.height() as i64 - 1);
    let w = bitmap.width() as i64;
    // Crossing x as the rational num/den with den > 0.
    let mut xs: Vec<(i64, i64)> = Vec::new();
    for y in y_lo..=y_hi {
        xs.clear();
        for i in 0..n {
            let (x0, y0) = ring[i];
            let (x1, y1) = ring[(i + 1) % n];
            if (y0 <= y && y < y1) || (y1 <= y && y < y0) {
                let mut den = y1 - y0;
                let mut num = x0 * den + (y - y0) * (x1 - x0);
                if den < 0 {
                    den = -den;
                    num = -num;
                }
                xs.push((num, den));
            }
        }
        xs.sort_by(|a, b| (a.0 as i128 * b.1 as i128).cmp(&(b.0 as i128 * a.1 as i128)));
        for pair in xs.chunks_exact(2) {
            let left = pair[0].0.div_euclid(pair[0].1) + i64::from(pair[0].0.rem_euclid(pair[0].1) != 0);
            let right = pair[1].0.div_euclid(pair[1].1);
            for x in left.max(0)..=right.min(w - 1) {
                bitmap.set(x as usize, y as usize, 1.0);
            }
        }
    }
}

/// Cell-center even-odd fill of a ring given in lattice coordinates
/// (pixel corners on integers): cell `(x, y)` is set when `(x+0.5, y+0.5)`
/// is inside.
pub fn fill_even_odd(rings: &[Vec<Point>], width: usize, height: usize) -> Bitmap {
    let mut bitmap = Bitmap::new(width, height);
    let mut xs: Vec<f64> = Vec::new();
    for y in 0..height {
        let cy = y as f64 + 0.5;
        xs.clear();
        for ring in rings {
            let n = ring.len();
            for i in 0..n {
                let (a, b) = (ring[i], ring[(i + 1) % n]);
                if (a.y > cy) != (b.y > cy) {
                    xs.push(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Centers strictly between the crossings.
            let start = (pair[0] - 0.5).ceil().max(0.0);
            let end = (pair[1] - 0.5).ceil().min(width as f64);
            let (start, end) = (start as usize, end as usize);
            for x in start..end {
                let v = bitmap.get(x, y);
                bitmap.set(x, y, 1.0 - v);
            }
        }
    }
    bitmap
}

/// Component labels over a grid; 0 marks foreground (unlabeled) cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelGrid {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn count(&self) -> u32 {
        self.count
    }
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Binary bitmap of one component.
    pub fn component_mask(&self, label: u32) -> Bitmap {
        let data = self
            .labels
            .iter()
            .map(|l| if *l == label { 1.0 } else { 0.0 })
            .collect();
        Bitmap::from_data(self.width, self.height, data).expect("sizes match")
    }
}

/// Labels the 4-connected components of the background (values `< 0.5`).
/// Labels are assigned 1..=K in row-major order of each component's first
/// cell.
pub fn connected_domains(binary: &Bitmap) -> LabelGrid {
    let (w, h) = (binary.width(), binary.height());
    let mut labels = vec![0u32; w * h];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if labels[start] != 0 || binary.data()[start] >= 0.5 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if labels[j] == 0 && binary.data()[j] < 0.5 {
                    labels[j] = count;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
    }
    LabelGrid {
        width: w,
        height: h,
        labels,
        count,
    }
}

/// Curb label generation: draws every curb into one graph, splits the
/// background into connected domains and returns one mask per domain other
/// than the one holding the ego vehicle. Curb line pixels belong to no mask.
pub fn gen_curb_masks(curbs: &[VectorInstance], grid: &GridSpec, ego: Point) -> Result<Vec<InstanceMask>> {
    if curbs.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(bad) = curbs.iter().find(|c| c.class != MapClass::Curb) {
        return Err(Error::InvalidInstance(format!(
            "expected curb instances, found {}",
            bad.class
        )));
    }
    let mut graph = Bitmap::for_grid(grid);
    for curb in curbs {
        let r = rasterize_polyline(&curb.points, grid, 1)?;
        graph.union_with(&r.bitmap)?;
    }
    let (ego_px, _) = grid.world_to_pixel(ego);
    if graph.get(ego_px.col, ego_px.row) >= 0.5 {
        return Err(Error::EgoOnCurb {
            col: ego_px.col,
            row: ego_px.row,
        });
    }
    let labels = connected_domains(&graph);
    let ego_label = labels.get(ego_px.col, ego_px.row);
    Ok((1..=labels.count())
        .filter(|l| *l != ego_label)
        .map(|l| InstanceMask::ground_truth(MapClass::Curb, labels.component_mask(l)))
        .collect())
}

fn row_max(src: &Bitmap, half: usize) -> Bitmap {
    let (w, h) = (src.width(), src.height());
    Bitmap::from_fn(w, h, |x, y| {
        let lo = x.saturating_sub(half);
        let hi = (x + half).min(w - 1);
        (lo..=hi).map(|i| src.get(i, y)).fold(0.0, f32::max)
    })
}

/// Grey-level dilation: each output cell is the maximum of the input over
/// the kernel footprint centered on it.
pub fn dilate(mask: &Bitmap, spec: DilationSpec) -> Bitmap {
    let r = spec.radius;
    if r == 0 || mask.width() == 0 || mask.height() == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    match spec.kernel_shape {
        KernelShape::Square => {
            let horiz = row_max(mask, r);
            Bitmap::from_fn(w, h, |x, y| {
                let lo = y.saturating_sub(r);
                let hi = (y + r).min(h - 1);
                (lo..=hi).map(|j| horiz.get(x, j)).fold(0.0, f32::max)
            })
        }
        KernelShape::Disk => {
            // Decompose the disk into horizontal spans per row offset.
            let half_width = |dy: usize| ((r * r - dy * dy) as f64).sqrt().floor() as usize;
            let mut spans: Vec<(usize, Bitmap)> = Vec::new();
            for dy in 0..=r {
                let hw = half_width(dy);
                if !spans.iter().any(|(k, _)| *k == hw) {
                    spans.push((hw, row_max(mask, hw)));
                }
            }
            let lookup = |hw: usize| &spans.iter().find(|(k, _)| *k == hw).unwrap().1;
            Bitmap::from_fn(w, h, |x, y| {
                let mut best = 0.0f32;
                for dy in 0..=r {
                    let src = lookup(half_width(dy));
                    if y + dy < h {
                        best = best.max(src.get(x, y + dy));
                    }
                    if dy > 0 && y >= dy {
                        best = best.max(src.get(x, y - dy));
                    }
                }
                best
            })
        }
    }
}

/// Per-class rasterization settings for ground-truth labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasterConfig {
    pub divider_width_px: usize,
    pub label_dilation: DilationSpec,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            divider_width_px: 1,
            label_dilation: DilationSpec::IDENTITY,
        }
    }
}

/// Converts a scene's vectors into instance masks: one mask per divider and
/// ped crossing in scene order, followed by one mask per curb domain.
pub fn rasterize_scene(scene: &Scene, cfg: &RasterConfig) -> Result<Vec<InstanceMask>> {
    let grid = &scene.grid;
    let mut masks = Vec::new();
    let mut curbs = Vec::new();
    for inst in &scene.gt_vectors {
        let bitmap = match inst.class {
            MapClass::Divider => rasterize_polyline(&inst.points, grid, cfg.divider_width_px)?.bitmap,
            MapClass::PedCross => rasterize_polygon(&inst.points, grid)?.bitmap,
            MapClass::Curb => {
                curbs.push(inst.clone());
                continue;
            }
        };
        masks.push(InstanceMask::ground_truth(inst.class, bitmap));
    }
    masks.extend(gen_curb_masks(&curbs, grid, scene.ego)?);
    if cfg.label_dilation.radius > 0 {
        for m in &mut masks {
            m.bitmap = dilate(&m.bitmap, cfg.label_dilation);
        }
    }
    Ok(masks)
}
