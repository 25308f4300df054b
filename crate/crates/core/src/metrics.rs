//! IoU, Chamfer distance and CD-thresholded average precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{resample, Point};
use crate::types::{Bitmap, InstanceMask, MapClass, VectorInstance};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Chamfer thresholds in meters, ascending.
    pub cd_thresholds: Vec<f64>,
    /// Arc-length spacing in meters used before computing Chamfer distance.
    pub sample_interval: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self::relaxed()
    }
}

impl EvalConfig {
    /// Thresholds {0.2, 0.5, 1.0} m.
    pub fn strict() -> Self {
        Self {
            cd_thresholds: vec![0.2, 0.5, 1.0],
            sample_interval: 0.1,
        }
    }

    /// Thresholds {0.5, 1.0, 1.5} m.
    pub fn relaxed() -> Self {
        Self {
            cd_thresholds: vec![0.5, 1.0, 1.5],
            sample_interval: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cd_thresholds.is_empty() {
            return Err(Error::Config("no CD thresholds".into()));
        }
        if self.cd_thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config("CD thresholds must be positive".into()));
        }
        if self.cd_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("CD thresholds must be strictly ascending".into()));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(Error::Config("sample_interval must be positive".into()));
        }
        Ok(())
    }
}

fn overlap_counts(a: &Bitmap, b: &Bitmap) -> Result<(usize, usize)> {
    a.same_dims(b)?;
    let (mut inter, mut union) = (0, 0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x >= 0.5, y >= 0.5);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok((inter, union))
}

fn ratio(inter: usize, union: usize) -> f64 {
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Intersection over union of two bitmaps binarized at 0.5; two empty
/// bitmaps score 1.
pub fn bitmap_iou(a: &Bitmap, b: &Bitmap) -> Result<f64> {
    let (i, u) = overlap_counts(a, b)?;
    Ok(ratio(i, u))
}

pub fn iou(a: &InstanceMask, b: &InstanceMask) -> Result<f64> {
    bitmap_iou(&a.bitmap, &b.bitmap)
}

fn class_union(masks: &[InstanceMask], class: MapClass, like: &Bitmap) -> Result<Bitmap> {
    let mut acc = Bitmap::new(like.width(), like.height());
    for m in masks.iter().filter(|m| m.class == class) {
        acc.union_with(&m.bitmap.binarize())?;
    }
    Ok(acc)
}

fn semantic_counts(preds: &[InstanceMask], gts: &[InstanceMask], class: MapClass) -> Result<(usize, usize)> {
    let Some(like) = gts.first().or(preds.first()).map(|m| &m.bitmap) else {
        return Ok((0, 0));
    };
    let p = class_union(preds, class, like)?;
    let g = class_union(gts, class, like)?;
    overlap_counts(&p, &g)
}

/// IoU between the union of all class predictions and the union of all
/// class ground truths.
pub fn semantic_iou(preds: &[InstanceMask], gts: &[InstanceMask], class: MapClass) -> Result<f64> {
    let (i, u) = semantic_counts(preds, gts, class)?;
    Ok(ratio(i, u))
}

/// Mean distance from each point of `a` to its nearest point of `b`.
pub fn chamfer_dir(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut total = 0.0;
    for p in a {
        let best = b.iter().map(|q| p.dist_sq(*q)).fold(f64::INFINITY, f64::min);
        total += best.sqrt();
    }
    Ok(total / a.len() as f64)
}

/// Bidirectional Chamfer distance of two point sets.
pub fn chamfer_points(a: &[Point], b: &[Point]) -> Result<f64> {
    Ok(chamfer_dir(a, b)? + chamfer_dir(b, a)?)
}

pub fn sample_instance(v: &VectorInstance, interval: f64) -> Vec<Point> {
    resample(&v.points, v.closed, interval)
}

/// Chamfer distance between two instances after arc-length resampling.
pub fn chamfer(a: &VectorInstance, b: &VectorInstance, cfg: &EvalConfig) -> f64 {
    let sa = sample_instance(a, cfg.sample_interval);
    let sb = sample_instance(b, cfg.sample_interval);
    chamfer_points(&sa, &sb).expect("resampled instances are nonempty")
}

#[derive(Debug, Clone, Copy)]
struct BBox {
    lo: Point,
    hi: Point,
}

impl BBox {
    fn of(pts: &[Point]) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        Self { lo, hi }
    }

    fn gap(&self, o: &BBox) -> f64 {
        let dx = (o.lo.x - self.hi.x).max(self.lo.x - o.hi.x).max(0.0);
        let dy = (o.lo.y - self.hi.y).max(self.lo.y - o.hi.y).max(0.0);
        dx.hypot(dy)
    }
}

/// One scene's vectors for AP computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneVectors {
    pub gts: Vec<VectorInstance>,
    pub preds: Vec<VectorInstance>,
}

/// Chamfer distances between the class predictions (rows) and class ground
/// truths (columns) of each scene. Pairs whose bounding boxes are too far
/// apart to beat `limit` are left as infinity.
#[derive(Debug, Clone)]
pub struct ClassDistances {
    /// Per scene: original pred indices, original gt indices, row-major CDs.
    scenes: Vec<(Vec<usize>, Vec<usize>, Vec<f64>)>,
    confidences: Vec<Vec<f64>>,
}

impl ClassDistances {
    pub fn compute(scenes: &[SceneVectors], class: MapClass, cfg: &EvalConfig, limit: f64) -> Self {
        let mut out = Vec::with_capacity(scenes.len());
        let mut confidences = Vec::with_capacity(scenes.len());
        for s in scenes {
            let pi: Vec<usize> = (0..s.preds.len()).filter(|&i| s.preds[i].class == class).collect();
            let gi: Vec<usize> = (0..s.gts.len()).filter(|&j| s.gts[j].class == class).collect();
            let ps: Vec<Vec<Point>> = pi.iter().map(|&i| sample_instance(&s.preds[i], cfg.sample_interval)).collect();
            let gs: Vec<Vec<Point>> = gi.iter().map(|&j| sample_instance(&s.gts[j], cfg.sample_interval)).collect();
            let pb: Vec<BBox> = ps.iter().map(|p| BBox::of(p)).collect();
            let gb: Vec<BBox> = gs.iter().map(|g| BBox::of(g)).collect();
            let mut cd = Vec::with_capacity(ps.len() * gs.len());
            for (p, bp) in ps.iter().zip(&pb) {
                for (g, bg) in gs.iter().zip(&gb) {
                    // Every point is at least the box gap away, in both directions.
                    if 2.0 * bp.gap(bg) >= limit {
                        cd.push(f64::INFINITY);
                    } else {
                        cd.push(chamfer_points(p, g).expect("nonempty samples"));
                    }
                }
            }
            confidences.push(pi.iter().map(|&i| s.preds[i].confidence).collect());
            out.push((pi, gi, cd));
        }
        Self {
            scenes: out,
            confidences,
        }
    }

    pub fn num_gts(&self) -> usize {
        self.scenes.iter().map(|s| s.1.len()).sum()
    }

    pub fn num_preds(&self) -> usize {
        self.scenes.iter().map(|s| s.0.len()).sum()
    }
}

/// Outcome of one prediction in the greedy matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub class: MapClass,
    pub threshold: f64,
    pub scene: usize,
    pub pred: usize,
    pub confidence: f64,
    pub gt: Option<usize>,
    pub cd: Option<f64>,
    pub tp: bool,
}

/// Greedy confidence-ordered matching at one threshold; returns the records
/// in ranking order.
pub fn match_predictions(d: &ClassDistances, class: MapClass, threshold: f64) -> Vec<MatchRecord> {
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (s, conf) in d.confidences.iter().enumerate() {
        order.extend((0..conf.len()).map(|k| (s, k)));
    }
    // Stable: equal confidences keep scene then pred order.
    order.sort_by(|a, b| d.confidences[b.0][b.1].total_cmp(&d.confidences[a.0][a.1]));
    let mut used: Vec<Vec<bool>> = d.scenes.iter().map(|s| vec![false; s.1.len()]).collect();
    let mut out = Vec::with_capacity(order.len());
    for (s, k) in order {
        let (pi, gi, cd) = &d.scenes[s];
        let ng = gi.len();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..ng {
            let c = cd[k * ng + j];
            if !used[s][j] && best.map_or(true, |(_, b)| c < b) {
                best = Some((j, c));
            }
        }
        let tp = matches!(best, Some((_, c)) if c < threshold);
        if let (true, Some((j, _))) = (tp, best) {
            used[s][j] = true;
        }
        out.push(MatchRecord {
            class,
            threshold,
            scene: s,
            pred: pi[k],
            confidence: d.confidences[s][k],
            gt: best.filter(|_| tp).map(|(j, _)| gi[j]),
            cd: best.map(|(_, c)| c).filter(|c| c.is_finite()),
            tp,
        });
    }
    out
}

/// Area under the monotone precision envelope, from TP flags in ranking
/// order and the number of ground truths.
pub fn ap_from_flags(tp: &[bool], num_gts: usize) -> f64 {
    if num_gts == 0 {
        return if tp.is_empty() { 1.0 } else { 0.0 };
    }
    let mut precision = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (k, &t) in tp.iter().enumerate() {
        hits += t as usize;
        precision.push(hits as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let total: f64 = tp.iter().zip(&precision).filter(|(t, _)| **t).map(|(_, p)| *p).sum();
    total / num_gts as f64
}

/// Average precision of one class at one Chamfer threshold.
pub fn average_precision(scenes: &[SceneVectors], class: MapClass, threshold: f64, cfg: &EvalConfig) -> f64 {
    let d = ClassDistances::compute(scenes, class, cfg, threshold);
    let flags: Vec<bool> = match_predictions(&d, class, threshold).iter().map(|r| r.tp).collect();
    ap_from_flags(&flags, d.num_gts())
}

/// Inputs for one scene of an evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalScene {
    pub vectors: SceneVectors,
    pub gt_masks: Option<Vec<InstanceMask>>,
    pub pred_masks: Option<Vec<InstanceMask>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: MapClass,
    pub iou: Option<f64>,
    /// AP at each configured threshold, in threshold order.
    pub ap: Vec<f64>,
    pub ap_mean: f64,
    pub num_gt: usize,
    pub num_pred: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub cd_thresholds: Vec<f64>,
    pub sample_interval: f64,
    pub num_scenes: usize,
    pub classes: Vec<ClassReport>,
    pub map: f64,
    pub matches: Vec<MatchRecord>,
}

impl EvalReport {
    pub fn class(&self, class: MapClass) -> &ClassReport {
        &self.classes[class.index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Full evaluation: per-class IoU (pixel counts pooled over scenes),
/// per-threshold AP, class AP averaged over thresholds and mAP over the
/// three classes.
pub fn evaluate(scenes: &[EvalScene], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let vectors: Vec<SceneVectors> = scenes.iter().map(|s| s.vectors.clone()).collect();
    let limit = *cfg.cd_thresholds.last().unwrap();
    let mut classes = Vec::with_capacity(3);
    let mut matches = Vec::new();
    for class in MapClass::ALL {
        let d = ClassDistances::compute(&vectors, class, cfg, limit);
        let mut ap = Vec::with_capacity(cfg.cd_thresholds.len());
        for &t in &cfg.cd_thresholds {
            let records = match_predictions(&d, class, t);
            let flags: Vec<bool> = records.iter().map(|r| r.tp).collect();
            ap.push(ap_from_flags(&flags, d.num_gts()));
            matches.extend(records);
        }
        let ap_mean = ap.iter().sum::<f64>() / ap.len() as f64;
        let mut iou = None;
        let (mut inter, mut union) = (0, 0);
        for s in scenes {
            if s.gt_masks.is_none() && s.pred_masks.is_none() {
                continue;
            }
            let (i, u) = semantic_counts(
                s.pred_masks.as_deref().unwrap_or(&[]),
                s.gt_masks.as_deref().unwrap_or(&[]),
                class,
            )?;
            inter += i;
            union += u;
            iou = Some(ratio(inter, union));
        }
        classes.push(ClassReport {
            class,
            iou,
            ap,
            ap_mean,
            num_gt: d.num_gts(),
            num_pred: d.num_preds(),
        });
    }
    let map = classes.iter().map(|c| c.ap_mean).sum::<f64>() / classes.len() as f64;
    Ok(EvalReport {
        version: REPORT_VERSION,
        cd_thresholds: cfg.cd_thresholds.clone(),
        sample_interval: cfg.sample_interval,
        num_scenes: scenes.len(),
        classes,
        map,
        matches,
    })
}
