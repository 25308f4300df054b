//! Synthetic predictions: ground-truth scenes with geometric noise, dropped
//! and spurious instances, soft edges and a confidence model. Stands in for
//! a trained segmentation network.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::matcher::Prediction;
use crate::raster::{dilate, gen_curb_masks, rasterize_polygon, rasterize_polyline, RasterConfig};
use crate::types::{Bitmap, GridSpec, InstanceMask, MapClass, Scene, VectorInstance};

/// Confidence assigned to spurious instances under the oracle model, just
/// above the default post-processing gate.
pub const SPURIOUS_CONFIDENCE: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceModel {
    /// Confidence 1 and a one-hot class distribution.
    #[default]
    Oracle,
    /// Sigmoid of a noisy logit, softmax of noisy class logits.
    NoisyLogit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbSpec {
    pub seed: u64,
    /// Standard deviation of the per-instance offset in meters; vertices get
    /// an extra independent jitter of half this.
    pub point_noise_sigma: f64,
    pub drop_prob: f64,
    /// Expected number of spurious instances per scene.
    pub spurious_rate: f64,
    pub blur_radius: usize,
    pub confidence_model: ConfidenceModel,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            point_noise_sigma: 0.0,
            drop_prob: 0.0,
            spurious_rate: 0.0,
            blur_radius: 0,
            confidence_model: ConfidenceModel::Oracle,
        }
    }
}

impl PerturbSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.point_noise_sigma.is_finite() && self.point_noise_sigma >= 0.0) {
            return Err(Error::Config("point_noise_sigma must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::Config("drop_prob outside [0, 1]".into()));
        }
        if !(self.spurious_rate.is_finite() && self.spurious_rate >= 0.0) {
            return Err(Error::Config("spurious_rate must be non-negative".into()));
        }
        Ok(())
    }

    /// Same spec with the seed mixed with a scene index, so that scenes of
    /// one corpus draw independent noise.
    pub fn for_scene(&self, index: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, index),
            ..*self
        }
    }
}

/// SplitMix64 finalizer over (seed, index).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal_px(rng: &mut ChaCha8Rng, sigma_px: f64) -> i64 {
    if sigma_px == 0.0 {
        return 0;
    }
    Normal::new(0.0, sigma_px).unwrap().sample(rng).round() as i64
}

/// Offsets every vertex by a whole number of pixels: one shared offset plus
/// an independent per-vertex term. Coordinates lying on the grid border stay
/// there, so curbs that close off a domain at the image edge keep doing so.
fn jitter_points(points: &[Point], grid: &GridSpec, sigma_px: f64, rng: &mut ChaCha8Rng, per_vertex: bool) -> Vec<Point> {
    let res = grid.resolution();
    let e = grid.extent();
    let (ox, oy) = (normal_px(rng, sigma_px), normal_px(rng, sigma_px));
    points
        .iter()
        .map(|p| {
            let (vx, vy) = if per_vertex {
                (normal_px(rng, sigma_px / 2.0), normal_px(rng, sigma_px / 2.0))
            } else {
                (0, 0)
            };
            let x = if p.x == e.x_min || p.x == e.x_max { p.x } else { p.x + (ox + vx) as f64 * res };
            let y = if p.y == e.y_min || p.y == e.y_max { p.y } else { p.y + (oy + vy) as f64 * res };
            Point::new(x, y)
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn confidence_and_probs(model: ConfidenceModel, class: MapClass, oracle_conf: f64, rng: &mut ChaCha8Rng) -> (f64, [f64; 3]) {
    match model {
        ConfidenceModel::Oracle => {
            let mut probs = [0.0; 3];
            probs[class.index()] = 1.0;
            (oracle_conf, probs)
        }
        ConfidenceModel::NoisyLogit => {
            let unit = Normal::new(0.0, 1.0).unwrap();
            let conf = sigmoid(2.5 + unit.sample(rng));
            let logits: Vec<f64> = MapClass::ALL
                .iter()
                .map(|c| if *c == class { 2.0 } else { 0.0 } + 0.5 * unit.sample(rng))
                .collect();
            let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = exps.iter().sum();
            let mut probs = [0.0; 3];
            for (p, e) in probs.iter_mut().zip(&exps) {
                *p = e / total;
            }
            // Push rounding error into the largest entry so the sum is 1.
            let fix = 1.0 - probs.iter().sum::<f64>();
            let argmax = (0..3).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap();
            probs[argmax] += fix;
            (conf, probs)
        }
    }
}

fn box_blur(mask: &Bitmap, r: usize) -> Bitmap {
    if r == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    let k = (2 * r + 1) as f32;
    let horiz = Bitmap::from_fn(w, h, |x, y| {
        let s: f32 = (x as i64 - r as i64..=x as i64 + r as i64)
            .filter(|&i| i >= 0 && (i as usize) < w)
            .map(|i| mask.get(i as usize, y))
            .sum();
        s / k
    });
    Bitmap::from_fn(w, h, |x, y| {
        let s: f32 = (y as i64 - r as i64..=y as i64 + r as i64)
            .filter(|&j| j >= 0 && (j as usize) < h)
            .map(|j| horiz.get(x, j as usize))
            .sum();
        // Blur only adds a soft halo; set cells stay set.
        (s / k).max(mask.get(x, y))
    })
}

fn rasterize_instance(class: MapClass, points: &[Point], scene: &Scene, cfg: &RasterConfig) -> Result<Bitmap> {
    Ok(match class {
        MapClass::PedCross => rasterize_polygon(points, &scene.grid)?.bitmap,
        _ => rasterize_polyline(points, &scene.grid, cfg.divider_width_px)?.bitmap,
    })
}

struct Emitter<'a> {
    spec: &'a PerturbSpec,
    cfg: &'a RasterConfig,
    out: Vec<Prediction>,
}

impl Emitter<'_> {
    fn emit(&mut self, class: MapClass, bitmap: Bitmap, oracle_conf: f64, rng: &mut ChaCha8Rng) {
        let (confidence, probs) = confidence_and_probs(self.spec.confidence_model, class, oracle_conf, rng);
        let mut bitmap = bitmap;
        if self.cfg.label_dilation.radius > 0 {
            bitmap = dilate(&bitmap, self.cfg.label_dilation);
        }
        bitmap = box_blur(&bitmap, self.spec.blur_radius);
        let mask = InstanceMask {
            class,
            bitmap,
            confidence,
        };
        self.out.push(Prediction::new(mask, probs, 0.0).expect("normalized probabilities"));
    }
}

/// Perturbed predictions for one scene. Output order mirrors
/// [`crate::raster::rasterize_scene`] (dividers and ped crossings in scene
/// order, then curb domains) followed by spurious instances. Each instance
/// draws from its own random stream derived from `(spec.seed, index)`.
pub fn perturb_scene(scene: &Scene, spec: &PerturbSpec, cfg: &RasterConfig) -> Result<Vec<Prediction>> {
    spec.validate()?;
    let sigma_px = spec.point_noise_sigma / scene.grid.resolution();
    let mut em = Emitter {
        spec,
        cfg,
        out: Vec::new(),
    };
    let n = scene.gt_vectors.len() as u64;
    let mut jittered_curbs = Vec::new();
    let mut curbs = Vec::new();
    for (k, inst) in scene.gt_vectors.iter().enumerate() {
        let mut rng = stream(spec.seed, k as u64 + 1);
        let drop = rng.random_bool(spec.drop_prob);
        let pts = jitter_points(&inst.points, &scene.grid, sigma_px, &mut rng, true);
        if inst.class == MapClass::Curb {
            curbs.push(inst.clone());
            jittered_curbs.push(VectorInstance { points: pts, ..inst.clone() });
            continue;
        }
        if drop {
            continue;
        }
        let bitmap = match rasterize_instance(inst.class, &pts, scene, cfg) {
            Ok(b) => b,
            Err(e) => {
                // Vertex jitter can fold thin polygons; keep the shared offset only.
                warn!("jittered instance {k} rejected ({e}); using offset only");
                let mut rng = stream(spec.seed, k as u64 + 1);
                rng.random_bool(spec.drop_prob);
                let pts = jitter_points(&inst.points, &scene.grid, sigma_px, &mut rng, false);
                rasterize_instance(inst.class, &pts, scene, cfg)?
            }
        };
        em.emit(inst.class, bitmap, 1.0, &mut rng);
    }
    let domains = match gen_curb_masks(&jittered_curbs, &scene.grid, scene.ego) {
        Ok(d) => d,
        Err(Error::EgoOnCurb { .. }) => {
            warn!("jittered curbs cover the ego pixel; using unperturbed curbs");
            gen_curb_masks(&curbs, &scene.grid, scene.ego)?
        }
        Err(e) => return Err(e),
    };
    for (k, d) in domains.into_iter().enumerate() {
        let mut rng = stream(spec.seed, n + 1 + k as u64);
        if rng.random_bool(spec.drop_prob) {
            continue;
        }
        em.emit(MapClass::Curb, d.bitmap, 1.0, &mut rng);
    }
    if spec.spurious_rate > 0.0 {
        let mut rng = stream(spec.seed, 0);
        let count = Poisson::new(spec.spurious_rate).unwrap().sample(&mut rng) as usize;
        let ext = scene.grid.extent();
        for _ in 0..count {
            let class = MapClass::ALL[rng.random_range(0..3)];
            let start = Point::new(
                rng.random_range(ext.x_min..ext.x_max),
                rng.random_range(ext.y_min..ext.y_max),
            );
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let len = rng.random_range(1.0..4.0);
            let end = start + Point::new(angle.cos(), angle.sin()) * len;
            let bitmap = rasterize_polyline(&[start, end], &scene.grid, 1)?.bitmap;
            em.emit(class, bitmap, SPURIOUS_CONFIDENCE, &mut rng);
        }
    }
    Ok(em.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::rasterize_scene;

    fn scene() -> Scene {
        let v = |class, pts: &[(f64, f64)], closed| {
            VectorInstance::new(class, pts.iter().map(|&(x, y)| Point::new(x, y)).collect(), closed, 1.0).unwrap()
        };
        Scene::new(
            GridSpec::default(),
            vec![
                v(MapClass::Divider, &[(1.75, -30.0), (1.75, 30.0)], false),
                v(MapClass::PedCross, &[(-8.0, 10.0), (8.0, 10.0), (8.0, 14.0), (-8.0, 14.0)], true),
                v(MapClass::Curb, &[(-8.0, -30.0), (-8.0, 30.0)], false),
                v(MapClass::Curb, &[(8.0, -30.0), (8.5, 30.0)], false),
            ],
            Point::new(0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn identity_spec_reproduces_rasterization() {
        let cfg = RasterConfig::default();
        let gt = rasterize_scene(&scene(), &cfg).unwrap();
        let preds = perturb_scene(&scene(), &PerturbSpec::default(), &cfg).unwrap();
        assert_eq!(preds.len(), gt.len());
        for (p, g) in preds.iter().zip(&gt) {
            assert_eq!(p.mask, *g);
            let mut one_hot = [0.0; 3];
            one_hot[g.class.index()] = 1.0;
            assert_eq!(p.class_probs, one_hot);
        }
    }

    #[test]
    fn full_drop_leaves_only_spurious() {
        let spec = PerturbSpec {
            drop_prob: 1.0,
            spurious_rate: 3.0,
            seed: 7,
            ..Default::default()
        };
        let preds = perturb_scene(&scene(), &spec, &RasterConfig::default()).unwrap();
        assert!(preds.iter().all(|p| p.mask.confidence == SPURIOUS_CONFIDENCE));
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let spec = PerturbSpec {
            seed: 42,
            point_noise_sigma: 0.3,
            spurious_rate: 1.0,
            blur_radius: 1,
            confidence_model: ConfidenceModel::NoisyLogit,
            ..Default::default()
        };
        let a = perturb_scene(&scene(), &spec, &RasterConfig::default()).unwrap();
        let b = perturb_scene(&scene(), &spec, &RasterConfig::default()).unwrap();
        assert_eq!(a, b);
        let c = perturb_scene(&scene(), &spec.for_scene(1), &RasterConfig::default()).unwrap();
        assert_ne!(a, c);
        for p in &a {
            assert!((p.class_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.mask.confidence > 0.0 && p.mask.confidence < 1.0);
        }
    }

    #[test]
    fn blur_keeps_the_binary_core() {
        let m = Bitmap::from_fn(9, 9, |x, y| if x == 4 && (2..7).contains(&y) { 1.0 } else { 0.0 });
        let b = box_blur(&m, 1);
        assert_eq!(b.binarize(), m);
        assert!(b.get(3, 4) > 0.0 && b.get(3, 4) < 0.5);
    }
}
