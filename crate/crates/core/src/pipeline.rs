//! End-to-end compositions: vectors to masks to vectors, and scoring the
//! result against the source.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::RunConfig;
use crate::metrics::{chamfer, EvalConfig, EvalScene, SceneVectors};
use crate::postprocess::vectorize;
use crate::raster::rasterize_scene;
use crate::types::{InstanceMask, MapClass, Scene, VectorInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFidelity {
    pub index: usize,
    pub class: MapClass,
    /// Chamfer distance to the closest output of the same class, if any.
    pub cd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub instances: Vec<InstanceFidelity>,
    pub outputs: Vec<VectorInstance>,
}

/// Rasterizes a scene, vectorizes the masks and keeps the masks for IoU.
pub fn rasterize_and_vectorize(scene: &Scene, cfg: &RunConfig) -> Result<(Vec<InstanceMask>, Vec<VectorInstance>)> {
    let masks = rasterize_scene(scene, &cfg.raster)?;
    let out = vectorize(&masks, &scene.grid, &cfg.trace, &cfg.postprocess);
    Ok((masks, out))
}

/// Best same-class Chamfer distance for every source instance.
pub fn fidelity(source: &[VectorInstance], outputs: &[VectorInstance], eval: &EvalConfig) -> Vec<InstanceFidelity> {
    source
        .iter()
        .enumerate()
        .map(|(index, v)| InstanceFidelity {
            index,
            class: v.class,
            cd: outputs
                .iter()
                .filter(|o| o.class == v.class)
                .map(|o| chamfer(v, o, eval))
                .min_by(f64::total_cmp),
        })
        .collect()
}

pub fn roundtrip(scene: &Scene, cfg: &RunConfig) -> Result<RoundTrip> {
    let (_, outputs) = rasterize_and_vectorize(scene, cfg)?;
    Ok(RoundTrip {
        instances: fidelity(&scene.gt_vectors, &outputs, &cfg.eval),
        outputs,
    })
}

/// Evaluation input pairing a scene's ground truth with predictions.
pub fn eval_scene(
    scene: &Scene,
    preds: Vec<VectorInstance>,
    gt_masks: Option<Vec<InstanceMask>>,
    pred_masks: Option<Vec<InstanceMask>>,
) -> EvalScene {
    EvalScene {
        vectors: SceneVectors {
            gts: scene.gt_vectors.clone(),
            preds,
        },
        gt_masks,
        pred_masks,
    }
}
