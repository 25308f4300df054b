//! Self-describing JSON scene files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "grid": {"x_min": -15.0, "x_max": 15.0, "y_min": -30.0, "y_max": 30.0, "resolution": 0.15},
//!   "ego": [0.0, 0.0],
//!   "instances": [
//!     {"class": "divider", "points": [[1.75, -30.0], [1.75, 30.0]], "closed": false, "confidence": 1.0}
//!   ]
//! }
//! ```

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::types::{GridSpec, MapClass, Scene, VectorInstance};

use super::write_atomic;

pub const SCENE_VERSION: u32 = 1;

const TOP_KEYS: &[&str] = &["version", "grid", "ego", "instances"];
const GRID_KEYS: &[&str] = &["x_min", "x_max", "y_min", "y_max", "resolution"];
const INSTANCE_KEYS: &[&str] = &["class", "points", "closed", "confidence"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub class: String,
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    #[serde(default = "one")]
    pub confidence: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub version: u32,
    pub grid: GridSpec,
    #[serde(default)]
    pub ego: [f64; 2],
    pub instances: Vec<InstanceRecord>,
}

/// Rounds to six decimals, folding negative zero.
pub fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl SceneFile {
    pub fn from_scene(scene: &Scene) -> Self {
        let instances = scene
            .gt_vectors
            .iter()
            .map(|v| InstanceRecord {
                class: v.class.as_str().to_string(),
                points: v.points.iter().map(|p| [round6(p.x), round6(p.y)]).collect(),
                closed: v.closed,
                confidence: round6(v.confidence),
            })
            .collect();
        Self {
            version: SCENE_VERSION,
            grid: scene.grid,
            ego: [round6(scene.ego.x), round6(scene.ego.y)],
            instances,
        }
    }

    pub fn into_scene(self, path: &Path) -> Result<Scene> {
        let mut out = Vec::with_capacity(self.instances.len());
        for (k, rec) in self.instances.into_iter().enumerate() {
            let class: MapClass = rec.class.parse()?;
            let points = rec.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
            let v = VectorInstance::new(class, points, rec.closed, rec.confidence).map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                message: format!("instance {k}: {e}"),
            })?;
            out.push(v);
        }
        Scene::new(self.grid, out, Point::new(self.ego[0], self.ego[1]))
    }
}

fn check_keys(value: &Value, allowed: &[&str], context: &str, strict: bool, path: &Path) -> Result<()> {
    let Some(obj) = value.as_object() else {
        return Ok(());
    };
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            let message = format!("unknown key {key:?} in {context}");
            if strict {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    message,
                });
            }
            warn!("{}: {message}", path.display());
        }
    }
    Ok(())
}

/// Parses a scene document. Unknown keys are errors when `strict`,
/// warnings otherwise.
pub fn parse_scene(text: &str, path: &Path, strict: bool) -> Result<Scene> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    check_keys(&value, TOP_KEYS, "scene", strict, path)?;
    check_keys(&value["grid"], GRID_KEYS, "grid", strict, path)?;
    if let Some(list) = value["instances"].as_array() {
        for (k, inst) in list.iter().enumerate() {
            check_keys(inst, INSTANCE_KEYS, &format!("instance {k}"), strict, path)?;
        }
    }
    // Unknown class strings get their own error, ahead of generic schema
    // failures.
    if let Some(list) = value["instances"].as_array() {
        for inst in list {
            if let Some(c) = inst["class"].as_str() {
                c.parse::<MapClass>()?;
            }
        }
    }
    let file: SceneFile = serde_json::from_value(value).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if file.version != SCENE_VERSION {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("unsupported version {}", file.version),
        });
    }
    file.into_scene(path)
}

pub fn load_scene(path: &Path, strict: bool) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text, path, strict)
}

pub fn scene_to_json(scene: &Scene) -> String {
    let mut s = serde_json::to_string_pretty(&SceneFile::from_scene(scene)).expect("scene serializes");
    s.push('\n');
    s
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<()> {
    write_atomic(path, scene_to_json(scene).as_bytes())
}
