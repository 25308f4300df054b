//! Seeded synthetic road scenes: a curved road bounded by two curbs, lane
//! dividers parallel to its center and ped crossings spanning it.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ring_self_intersects, Point};
use crate::perturb::derive_seed;
use crate::raster::gen_curb_masks;
use crate::types::{GridSpec, MapClass, Scene, VectorInstance};

pub const LANE_WIDTH: f64 = 3.5;
const STATION_STEP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    #[default]
    Easy,
    /// Stronger curvature, shortened dividers, skewed crossings and an
    /// optional side road whose curbs turn into the image edge.
    Hard,
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
        })
    }
}

impl FromStr for Difficulty {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "hard" => Ok(Difficulty::Hard),
            other => Err(Error::Config(format!("unknown difficulty {other:?}"))),
        }
    }
}

struct Road {
    amp: f64,
    omega: f64,
    phase: f64,
    left: f64,
    right: f64,
}

impl Road {
    /// Lateral position of the road center, zero at the ego row.
    fn center(&self, y: f64) -> f64 {
        self.amp * ((self.omega * y + self.phase).sin() - self.phase.sin())
    }

    fn offset_line(&self, d: f64, y0: f64, y1: f64) -> Vec<Point> {
        let n = ((y1 - y0) / STATION_STEP).ceil().max(1.0) as usize;
        (0..=n)
            .map(|k| {
                let y = y0 + (y1 - y0) * k as f64 / n as f64;
                Point::new(self.center(y) + d, y)
            })
            .collect()
    }
}

fn instance(class: MapClass, points: Vec<Point>, closed: bool) -> VectorInstance {
    VectorInstance::new(class, points, closed, 1.0).expect("generated instance is valid")
}

fn gen_scene(rng: &mut ChaCha8Rng, difficulty: Difficulty) -> Scene {
    let grid = GridSpec::default();
    let (y_lo, y_hi) = (grid.y_min(), grid.y_max());
    let hard = difficulty == Difficulty::Hard;
    let amp = if hard { rng.random_range(0.5..2.0) } else { rng.random_range(0.0..0.8) };
    let period = if hard { rng.random_range(50.0..90.0) } else { rng.random_range(90.0..160.0) };
    // Keep both curbs at least 2 m inside the lateral extent.
    let reach = grid.x_max().min(-grid.x_min()) - 2.0 - 2.0 * amp;
    let road = Road {
        amp,
        omega: TAU / period,
        phase: rng.random_range(0.0..TAU),
        left: rng.random_range(6.0..reach),
        right: rng.random_range(6.0..reach),
    };
    let mut out = Vec::new();

    let lanes = rng.random_range(1..=3usize);
    let first_lo = -road.left + 1.0;
    let first_hi = road.right - 1.0 - LANE_WIDTH * (lanes - 1) as f64;
    let first = rng.random_range(first_lo..first_hi);
    for i in 0..lanes {
        let d = first + LANE_WIDTH * i as f64;
        let (a, b) = if hard && rng.random_bool(0.5) {
            (rng.random_range(y_lo..-10.0), rng.random_range(10.0..y_hi))
        } else {
            (y_lo, y_hi)
        };
        out.push(instance(MapClass::Divider, road.offset_line(d, a, b), false));
    }

    let side_road = if hard && rng.random_bool(0.5) {
        let at = rng.random_range(-20.0..10.0);
        Some((at, at + rng.random_range(6.0..10.0)))
    } else {
        None
    };

    let crossings = rng.random_range(1..=2usize);
    let mut placed: Vec<(f64, f64)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < crossings && attempts < 100 {
        attempts += 1;
        let depth = rng.random_range(3.0..5.0);
        let y0 = rng.random_range(y_lo + 2.0..y_hi - 2.0 - depth);
        let y1 = y0 + depth;
        let clear = placed.iter().all(|&(a, b)| y0 > b + 5.0 || y1 < a - 5.0);
        let on_side_road = side_road.is_some_and(|(a, b)| y1 > a - 1.0 && y0 < b + 1.0);
        if !clear || on_side_road {
            continue;
        }
        placed.push((y0, y1));
        let ring = if hard {
            let skew = rng.random_range(-1.0..1.0);
            vec![
                Point::new(road.center(y0) - road.left + 0.5, y0 + skew),
                Point::new(road.center(y0) + road.right - 0.5, y0 - skew),
                Point::new(road.center(y1) + road.right - 0.5, y1 - skew),
                Point::new(road.center(y1) - road.left + 0.5, y1 + skew),
            ]
        } else {
            let c = road.center((y0 + y1) / 2.0);
            vec![
                Point::new(c - road.left + 0.5, y0),
                Point::new(c + road.right - 0.5, y0),
                Point::new(c + road.right - 0.5, y1),
                Point::new(c - road.left + 0.5, y1),
            ]
        };
        out.push(instance(MapClass::PedCross, ring, true));
    }

    out.push(instance(MapClass::Curb, road.offset_line(-road.left, y_lo, y_hi), false));
    match side_road {
        None => out.push(instance(MapClass::Curb, road.offset_line(road.right, y_lo, y_hi), false)),
        Some((a, b)) => {
            let mut lower = road.offset_line(road.right, y_lo, a);
            lower.push(Point::new(grid.x_max(), a));
            let mut upper = vec![Point::new(grid.x_max(), b)];
            upper.extend(road.offset_line(road.right, b, y_hi));
            out.push(instance(MapClass::Curb, lower, false));
            out.push(instance(MapClass::Curb, upper, false));
        }
    }
    Scene::new(grid, out, Point::new(0.0, 0.0)).expect("generated scene is valid")
}

/// `count` scenes drawn from independent streams of `seed`.
pub fn gen_synthetic(seed: u64, count: usize, difficulty: Difficulty) -> Vec<Scene> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            gen_scene(&mut rng, difficulty)
        })
        .collect()
}

/// Checks the invariants every consumer relies on: valid instances inside
/// the extent, simple ped-crossing rings, an ego inside the extent and off
/// every curb pixel.
pub fn validate_scene(scene: &Scene) -> Result<()> {
    let rect = scene.grid.extent();
    if !rect.contains(scene.ego) {
        return Err(Error::InvalidInstance(format!("ego {:?} outside the grid", scene.ego)));
    }
    for (k, v) in scene.gt_vectors.iter().enumerate() {
        if v.points.len() < 2 || !(0.0..=1.0).contains(&v.confidence) {
            return Err(Error::InvalidInstance(format!("instance {k} malformed")));
        }
        if let Some(p) = v.points.iter().find(|p| !rect.contains(**p)) {
            return Err(Error::InvalidInstance(format!("instance {k} point {p:?} outside the grid")));
        }
        if v.class == MapClass::PedCross {
            if !v.closed || v.points.len() < 3 {
                return Err(Error::InvalidInstance(format!("ped crossing {k} is not a ring")));
            }
            if ring_self_intersects(&v.points) {
                return Err(Error::Geometry(format!("ped crossing {k} self-intersects")));
            }
        }
    }
    let curbs: Vec<VectorInstance> = scene.of_class(MapClass::Curb).cloned().collect();
    gen_curb_masks(&curbs, &scene.grid, scene.ego)?;
    Ok(())
}
