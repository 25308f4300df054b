//! Raster/vector toolkit for HD-map elements.
//!
//! Vector annotations become per-instance masks ([`raster`]), predicted
//! masks are paired with ground truth through a dilation-augmented cost
//! ([`matcher`]), masks are traced back into vectors ([`trace`],
//! [`postprocess`]) and everything is scored with IoU, Chamfer distance and
//! CD-thresholded AP ([`metrics`]).

pub mod error;
pub mod geom;
pub mod io;
pub mod matcher;
pub mod metrics;
pub mod perturb;
pub mod pipeline;
pub mod postprocess;
pub mod raster;
pub mod trace;
pub mod types;

pub use error::{Error, Result};
pub use geom::Point;
pub use io::RunConfig;
pub use matcher::{assign, cost_matrix, Assignment, CostMatrix, CostWeights, Prediction};
pub use metrics::{chamfer, evaluate, EvalConfig, EvalReport};
pub use perturb::{perturb_scene, PerturbSpec};
pub use postprocess::{vectorize, PostprocessConfig};
pub use raster::{rasterize_scene, DilationSpec, RasterConfig};
pub use trace::{trace, TraceConfig};
pub use types::{Bitmap, GridSpec, InstanceMask, MapClass, Pixel, Scene, VectorInstance};
