//! File formats, configuration, synthetic data and SVG export.

pub mod config;
pub mod masks;
pub mod scene_file;
pub mod svg;
pub mod synth;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::RunConfig;
pub use masks::{read_masks, read_predictions, write_masks, write_predictions, MaskFormat};
pub use scene_file::{load_scene, parse_scene, save_scene, scene_to_json};
pub use svg::scene_to_svg;
pub use synth::{gen_synthetic, validate_scene, Difficulty};

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
