//! Mask directories: one grayscale image per instance plus a `masks.json`
//! manifest. Images are stored north-up, so the first image row is the
//! grid's largest-y row.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::Prediction;
use crate::types::{Bitmap, GridSpec, InstanceMask, MapClass};

use super::write_atomic;

pub const MANIFEST: &str = "masks.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskFormat {
    #[default]
    Pgm,
    Png,
}

impl MaskFormat {
    fn extension(self) -> &'static str {
        match self {
            MaskFormat::Pgm => "pgm",
            MaskFormat::Png => "png",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub file: String,
    pub class: MapClass,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_probs: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskManifest {
    pub version: u32,
    pub grid: GridSpec,
    pub masks: Vec<MaskEntry>,
}

fn to_bytes(b: &Bitmap) -> Vec<u8> {
    let (w, h) = (b.width(), b.height());
    let mut out = Vec::with_capacity(w * h);
    for row in (0..h).rev() {
        for col in 0..w {
            out.push((b.get(col, row).clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

fn from_bytes(w: usize, h: usize, bytes: &[u8]) -> Bitmap {
    Bitmap::from_fn(w, h, |col, row| bytes[(h - 1 - row) * w + col] as f32 / 255.0)
}

pub fn encode_pgm(b: &Bitmap) -> Vec<u8> {
    let mut header = String::new();
    write!(header, "P5\n{} {}\n255\n", b.width(), b.height()).unwrap();
    let mut out = header.into_bytes();
    out.extend(to_bytes(b));
    out
}

pub fn decode_pgm(data: &[u8], path: &Path) -> Result<Bitmap> {
    let bad = |m: &str| Error::Parse {
        path: path.to_path_buf(),
        message: m.to_string(),
    };
    // Header: magic, width, height, maxval, separated by whitespace with
    // optional comments, then a single whitespace byte.
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < data.len() && (data[i].is_ascii_whitespace() || data[i] == b'#') {
            if data[i] == b'#' {
                while i < data.len() && data[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(bad("truncated PGM header"));
        }
        fields.push(std::str::from_utf8(&data[start..i]).map_err(|_| bad("non-ASCII PGM header"))?);
    }
    i += 1;
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM number"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    let body = data.get(i..i + w * h).ok_or_else(|| bad("truncated PGM data"))?;
    Ok(from_bytes(w, h, body))
}

pub fn encode_png(b: &Bitmap) -> Result<Vec<u8>> {
    let img = image::GrayImage::from_raw(b.width() as u32, b.height() as u32, to_bytes(b)).expect("buffer size matches");
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::Config(format!("png encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub fn decode_png(data: &[u8], path: &Path) -> Result<Bitmap> {
    let img = image::load_from_memory_with_format(data, image::ImageFormat::Png)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .to_luma8();
    Ok(from_bytes(img.width() as usize, img.height() as usize, img.as_raw()))
}

pub fn read_mask_image(path: &Path) -> Result<Bitmap> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => decode_png(&data, path),
        _ => decode_pgm(&data, path),
    }
}

pub fn write_mask_image(path: &Path, b: &Bitmap, format: MaskFormat) -> Result<()> {
    let bytes = match format {
        MaskFormat::Pgm => encode_pgm(b),
        MaskFormat::Png => encode_png(b)?,
    };
    write_atomic(path, &bytes)
}

/// Writes one image per mask and the manifest. `class_probs` entries are
/// recorded when given.
pub fn write_masks(
    dir: &Path,
    grid: &GridSpec,
    masks: &[InstanceMask],
    class_probs: Option<&[[f64; 3]]>,
    format: MaskFormat,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(masks.len());
    for (k, m) in masks.iter().enumerate() {
        let file = format!("mask_{k:03}_{}.{}", m.class, format.extension());
        write_mask_image(&dir.join(&file), &m.bitmap, format)?;
        entries.push(MaskEntry {
            file,
            class: m.class,
            confidence: m.confidence,
            class_probs: class_probs.map(|p| p[k]),
        });
    }
    let manifest = MaskManifest {
        version: 1,
        grid: *grid,
        masks: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join(MANIFEST), text.as_bytes())
}

pub fn write_predictions(dir: &Path, grid: &GridSpec, preds: &[Prediction], format: MaskFormat) -> Result<()> {
    let masks: Vec<InstanceMask> = preds.iter().map(|p| p.mask.clone()).collect();
    let probs: Vec<[f64; 3]> = preds.iter().map(|p| p.class_probs).collect();
    write_masks(dir, grid, &masks, Some(&probs), format)
}

/// Reads a mask directory back; every image must match the manifest grid.
pub fn read_masks(dir: &Path) -> Result<(GridSpec, Vec<InstanceMask>, Vec<Option<[f64; 3]>>)> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: MaskManifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let grid = manifest.grid;
    let mut masks = Vec::with_capacity(manifest.masks.len());
    let mut probs = Vec::with_capacity(manifest.masks.len());
    for e in manifest.masks {
        let file = dir.join(&e.file);
        let bitmap = read_mask_image(&file)?;
        if bitmap.width() != grid.width() || bitmap.height() != grid.height() {
            return Err(Error::DimensionMismatch(bitmap.width(), bitmap.height(), grid.width(), grid.height()));
        }
        if !(0.0..=1.0).contains(&e.confidence) {
            return Err(Error::Schema {
                path: path.clone(),
                message: format!("confidence {} outside [0, 1] for {}", e.confidence, e.file),
            });
        }
        masks.push(InstanceMask {
            class: e.class,
            bitmap,
            confidence: e.confidence,
        });
        probs.push(e.class_probs);
    }
    Ok((grid, masks, probs))
}

/// Predictions from a mask directory; masks without recorded class
/// probabilities get a one-hot distribution on their class.
pub fn read_predictions(dir: &Path) -> Result<(GridSpec, Vec<Prediction>)> {
    let (grid, masks, probs) = read_masks(dir)?;
    let preds = masks
        .into_iter()
        .zip(probs)
        .map(|(m, p)| match p {
            Some(p) => Prediction::new(m, p, (1.0 - p.iter().sum::<f64>()).max(0.0)),
            None => Ok(Prediction::one_hot(m)),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, preds))
}
