//! Run configuration: one TOML or JSON file with a section per stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::MatcherConfig;
use crate::metrics::EvalConfig;
use crate::perturb::PerturbSpec;
use crate::postprocess::PostprocessConfig;
use crate::raster::RasterConfig;
use crate::trace::TraceConfig;
use crate::types::GridSpec;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub raster: RasterConfig,
    pub trace: TraceConfig,
    pub postprocess: PostprocessConfig,
    pub matcher: MatcherConfig,
    pub eval: EvalConfig,
    pub perturb: PerturbSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.postprocess.validate()?;
        self.matcher.weights.validate()?;
        self.eval.validate()?;
        self.perturb.validate()?;
        if self.raster.divider_width_px == 0 {
            return Err(Error::Config("divider_width_px must be at least 1".into()));
        }
        if !(self.trace.corner_threshold.is_finite() && self.trace.corner_threshold >= 0.0) {
            return Err(Error::Config("corner_threshold must be non-negative".into()));
        }
        Ok(())
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
