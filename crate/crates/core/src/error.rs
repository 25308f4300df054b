use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("ego pixel ({col}, {row}) lies on a drawn curb")]
    EgoOnCurb { col: usize, row: usize },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("empty point set")]
    EmptyPointSet,

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("schema violation in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::Geometry(_) => "geometry",
            Error::EgoOnCurb { .. } => "ego_on_curb",
            Error::DimensionMismatch(..) => "dimension_mismatch",
            Error::EmptyPointSet => "empty_point_set",
            Error::UnknownClass(_) => "unknown_class",
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
