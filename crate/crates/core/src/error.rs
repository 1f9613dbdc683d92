//! Error type shared by all reconstruction stages.

use std::path::PathBuf;

/// Errors produced by mesh I/O, reconstruction, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at {location}: {message}")]
    Parse {
        path: PathBuf,
        /// Line number for text formats, byte offset for binary formats.
        location: String,
        message: String,
    },

    #[error("face {face} references vertex {index} but mesh has {vertex_count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point cloud too small: {count} points, need at least {min}")]
    TooFewPoints { count: usize, min: usize },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    CgDidNotConverge { iterations: usize, residual: f64 },

    #[error("level set is empty: no grid cell crosses iso value {iso}")]
    EmptyLevelSet { iso: f64 },

    #[error("non-finite loss at iteration {iteration}, view {view}")]
    NanLoss { iteration: usize, view: usize },

    #[error("frame {frame}: {message}")]
    Frame { frame: usize, message: String },

    #[error("mesh has zero surface area")]
    ZeroAreaMesh,

    #[error("embedding has zero norm for image {index}")]
    ZeroNormEmbedding { index: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, location: impl ToString, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            location: location.to_string(),
            message: message.to_string(),
        }
    }

    pub fn frame(frame: usize, message: impl ToString) -> Self {
        Error::Frame {
            frame,
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
