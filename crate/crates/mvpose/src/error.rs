//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternion norm below 1e-12, cannot normalize")]
    ZeroNormQuaternion,

    #[error("depth must be strictly positive (got {0})")]
    NonPositiveDepth(f64),

    #[error("a {ratio_w}:{ratio_h} superset of the bbox cannot fit inside {width}x{height}")]
    BBoxLargerThanImage {
        ratio_w: u32,
        ratio_h: u32,
        width: u32,
        height: u32,
    },

    #[error("bbox ({x:.1},{y:.1},{w:.1},{h:.1}) extends outside the {width}x{height} raster")]
    BBoxOutOfBounds {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        width: u32,
        height: u32,
    },

    #[error("mask has no set pixels")]
    EmptyMask,

    #[error("PLY parse error at line {line}: {message}")]
    PlyParse { line: usize, message: String },

    #[error("unsupported PLY element at line {line}: {message}")]
    UnsupportedElement { line: usize, message: String },

    #[error("raster parse error: {0}")]
    RasterParse(String),

    #[error("all mesh vertices are behind the camera")]
    ObjectBehindCamera,

    #[error("estimator requires a scene handle but none was provided")]
    MissingSceneHandle,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown estimator name {0:?} (expected \"oracle\", \"contraction\", or \"noisy-proportional\")")]
    UnknownEstimator(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
