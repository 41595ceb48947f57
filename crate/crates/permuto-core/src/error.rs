//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("lattice capacity overflow: {what} = {size} exceeds supported range")]
    CapacityOverflow { what: &'static str, size: usize },

    #[error("lattice level mismatch: expected level {expected}, got {got}")]
    LevelMismatch { expected: u32, got: u32 },

    #[error("nothing to splat: point cloud has no feature columns")]
    EmptyFeatures,

    #[error("backward already ran on this tape; call zero_grad first")]
    BackwardTwice,

    #[error("backward needs a scalar loss, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("all points carry the ignore label; loss is undefined")]
    AllIgnored,

    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
