use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VganError {
    #[error("shape mismatch: {left:?} vs {right:?} in {ctx}")]
    ShapeMismatch {
        left: Vec<usize>,
        right: Vec<usize>,
        ctx: &'static str,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("nifti error in {path:?}: {msg}")]
    Nifti { path: PathBuf, msg: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VganError>;
