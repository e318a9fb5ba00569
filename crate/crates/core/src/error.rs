use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("incompatible seam data: mismatch {mismatch:.3e} exceeds tolerance {tolerance:.3e}")]
    SeamMismatch { mismatch: f64, tolerance: f64 },
    #[error("bundle degree {m} has nonzero H^1; use cech_obstruction")]
    ObstructedDegree { m: i64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("series truncated too early: tail bound {tail_bound:.3e} above tolerance {tolerance:.3e}")]
    Truncation { tail_bound: f64, tolerance: f64 },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("unsupported form degree q = {0}; only (0,1)-forms are solved")]
    UnsupportedDegree(u32),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
