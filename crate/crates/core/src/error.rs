use thiserror::Error;

use crate::model::{CellId, Point};

/// Errors raised by the localization pipeline and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({}, {}) lies outside the grid", .0.x, .0.y)]
    OutOfArea(Point),
    #[error("cell {0:?} is not part of the grid")]
    InvalidCell(CellId),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error("fingerprint has no usable cell")]
    EmptyFingerprint,
    #[error("statistics are not finalized")]
    NotFinalized,
    #[error("scan shares no access point with the fingerprint")]
    NoOverlap,
    #[error("cell {0:?} is below the minimum weight and cannot be queried")]
    UnusableCell(CellId),
}

impl Error {
    /// Stable identifier used in machine-readable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfArea(_) => "OutOfArea",
            Error::InvalidCell(_) => "InvalidCell",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InvalidScan(_) => "InvalidScan",
            Error::EmptyFingerprint => "EmptyFingerprint",
            Error::NotFinalized => "NotFinalized",
            Error::NoOverlap => "NoOverlap",
            Error::UnusableCell(_) => "UnusableCell",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
