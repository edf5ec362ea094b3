use std::path::PathBuf;

use crate::config::Violation;

/// Errors produced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration failed validation: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("unmappable block: {0}")]
    UnmappableBlock(String),

    #[error("candidate set too large: p = {0} exceeds 24 bits")]
    CandidateSetTooLarge(usize),

    #[error("singular channel entry at component {component}, subcarrier {subcarrier}")]
    SingularChannel { component: usize, subcarrier: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad magic")]
    BadMagic,

    #[error("version mismatch: file has version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated checkpoint: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
