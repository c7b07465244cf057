//! Labeled and unlabeled databases, correlated pair generation, and the
//! on-disk pair format.

mod database;
mod pairfile;

use thiserror::Error;

use crate::process::ModelError;

pub use database::{
    generate_correlated_pair, max_values_from_env, CorrelatedPair, Entries, GenerateOptions, LabeledDatabase,
    UnlabeledDatabase, DEFAULT_MAX_VALUES, MAX_VALUES_ENV,
};
pub use pairfile::{
    export_csv, load_attacker_view, load_pair, save_pair, AttackerView, FORMAT_VERSION, MAGIC, TRUTH_MARKER,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid database: {0}")]
    Invalid(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("not a pair file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported pair file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("pair file is truncated")]
    Truncated,
    #[error("pair file checksum mismatch")]
    ChecksumMismatch,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
