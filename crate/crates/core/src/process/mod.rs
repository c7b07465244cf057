//! Joint stochastic processes that generate matching entry pairs.
//!
//! A [`JointProcessSpec`] is the serializable description; a [`ProcessModel`]
//! is the validated form with precomputed log tables and samplers. All
//! logarithms are base 2, so rates are in bits per symbol and compare
//! directly with a database growth rate `log2(n) / m`.

mod catalog;
mod entropy;
mod markov;
mod model;
mod sequence;
mod spec;

use thiserror::Error;

pub use catalog::{builtin_specs, markov_coupled_flips, BuiltinSpec};
pub use entropy::{EntropyMode, EntropyReport, RateErrors};
pub use markov::{
    advance_block_distribution, check_ergodic, stationarity_residual, stationary_block_distribution,
    POWER_ITERATION_CAP, POWER_ITERATION_TOLERANCE,
};
pub use model::ProcessModel;
pub use sequence::{SeqRef, Sequence, Side};
pub use spec::{BlockShape, JointProcessSpec, MAX_BLOCK_STATES, PMF_TOLERANCE, STATIONARITY_TOLERANCE};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sequence lengths differ ({len1} vs {len2})")]
    LengthMismatch { len1: usize, len2: usize },
    #[error("sequences must have length at least 1")]
    EmptySequence,
    #[error("length {m} is shorter than the Markov order {order}")]
    TooShort { m: usize, order: usize },
    #[error("symbol {symbol} on side {side} is outside the alphabet of size {alphabet}")]
    SymbolOutOfRange { side: u8, symbol: u32, alphabet: usize },
    #[error("value kind mismatch: this process expects {expected}")]
    KindMismatch { expected: &'static str },
    #[error("pair-block state space exceeds {cap} states")]
    StateSpaceTooLarge { cap: usize },
    #[error("stationary distribution power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("stationary distribution computation failed: {0}")]
    NotErgodic(String),
}
