//! Correlated database pairs, typicality matching and matchability-threshold
//! experiments.

pub mod process;
pub mod seed;
pub mod store;
pub mod matcher;
pub mod harness;
