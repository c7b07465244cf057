//! Reconstructing DB2's labeling from DB1 and DB2's entries.
//!
//! [`typicality_match`] is the joint-typicality scheme with an ambiguity set
//! filled at random; [`map_match`] is the exact maximum-likelihood bijection
//! used as a baseline; [`random_match`] is the chance baseline.

mod assignment;
mod typicality;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::process::{ModelError, ProcessModel, Side};
use crate::seed::rng_for;
use crate::store::{LabeledDatabase, StoreError, UnlabeledDatabase};

pub use assignment::{max_weight_assignment, WeightMatrix};
pub use typicality::{is_jointly_typical, typicality_match, TypicalityConfig, TypicalityTest, DEFAULT_EPSILON};

/// Largest database the MAP oracle accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 512;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("database shapes differ: DB1 is {n1}x{m1}, DB2 is {n2}x{m2}")]
    DimensionMismatch { n1: usize, m1: usize, n2: usize, m2: usize },
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("n = {n} exceeds the MAP oracle cap of {cap}; use the typicality matcher for databases this large")]
    OracleCap { n: usize, cap: usize },
    #[error("labeling length {got} does not match n = {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatcherKind {
    Typicality,
    #[serde(alias = "map")]
    MapOracle,
    Random,
}

impl MatcherKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatcherKind::Typicality => "typicality",
            MatcherKind::MapOracle => "map_oracle",
            MatcherKind::Random => "random",
        }
    }
}

impl std::fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MatcherKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "typicality" => Ok(MatcherKind::Typicality),
            "map_oracle" | "map" => Ok(MatcherKind::MapOracle),
            "random" => Ok(MatcherKind::Random),
            other => Err(format!("unknown matcher '{other}' (expected typicality, map_oracle or random)")),
        }
    }
}

/// A reconstructed labeling of DB2. `theta_hat[i]` is the member label
/// assigned to DB2 entry `i`; it is always a bijection on `[n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matcher_kind: MatcherKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub theta_hat: Vec<usize>,
    /// DB2 indices whose label was filled at random, ascending.
    pub ambiguity_set: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_entry_correct: Option<Vec<bool>>,
}

impl MatchResult {
    pub fn n(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn ambiguity_fraction(&self) -> f64 {
        self.ambiguity_set.len() as f64 / self.n() as f64
    }

    /// Scores against the true labeling and records the per-entry outcome.
    pub fn score(&mut self, truth_theta2: &[usize]) -> Result<f64, MatchError> {
        let (fraction, correct) = score_parts(truth_theta2, self)?;
        self.per_entry_correct = Some(correct);
        self.success_fraction = Some(fraction);
        Ok(fraction)
    }

    /// JSON form; `per_entry_correct` is included only when `verbose`.
    pub fn to_json(&self, verbose: bool) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("match result serialization is infallible");
        if !verbose {
            value.as_object_mut().unwrap().remove("per_entry_correct");
        }
        value
    }
}

fn score_parts(truth: &[usize], result: &MatchResult) -> Result<(f64, Vec<bool>), MatchError> {
    if truth.len() != result.n() {
        return Err(MatchError::LengthMismatch {
            expected: result.n(),
            got: truth.len(),
        });
    }
    let correct: Vec<bool> = truth.iter().zip(&result.theta_hat).map(|(t, h)| t == h).collect();
    let hits = correct.iter().filter(|&&c| c).count();
    Ok((hits as f64 / truth.len() as f64, correct))
}

/// Fraction of DB2 entries whose reconstructed label equals the true one.
pub fn success_fraction(truth_theta2: &[usize], result: &MatchResult) -> Result<f64, MatchError> {
    score_parts(truth_theta2, result).map(|(f, _)| f)
}

pub(crate) fn check_shapes(db1: &LabeledDatabase, db2: &UnlabeledDatabase, model: &ProcessModel) -> Result<(), MatchError> {
    let a = db1.base();
    if a.n() != db2.n() || a.m() != db2.m() {
        return Err(MatchError::DimensionMismatch {
            n1: a.n(),
            m1: a.m(),
            n2: db2.n(),
            m2: db2.m(),
        });
    }
    a.check_against(model, Side::First)?;
    db2.check_against(model, Side::Second)?;
    Ok(())
}

/// Pairwise log2 joint densities: row = DB2 index, column = DB1 index.
pub fn log_density_matrix(db1: &LabeledDatabase, db2: &UnlabeledDatabase, model: &ProcessModel) -> WeightMatrix {
    let n = db2.n();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|row| {
            let u2 = db2.entry(row);
            (0..n).map(move |col| model.log_joint_unchecked(db1.base().entry(col), u2))
        })
        .collect();
    WeightMatrix::new(n, values)
}

/// Exact maximum-likelihood bijection, solved as a maximum-weight
/// assignment on the matrix of pairwise log joint densities.
pub fn map_match(
    db1: &LabeledDatabase,
    db2: &UnlabeledDatabase,
    model: &ProcessModel,
    oracle_cap: usize,
) -> Result<MatchResult, MatchError> {
    check_shapes(db1, db2, model)?;
    let n = db2.n();
    if n > oracle_cap {
        return Err(MatchError::OracleCap { n, cap: oracle_cap });
    }
    let weights = log_density_matrix(db1, db2, model).with_finite_floor();
    let assignment = max_weight_assignment(&weights);
    Ok(MatchResult {
        matcher_kind: MatcherKind::MapOracle,
        epsilon: None,
        theta_hat: assignment.iter().map(|&i| db1.theta()[i]).collect(),
        ambiguity_set: Vec::new(),
        success_fraction: None,
        per_entry_correct: None,
    })
}

/// Uniformly random labeling; every index counts as ambiguous.
pub fn random_match(n: usize, seed: u64) -> MatchResult {
    let mut theta_hat: Vec<usize> = (0..n).collect();
    theta_hat.shuffle(&mut rng_for(seed, "random_matcher", 0));
    MatchResult {
        matcher_kind: MatcherKind::Random,
        epsilon: None,
        theta_hat,
        ambiguity_set: (0..n).collect(),
        success_fraction: None,
        per_entry_correct: None,
    }
}
