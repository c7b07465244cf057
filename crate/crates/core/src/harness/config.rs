use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::matcher::{MatcherKind, DEFAULT_ORACLE_CAP};
use crate::process::{JointProcessSpec, ProcessModel};

fn default_oracle_cap() -> usize {
    DEFAULT_ORACLE_CAP
}

/// A sweep over a grid of entry lengths and database sizes. The size axis is
/// given either as `n_values` or as rates `r_values`; each rate R becomes
/// `n = ceil(2^(m R))` at load time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub spec: JointProcessSpec,
    pub m_values: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(default, alias = "R_values", skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<f64>>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    pub matchers: Vec<MatcherKind>,
    pub trials_per_cell: usize,
    pub root_seed: u64,
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
    /// Strict typicality: also require marginal typicality.
    #[serde(default)]
    pub strict: bool,
    /// Fill the wall_time column. Off by default so reports are byte-stable.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Per-database value cap; falls back to the environment override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_values: Option<u64>,
}

/// The size axis after validation.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepGrid {
    Sizes(Vec<usize>),
    Rates(Vec<f64>),
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: SweepConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<SweepGrid, HarnessError> {
        match (&self.n_values, &self.r_values) {
            (Some(n), None) => Ok(SweepGrid::Sizes(n.clone())),
            (None, Some(r)) => Ok(SweepGrid::Rates(r.clone())),
            _ => Err(HarnessError::Config("give exactly one of n_values and r_values".into())),
        }
    }

    /// Checks the config and builds its process model.
    pub fn validate(&self) -> Result<ProcessModel, HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let model = ProcessModel::new(self.spec.clone())?;
        if self.trials_per_cell == 0 {
            return bad("trials_per_cell must be at least 1".into());
        }
        if self.m_values.is_empty() {
            return bad("m_values is empty".into());
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m < model.min_length()) {
            return bad(format!("m = {m} is below the spec's minimum length {}", model.min_length()));
        }
        match self.grid()? {
            SweepGrid::Sizes(n) => {
                if n.is_empty() {
                    return bad("n_values is empty".into());
                }
                if let Some(v) = n.iter().find(|&&v| v < 2) {
                    return bad(format!("n = {v} gives R = log2(n)/m <= 0; every n must be at least 2"));
                }
            }
            SweepGrid::Rates(r) => {
                if r.is_empty() {
                    return bad("r_values is empty".into());
                }
                if let Some(v) = r.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return bad(format!("R = {v} must be finite and positive"));
                }
            }
        }
        if self.matchers.is_empty() {
            return bad("matchers is empty".into());
        }
        if self.matchers.contains(&MatcherKind::Typicality) && self.epsilons.is_empty() {
            return bad("the typicality matcher needs at least one epsilon".into());
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return bad(format!("epsilon = {e} must be finite and positive"));
        }
        Ok(model)
    }
}
