use serde::{Deserialize, Serialize};

use super::sweep::{summarize, SweepTable};
use super::HarnessError;
use crate::matcher::MatcherKind;

/// Largest tolerated rise of mean success between two grid points (as R
/// grows) before the estimate carries a warning.
pub const MAX_WIGGLE: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStatus {
    /// Mean success crosses 0.5 inside the grid.
    Crossing,
    /// Mean success stays at or above 0.5: the threshold lies above the largest R.
    AboveRange,
    /// Mean success starts below 0.5: the threshold lies below the smallest R.
    BelowRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub m: usize,
    pub matcher: MatcherKind,
    pub epsilon: Option<f64>,
    pub status: ThresholdStatus,
    pub method: String,
    /// Interpolated 0.5 crossing; absent when the threshold is out of range.
    pub r_star: Option<f64>,
    /// Adjacent grid rates bracketing the crossing.
    pub band: Option<(f64, f64)>,
    pub analytic_mi: f64,
    /// (R, mean success) per grid point, ascending in R.
    pub grid: Vec<(f64, f64)>,
    pub warning: Option<String>,
}

impl ThresholdEstimate {
    pub fn band_width(&self) -> Option<f64> {
        self.band.map(|(lo, hi)| hi - lo)
    }
}

/// Estimates the rate at which mean success falls through 0.5, by linear
/// interpolation between the grid rates on either side of the first
/// downward crossing.
pub fn estimate_threshold(
    table: &SweepTable,
    m: usize,
    epsilon: Option<f64>,
    matcher: MatcherKind,
    analytic_mi: f64,
) -> Result<ThresholdEstimate, HarnessError> {
    let mut grid: Vec<(f64, f64)> = summarize(table)
        .into_iter()
        .filter(|s| s.m == m && s.matcher == matcher && s.epsilon == epsilon)
        .map(|s| (s.r, s.mean_success))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    if grid.len() < 3 {
        return Err(HarnessError::InsufficientGrid { found: grid.len() });
    }

    let mut rise: f64 = 0.0;
    let mut low_so_far = f64::INFINITY;
    for &(_, mean) in &grid {
        rise = rise.max(mean - low_so_far);
        low_so_far = low_so_far.min(mean);
    }
    let warning = (rise > MAX_WIGGLE)
        .then(|| format!("mean success is not monotone in R (rises by {rise:.3} > {MAX_WIGGLE})"));

    let crossing = grid.windows(2).find(|w| w[0].1 >= 0.5 && w[1].1 < 0.5);
    let (status, r_star, band) = match crossing {
        Some(w) => {
            let ((r0, s0), (r1, s1)) = (w[0], w[1]);
            let r_star = r0 + (s0 - 0.5) / (s0 - s1) * (r1 - r0);
            (ThresholdStatus::Crossing, Some(r_star), Some((r0, r1)))
        }
        None if grid[0].1 < 0.5 => (ThresholdStatus::BelowRange, None, None),
        None => (ThresholdStatus::AboveRange, None, None),
    };
    Ok(ThresholdEstimate {
        m,
        matcher,
        epsilon,
        status,
        method: "midpoint_crossing".into(),
        r_star,
        band,
        analytic_mi,
        grid,
        warning,
    })
}

/// Estimates for every (m, matcher, epsilon) group with at least three grid
/// rates.
pub fn estimate_all(table: &SweepTable, analytic_mi: f64) -> Vec<ThresholdEstimate> {
    let mut keys: Vec<(usize, MatcherKind, Option<f64>)> =
        summarize(table).into_iter().map(|s| (s.m, s.matcher, s.epsilon)).collect();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(m, matcher, eps)| estimate_threshold(table, m, eps, matcher, analytic_mi).ok())
        .collect()
}
