use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{SweepConfig, SweepGrid};
use super::HarnessError;
use crate::matcher::{map_match, random_match, typicality_match, MatchResult, MatcherKind, TypicalityConfig};
use crate::process::ProcessModel;
use crate::seed::derive_seed;
use crate::store::{generate_correlated_pair, max_values_from_env, CorrelatedPair, GenerateOptions};

pub const CSV_HEADER: [&str; 11] = [
    "spec_id",
    "m",
    "n",
    "R",
    "epsilon",
    "matcher",
    "trial_seed",
    "success_fraction",
    "ambiguity_fraction",
    "wall_time",
    "error",
];

/// One matcher run on one generated pair. Failed runs carry `error` and no
/// scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub spec_id: String,
    pub m: usize,
    pub n: Option<usize>,
    #[serde(rename = "R")]
    pub r: f64,
    pub epsilon: Option<f64>,
    pub matcher: MatcherKind,
    pub trial_seed: Option<u64>,
    pub success_fraction: Option<f64>,
    pub ambiguity_fraction: Option<f64>,
    /// Seconds spent in the matcher.
    pub wall_time: Option<f64>,
    pub error: Option<String>,
}

/// A grid cell after the size axis has been resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub m: usize,
    pub n: Option<usize>,
    #[serde(rename = "R")]
    pub r: f64,
    /// The configured rate, when the grid was given in rates.
    #[serde(rename = "requested_R", skip_serializing_if = "Option::is_none")]
    pub requested_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<CellInfo>,
    pub rows: Vec<SweepRow>,
}

/// `ceil(2^(m R))` with a small tolerance so that exact powers of two survive
/// rounding, or `None` when that does not fit a 64-bit size.
fn size_for_rate(m: usize, r: f64) -> Option<usize> {
    let exponent = m as f64 * r;
    if exponent >= 62.0 {
        return None;
    }
    Some(((exponent.exp2() - 1e-9).ceil() as usize).max(2))
}

fn resolve_cells(config: &SweepConfig) -> Result<Vec<CellInfo>, HarnessError> {
    let grid = config.grid()?;
    let mut cells = Vec::new();
    for &m in &config.m_values {
        match &grid {
            SweepGrid::Sizes(sizes) => cells.extend(sizes.iter().map(|&n| CellInfo {
                m,
                n: Some(n),
                r: (n as f64).log2() / m as f64,
                requested_r: None,
                error: None,
            })),
            SweepGrid::Rates(rates) => cells.extend(rates.iter().map(|&r| match size_for_rate(m, r) {
                Some(n) => CellInfo {
                    m,
                    n: Some(n),
                    r: (n as f64).log2() / m as f64,
                    requested_r: Some(r),
                    error: None,
                },
                None => CellInfo {
                    m,
                    n: None,
                    r,
                    requested_r: Some(r),
                    error: Some(format!("n = 2^{} is not representable", m as f64 * r)),
                },
            })),
        }
    }
    Ok(cells)
}

/// The pair seed of a trial. It depends on the cell's (m, n) rather than its
/// grid position, so reordering or extending the grid keeps old trials.
pub(crate) fn trial_seed(root: u64, m: usize, n: usize, trial: usize) -> u64 {
    derive_seed(root, &format!("pair/m={m}/n={n}"), trial as u64)
}

/// (matcher, epsilon) slots per trial, in output order.
fn slots(config: &SweepConfig) -> Vec<(MatcherKind, Option<f64>)> {
    let mut out = Vec::new();
    for &kind in &config.matchers {
        if kind == MatcherKind::Typicality {
            out.extend(config.epsilons.iter().map(|&e| (kind, Some(e))));
        } else {
            out.push((kind, None));
        }
    }
    out
}

struct Job<'a> {
    cell: &'a CellInfo,
    trial: usize,
}

fn run_job(
    job: &Job<'_>,
    config: &SweepConfig,
    model: &ProcessModel,
    options: &GenerateOptions,
    slots: &[(MatcherKind, Option<f64>)],
) -> Vec<SweepRow> {
    let cell = job.cell;
    let row = |kind: MatcherKind, epsilon: Option<f64>, seed: Option<u64>| SweepRow {
        spec_id: model.id().to_string(),
        m: cell.m,
        n: cell.n,
        r: cell.r,
        epsilon,
        matcher: kind,
        trial_seed: seed,
        success_fraction: None,
        ambiguity_fraction: None,
        wall_time: None,
        error: None,
    };
    let failed = |message: &str, seed: Option<u64>| -> Vec<SweepRow> {
        slots
            .iter()
            .map(|&(kind, eps)| SweepRow {
                error: Some(message.to_string()),
                ..row(kind, eps, seed)
            })
            .collect()
    };

    let n = match (cell.n, &cell.error) {
        (Some(n), None) => n,
        (_, error) => return failed(error.as_deref().unwrap_or("cell has no size"), None),
    };
    let seed = trial_seed(config.root_seed, cell.m, n, job.trial);
    let pair: CorrelatedPair = match generate_correlated_pair(model, cell.m, n, seed, options) {
        Ok(pair) => pair,
        Err(e) => return failed(&e.to_string(), Some(seed)),
    };

    slots
        .iter()
        .map(|&(kind, epsilon)| {
            let start = Instant::now();
            let result: Result<MatchResult, String> = match kind {
                MatcherKind::Typicality => {
                    let tc = TypicalityConfig {
                        epsilon: epsilon.expect("typicality slots carry an epsilon"),
                        strict: config.strict,
                    };
                    typicality_match(&pair.db1, pair.db2.base(), model, tc, seed).map_err(|e| e.to_string())
                }
                MatcherKind::MapOracle => {
                    map_match(&pair.db1, pair.db2.base(), model, config.oracle_cap).map_err(|e| e.to_string())
                }
                MatcherKind::Random => Ok(random_match(n, seed)),
            };
            let elapsed = start.elapsed().as_secs_f64();
            let mut out = row(kind, epsilon, Some(seed));
            match result {
                Ok(mut r) => {
                    let fraction = r.score(pair.db2.theta()).expect("matcher output has length n");
                    out.success_fraction = Some(fraction);
                    out.ambiguity_fraction = Some(r.ambiguity_fraction());
                    out.wall_time = config.record_wall_time.then_some(elapsed);
                }
                Err(message) => out.error = Some(message),
            }
            out
        })
        .collect()
}

/// Runs every (cell, trial) of the sweep on a pool of `workers` threads (0
/// picks the default). Rows come out in grid order: m, then size, then
/// trial, then matcher and epsilon in config order, whatever the worker
/// count. Failures become error rows.
pub fn run_sweep(config: &SweepConfig, workers: usize) -> Result<SweepTable, HarnessError> {
    let model = config.validate()?;
    // resolve the rates once so every row agrees with the cell list
    model.entropy_rates()?;
    let cells = resolve_cells(config)?;
    let options = GenerateOptions {
        max_values: config.max_values.unwrap_or_else(max_values_from_env),
        identity_theta1: false,
    };
    let slots = slots(config);
    let jobs: Vec<Job<'_>> = cells
        .iter()
        .flat_map(|cell| (0..config.trials_per_cell).map(move |trial| Job { cell, trial }))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let per_job: Vec<Vec<SweepRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(job, config, &model, &options, &slots))
            .collect()
    });
    Ok(SweepTable {
        rows: per_job.into_iter().flatten().collect(),
        cells,
    })
}

/// Mean success over the successful trials of one (m, n, matcher, epsilon).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub matcher: MatcherKind,
    pub epsilon: Option<f64>,
    pub trials: usize,
    pub mean_success: f64,
    pub mean_ambiguity: f64,
}

/// Groups error-free rows by (m, n, matcher, epsilon), ordered by m, matcher,
/// epsilon and then n.
pub fn summarize(table: &SweepTable) -> Vec<CellSummary> {
    type Key = (usize, MatcherKind, u64, usize);
    let mut groups: BTreeMap<Key, (CellSummary, f64, f64)> = BTreeMap::new();
    for row in &table.rows {
        let (Some(n), Some(s), Some(a), None) = (row.n, row.success_fraction, row.ambiguity_fraction, &row.error) else {
            continue;
        };
        let key = (row.m, row.matcher, row.epsilon.map_or(0, f64::to_bits), n);
        let entry = groups.entry(key).or_insert_with(|| {
            (
                CellSummary {
                    m: row.m,
                    n,
                    r: row.r,
                    matcher: row.matcher,
                    epsilon: row.epsilon,
                    trials: 0,
                    mean_success: 0.0,
                    mean_ambiguity: 0.0,
                },
                0.0,
                0.0,
            )
        });
        entry.0.trials += 1;
        entry.1 += s;
        entry.2 += a;
    }
    groups
        .into_values()
        .map(|(mut summary, s, a)| {
            summary.mean_success = s / summary.trials as f64;
            summary.mean_ambiguity = a / summary.trials as f64;
            summary
        })
        .collect()
}
