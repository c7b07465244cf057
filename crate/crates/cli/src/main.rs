use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use dbmatch::harness::{
    emit_report, estimate_all, run_sweep, write_gnuplot, HarnessError, ReportFormat, SweepConfig,
};
use dbmatch::matcher::{
    map_match, random_match, typicality_match, MatchError, MatchResult, MatcherKind, TypicalityConfig,
    DEFAULT_EPSILON, DEFAULT_ORACLE_CAP,
};
use dbmatch::process::{JointProcessSpec, ModelError, ProcessModel};
use dbmatch::store::{
    export_csv, generate_correlated_pair, load_attacker_view, load_pair, save_pair, GenerateOptions, StoreError, MAGIC,
};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Correlated database generation, typicality matching and threshold sweeps.
#[derive(Parser, Debug)]
#[command(name = "dbmatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the entropy rates and mutual information of a spec.
    Mi {
        spec: PathBuf,
        /// Estimate by simulation instead of the analytic formulas.
        #[arg(long)]
        monte_carlo: bool,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a correlated database pair and save it as a pair file.
    Generate {
        spec: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also export both databases as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Include DB2's true labels in the CSV export.
        #[arg(long, requires = "csv")]
        csv_truth: bool,
    },
    /// Reconstruct DB2's labeling from a pair file.
    Match {
        pair: PathBuf,
        #[arg(long, default_value = "typicality")]
        matcher: MatcherKind,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Also require marginal typicality.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
        /// Read the withheld truth labels and report the success fraction.
        #[arg(long)]
        score: bool,
        /// Include per-entry outcomes when scoring.
        #[arg(long)]
        verbose: bool,
        /// Write the result here as well as to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep config and write its report.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Worker threads; 0 uses every core. Does not change the output.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Also write a gnuplot data file of mean success against R.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Check a spec file or a pair file.
    Validate { file: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn line(&self) -> String {
        let (kind, message) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        format!("error: {kind}: {}", message.replace(['\n', '\r'], " "))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonConvergence { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Model(inner) => inner.into(),
            StoreError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MatchError> for CliError {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::Model(inner) => inner.into(),
            MatchError::Store(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Model(inner) => inner.into(),
            HarnessError::Io { .. } | HarnessError::Pool(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<ProcessModel, CliError> {
    let bytes = read_input(path)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Validation(format!("{}: not UTF-8", path.display())))?;
    let spec = JointProcessSpec::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(ProcessModel::new(spec)?)
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n"
}

fn run(command: Command, invocation: &[String]) -> Result<Value, CliError> {
    match command {
        Command::Mi {
            spec,
            monte_carlo,
            m,
            trials,
            seed,
        } => {
            let model = load_spec(&spec)?;
            let report = if monte_carlo {
                model.estimate_entropy_rates(m, trials, seed)?
            } else {
                model.entropy_rates()?
            };
            Ok(json!({ "invocation": invocation, "spec_id": model.id(), "entropy": report }))
        }
        Command::Generate {
            spec,
            m,
            n,
            seed,
            out,
            csv,
            csv_truth,
        } => {
            let model = load_spec(&spec)?;
            let pair = generate_correlated_pair(&model, m, n, seed, &GenerateOptions::default())?;
            save_pair(&pair, &out)?;
            if let Some(csv) = &csv {
                export_csv(&pair, csv, csv_truth)?;
            }
            Ok(json!({
                "invocation": invocation,
                "spec_id": model.id(),
                "m": m,
                "n": n,
                "seed": seed,
                "out": out,
            }))
        }
        Command::Match {
            pair,
            matcher,
            epsilon,
            strict,
            seed,
            oracle_cap,
            score,
            verbose,
            out,
        } => {
            // Without --score the truth labels are never read into memory.
            let (view, truth) = if score {
                let pair = load_pair(&pair)?;
                let truth = pair.db2.theta().to_vec();
                let view = dbmatch::store::AttackerView {
                    db2: pair.db2.into_parts().0,
                    db1: pair.db1,
                    spec: pair.spec,
                    seed: pair.seed,
                };
                (view, Some(truth))
            } else {
                (load_attacker_view(&pair)?, None)
            };
            let model = ProcessModel::new(view.spec.clone())?;
            let mut result: MatchResult = match matcher {
                MatcherKind::Typicality => {
                    typicality_match(&view.db1, &view.db2, &model, TypicalityConfig { epsilon, strict }, seed)?
                }
                MatcherKind::MapOracle => map_match(&view.db1, &view.db2, &model, oracle_cap)?,
                MatcherKind::Random => random_match(view.db2.n(), seed),
            };
            if let Some(truth) = &truth {
                result.score(truth)?;
            }
            let value = json!({
                "invocation": invocation,
                "spec_id": model.id(),
                "ambiguity_fraction": result.ambiguity_fraction(),
                "result": result.to_json(verbose),
            });
            if let Some(out) = &out {
                write_output(out, &pretty(&value))?;
            }
            Ok(value)
        }
        Command::Sweep {
            config,
            out,
            format,
            workers,
            gnuplot,
        } => {
            let bytes = read_input(&config)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| CliError::Validation(format!("{}: not UTF-8", config.display())))?;
            let config = SweepConfig::from_json(&text)?;
            let table = run_sweep(&config, workers)?;
            let model = ProcessModel::new(config.spec.clone())?;
            let estimates = estimate_all(&table, model.entropy_rates()?.mi);
            emit_report(&table, &estimates, Some(&config), &out, format)?;
            if let Some(path) = &gnuplot {
                write_gnuplot(&table, path)?;
            }
            let errors = table.rows.iter().filter(|r| r.error.is_some()).count();
            Ok(json!({
                "invocation": invocation,
                "rows": table.rows.len(),
                "error_rows": errors,
                "out": out,
                "thresholds": estimates,
            }))
        }
        Command::Validate { file } => {
            let bytes = read_input(&file)?;
            if bytes.starts_with(MAGIC) {
                let pair = load_pair(&file)?;
                let model = ProcessModel::new(pair.spec.clone())?;
                Ok(json!({
                    "invocation": invocation,
                    "kind": "pair",
                    "spec_id": model.id(),
                    "m": pair.m(),
                    "n": pair.n(),
                    "seed": pair.seed,
                    "valid": true,
                }))
            } else {
                let model = load_spec(&file)?;
                model.entropy_rates()?;
                Ok(json!({
                    "invocation": invocation,
                    "kind": "spec",
                    "spec_id": model.id(),
                    "valid": true,
                }))
            }
        }
    }
}

fn main() -> ExitCode {
    let invocation: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&invocation) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let reason = e.kind().to_string();
            eprint!("{e}");
            eprintln!("error: usage: {}", reason.replace('\n', " "));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    // argv[0] varies between installs and is not part of the replayable echo
    match run(cli.command, &invocation[1..]) {
        Ok(value) => {
            print!("{}", pretty(&value));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.code())
        }
    }
}
