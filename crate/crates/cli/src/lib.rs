//! Experiment orchestration behind the `ocs` binary.
//!
//! Every subcommand reads its parameters from flags and, optionally, a JSON
//! manifest whose fields override the flags. Output is CSV or JSON on stdout
//! (or `--out`); logs and errors go to stderr.

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ocs::evcharge::SyntheticConfig;
use ocs::{Direction, OcsError};

pub mod commands;
pub mod stats;

pub use commands::{
    advice_sweep, cr_sweep_rows, evcharge_rows, run, AdviceCell, EvchargeRow, EvchargeSummary,
    SummaryCell,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Run one algorithm on an instance file.
    Solve,
    /// Offline optimum (or worst case, or grid brute force) of an instance file.
    Offline,
    /// Empirical competitive ratio over the adversarial families.
    CrSweep,
    /// Consistency and robustness of RO-Advice over random instances.
    AdviceSweep,
    /// EV-charging case study over sessions and traces.
    Evcharge,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Solve => "solve",
            Kind::Offline => "offline",
            Kind::CrSweep => "cr-sweep",
            Kind::AdviceSweep => "advice-sweep",
            Kind::Evcharge => "evcharge",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ocs",
    version,
    about = "Online conversion with switching costs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub kind: Option<Kind>,
    /// JSON manifest; its fields override the flags.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub flags: Flags,
}

/// Flags shared by all subcommands. Lists are comma separated.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    #[arg(long, global = true)]
    pub algorithm: Option<String>,
    #[arg(long, global = true)]
    pub advice: Option<PathBuf>,
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub beta: Option<Vec<f64>>,
    #[arg(long = "zeta-grid", global = true, value_delimiter = ',')]
    pub zeta_grid: Option<Vec<f64>>,
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub epsilon: Option<Vec<f64>>,
    /// Consistency slack as fractions of `ratio - 1`.
    #[arg(long = "epsilon-frac", global = true, value_delimiter = ',')]
    pub epsilon_frac: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long = "dc-rating", global = true, value_delimiter = ',')]
    pub dc_rating: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_direction)]
    pub direction: Option<Direction>,
    #[arg(long = "lower", global = true)]
    pub lower: Option<f64>,
    #[arg(long = "upper", global = true)]
    pub upper: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Number of random instances for advice sweeps.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// JSON array of instances for advice sweeps.
    #[arg(long, global = true)]
    pub instances: Option<PathBuf>,
    /// Offline method: lp, worst or brute.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Grid resolution for brute force.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub carbon: Option<PathBuf>,
    #[arg(long, global = true)]
    pub solar: Option<PathBuf>,
    #[arg(long, global = true)]
    pub sessions: Option<PathBuf>,
    /// Generate synthetic traces and sessions instead of reading CSVs.
    #[arg(long, global = true)]
    pub synthetic: bool,
    /// Number of synthetic sessions.
    #[arg(long = "synthetic-sessions", global = true)]
    pub synthetic_sessions: Option<usize>,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "min" | "minimize" => Ok(Direction::Minimize),
        "max" | "maximize" => Ok(Direction::Maximize),
        _ => Err(format!("unknown direction `{s}` (min or max)")),
    }
}

/// Resolved experiment parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub kind: Option<Kind>,
    pub instance: Option<PathBuf>,
    pub algorithm: Option<String>,
    pub advice: Option<PathBuf>,
    pub beta: Option<Vec<f64>>,
    pub zeta_grid: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
    pub epsilon_frac: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub dc_rating: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub direction: Option<Direction>,
    #[serde(rename = "L")]
    pub lower: Option<f64>,
    #[serde(rename = "U")]
    pub upper: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub points: Option<usize>,
    pub horizon: Option<usize>,
    pub count: Option<usize>,
    pub instances: Option<PathBuf>,
    pub method: Option<String>,
    pub grid: Option<usize>,
    pub carbon: Option<PathBuf>,
    pub solar: Option<PathBuf>,
    pub sessions: Option<PathBuf>,
    pub synthetic: Option<SyntheticConfig>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $(if $top.$f.is_some() { $base.$f = $top.$f; })*
    };
}

impl Manifest {
    pub fn from_flags(kind: Option<Kind>, f: Flags) -> Self {
        let synthetic = f.synthetic.then(|| SyntheticConfig {
            sessions: f
                .synthetic_sessions
                .unwrap_or(SyntheticConfig::default().sessions),
            ..SyntheticConfig::default()
        });
        Self {
            kind,
            instance: f.instance,
            algorithm: f.algorithm,
            advice: f.advice,
            beta: f.beta,
            zeta_grid: f.zeta_grid,
            epsilon: f.epsilon,
            epsilon_frac: f.epsilon_frac,
            lambda: f.lambda,
            dc_rating: f.dc_rating,
            seed: f.seed,
            workers: f.workers,
            out: f.out,
            direction: f.direction,
            lower: f.lower,
            upper: f.upper,
            n: f.n,
            m: f.m,
            points: f.points,
            horizon: f.horizon,
            count: f.count,
            instances: f.instances,
            method: f.method,
            grid: f.grid,
            carbon: f.carbon,
            solar: f.solar,
            sessions: f.sessions,
            synthetic,
        }
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: Manifest) -> Self {
        overlay!(
            self,
            top,
            kind,
            instance,
            algorithm,
            advice,
            beta,
            zeta_grid,
            epsilon,
            epsilon_frac,
            lambda,
            dc_rating,
            seed,
            workers,
            out,
            direction,
            lower,
            upper,
            n,
            m,
            points,
            horizon,
            count,
            instances,
            method,
            grid,
            carbon,
            solar,
            sessions,
            synthetic
        );
        self
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::usage("bad-manifest", e.to_string()))
    }
}

/// Error reported as `{"error": kind, "message": ...}` on stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    /// Caller mistakes; exit code 2.
    pub fn usage(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
            exit_code: 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<OcsError> for CliError {
    fn from(e: OcsError) -> Self {
        let kind = match &e {
            OcsError::Structural(_) => "structural-error",
            OcsError::Data(_) => "data-error",
            OcsError::Domain(_) => "domain-error",
            OcsError::Parameter(_) => "parameter-error",
            OcsError::Range(_) => "range-error",
            OcsError::Infeasible(_) => "infeasible",
            OcsError::Refused(_) => "refused",
            OcsError::Validation(_) => "validation-error",
            OcsError::Solver(_) => "solver-error",
            OcsError::Io(_) => "io-error",
            OcsError::Json(_) => "json-error",
            OcsError::Csv(_) => "csv-error",
        };
        Self {
            kind: kind.into(),
            message: e.to_string(),
            exit_code: 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        OcsError::from(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        OcsError::from(e).into()
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        OcsError::from(e).into()
    }
}

/// Parses arguments, merges the manifest and runs the experiment.
pub fn main_with_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::usage("usage", e.to_string().trim().to_string())),
    };
    let mut manifest = Manifest::from_flags(cli.kind, cli.flags);
    if let Some(path) = &cli.manifest {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage("missing-input", format!("manifest {}: {e}", path.display()))
        })?;
        let file = Manifest::from_json(&text)?;
        if let (Some(a), Some(b)) = (cli.kind, file.kind) {
            if a != b {
                return Err(CliError::usage(
                    "kind-mismatch",
                    format!("subcommand `{a}` but manifest kind `{b}`"),
                ));
            }
        }
        manifest = manifest.overlay(file);
    }
    run(&manifest)
}
