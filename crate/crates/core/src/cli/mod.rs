//! Command-line front end: simulate, train, generate, detect, evaluate.

mod commands;
mod config;

pub use config::{RunConfig, SimulateConfig};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::datastore::DB_ENV;
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "peakgan", version, about = "Conditional GC-MS generation and two-stream detection")]
pub struct Cli {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Start from the small single-core settings instead of the full-size defaults.
    #[arg(long, global = true)]
    pub desk: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Record store file.
    #[arg(long, global = true, env = DB_ENV, default_value = "gcms/records.jsonl")]
    pub db: PathBuf,
    /// Directory for every artifact of the run.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate labeled records for the evaluation conditions and store them as real data.
    Simulate {
        /// Records per condition.
        #[arg(long)]
        n: Option<usize>,
        /// Retention points per spectrum.
        #[arg(long = "T")]
        length: Option<usize>,
        /// Interference preset name.
        #[arg(long)]
        interference: Option<String>,
    },
    /// Per-condition peak area and intensity statistics.
    Eda {
        /// `real` or `synthetic`.
        #[arg(long, default_value = "real")]
        data_type: String,
    },
    /// Train the conditional generator on the stored real records.
    TrainGan {
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long = "lr-g")]
        lr_g: Option<f64>,
        #[arg(long = "lr-d")]
        lr_d: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Iterations between checkpoints.
        #[arg(long)]
        checkpoint_every: Option<usize>,
    },
    /// Generate spectra and store them as synthetic records.
    Generate {
        /// Spectra per condition.
        #[arg(long)]
        n: usize,
        /// One condition such as `THF + DMMP`; every evaluation condition when omitted.
        #[arg(long)]
        condition: Option<String>,
        /// Generator checkpoint; defaults to `<out>/gan.json`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train detectors on real plus synthetic records, one per ladder step.
    TrainDetector {
        /// Comma-separated synthetic-record counts.
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
    },
    /// Generation quality tables and, given a detector, detection scores.
    Evaluate {
        /// Set compared against the real records: `synthetic` or `real`.
        #[arg(long, default_value = "synthetic")]
        against: String,
        #[arg(long)]
        detector: Option<PathBuf>,
    },
    /// Write the (t, m/z, intensity) surface of one stored record.
    ExportMesh {
        #[arg(long)]
        id: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Eda { .. } => "eda",
            Command::TrainGan { .. } => "train-gan",
            Command::Generate { .. } => "generate",
            Command::TrainDetector { .. } => "train-detector",
            Command::Evaluate { .. } => "evaluate",
            Command::ExportMesh { .. } => "export-mesh",
        }
    }
}

/// Parses `argv` (program name first) and runs the command.
///
/// Returns 0 on success, 2 for usage errors and 1 for runtime failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().lines().next().unwrap_or("unknown failure"));
            1
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None if cli.desk => RunConfig::desk(),
        None => RunConfig::default(),
    };
    commands::dispatch(cli, base)
}
