//! `fcontour`: Fourier contour descriptors over JSONL corpora.

mod commands;
mod config;
mod jsonl;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, Overrides};

#[derive(Debug)]
pub enum CliError {
    /// Malformed input, bad flags or I/O failure (exit code 2).
    Input(String),
    /// A randomized check found a violation (exit code 1).
    Check(String),
}

impl CliError {
    pub fn input(e: impl Display) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn at(path: &Path, line: usize, e: impl Display) -> Self {
        CliError::Input(format!("{}:{line}: {e}", path.display()))
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError::Input(format!("write failed: {e}"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Check(_) => 1,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Check(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fcontour",
    version,
    about = "Fourier contour descriptors over JSONL corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat JSON object with default values for any of the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write records here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Contour records to one descriptor record per polygon.
    Encode {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Descriptor records to contour records.
    Decode {
        input: PathBuf,
        /// Image width, overriding the record's.
        #[arg(long)]
        width: Option<f64>,
        /// Image height, overriding the record's.
        #[arg(long)]
        height: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Dense matching of scored predictions to ground-truth descriptors.
    Match {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Include the cost breakdown of every matched pair.
        #[arg(long)]
        explain: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Per-record non-maximum suppression of scored polygons.
    Nms {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Precision, recall and F-measure of predictions against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized check of refinement gradients against finite differences.
    GradCheck {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized check of the attention kernel against direct summation.
    AttnCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: Common) -> Result<(Config, Option<PathBuf>), CliError> {
    let config = Config::resolve(common.overrides, common.config.as_deref())?;
    Ok((config, common.output))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Encode { input, common } => {
            let (config, out) = resolve(common)?;
            commands::encode(&input, out.as_deref(), &config)
        }
        Command::Decode {
            input,
            width,
            height,
            common,
        } => {
            let (config, out) = resolve(common)?;
            commands::decode(&input, out.as_deref(), &config, width, height)
        }
        Command::Match {
            pred,
            gt,
            explain,
            common,
        } => {
            let (config, out) = resolve(common)?;
            commands::match_sets(&pred, &gt, out.as_deref(), &config, explain)
        }
        Command::Nms { input, common } => {
            let (config, out) = resolve(common)?;
            commands::suppress(&input, out.as_deref(), &config)
        }
        Command::Eval { gt, pred, common } => {
            let (config, out) = resolve(common)?;
            commands::evaluate(&gt, &pred, out.as_deref(), &config)
        }
        Command::GradCheck { trials, common } => {
            let (config, out) = resolve(common)?;
            commands::grad_check(trials, out.as_deref(), &config)
        }
        Command::AttnCheck { trials, common } => {
            let (config, out) = resolve(common)?;
            commands::attn_check(trials, out.as_deref(), &config)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fcontour: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
