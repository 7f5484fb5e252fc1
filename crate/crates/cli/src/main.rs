mod commands;
mod config;
mod record;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resa::climnorm::NormKind;
use resa::model::Architecture;

#[derive(Parser, Debug)]
#[command(name = "resa", version, about = "Causal ConvLSTM bias correction for gridded daily forecasts")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// JSON run configuration (must carry a `version` field).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "resa-out")]
    pub out: PathBuf,
    /// Seed: data seed for `synth`, training seed elsewhere.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap; falls back to RESA_THREADS, then 1.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Weight metrics by cos(latitude).
    #[arg(long, global = true)]
    pub area_weighted: bool,
    #[arg(long, global = true)]
    pub lon_wrap: Option<bool>,
    /// Climatology smoothing window in days (odd).
    #[arg(long, global = true)]
    pub window: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// Dataset manifest; without one the configured synthetic benchmark is
    /// regenerated.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub variable: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Static,
    Dynamic,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Static => NormKind::Static,
            NormArg::Dynamic => NormKind::Dynamic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ArchArg {
    Convlstm,
    SaConvlstm,
    ResidualConvlstm,
    ResaConvlstm,
}

impl From<ArchArg> for Architecture {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Convlstm => Architecture::ConvLstm,
            ArchArg::SaConvlstm => Architecture::SaConvLstm,
            ArchArg::ResidualConvlstm => Architecture::ResidualConvLstm,
            ArchArg::ResaConvlstm => Architecture::ResaConvLstm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LeadtimeArg {
    Resa,
    AcausalBaseline,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic truth/forecast dataset.
    Synth {
        #[arg(long)]
        variable: Option<String>,
        /// Forecasts equal the truth.
        #[arg(long)]
        no_errors: bool,
    },
    /// Fit the day-of-year climatology and distribution reports.
    Climatology {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Train a corrector from scratch.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "dynamic")]
        norm: NormArg,
        #[arg(long, value_enum, default_value = "resa-convlstm")]
        arch: ArchArg,
        /// Training horizon in leads (default: all).
        #[arg(long)]
        leads: Option<usize>,
        /// Train the acausal lead-stacked baseline instead.
        #[arg(long)]
        acausal_baseline: bool,
    },
    /// Fine-tune a pretrained model on another variable.
    Finetune {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Groups to freeze, comma separated; `none` trains everything.
        #[arg(long, value_delimiter = ',')]
        freeze: Option<Vec<String>>,
        #[arg(long)]
        target_val_loss: Option<f64>,
    },
    /// Apply a corrector to every case and write a corrected dataset.
    Correct {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        climatology: Option<PathBuf>,
    },
    /// Skill of the raw forecast and each checkpoint on the test years.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
        #[arg(long)]
        climatology: Option<PathBuf>,
    },
    /// Static versus dynamic normalization.
    AblateNorm {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Retrain over several horizons and compare shared leads.
    AblateLeadtime {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        horizons: Vec<usize>,
        #[arg(long, value_enum, default_value = "both")]
        arch: LeadtimeArg,
        /// Second seed for the ReSA seed-noise band.
        #[arg(long)]
        band_seed: Option<u64>,
    },
    /// The four ConvLSTM variants over the configured seeds.
    AblateArch {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Perturbation probe of each checkpoint's temporal causality.
    Audit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
        #[arg(long)]
        climatology: Option<PathBuf>,
        /// Index into the test cases.
        #[arg(long, default_value_t = 0)]
        case: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,-1,0.001,-0.001")]
        epsilon: Vec<f64>,
    },
    /// Tidy CSVs for the standard figures from earlier outputs.
    Plotdata {
        /// Directory holding outputs of evaluate and the ablations.
        #[arg(long)]
        from: Vec<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Climatology { .. } => "climatology",
            Command::Train { .. } => "train",
            Command::Finetune { .. } => "finetune",
            Command::Correct { .. } => "correct",
            Command::Evaluate { .. } => "evaluate",
            Command::AblateNorm { .. } => "ablate-norm",
            Command::AblateLeadtime { .. } => "ablate-leadtime",
            Command::AblateArch { .. } => "ablate-arch",
            Command::Audit { .. } => "audit",
            Command::Plotdata { .. } => "plotdata",
        }
    }
}

/// Failure categories and their exit codes.
#[derive(Debug)]
pub enum CliError {
    Core(resa::Error),
    AuditFailed(String),
}

impl From<resa::Error> for CliError {
    fn from(e: resa::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use resa::Error::*;
        match self {
            CliError::Core(Config(_)) => 2,
            CliError::Core(Dimension(_) | Contract(_) | Format { .. } | Io(_) | Json(_)) => 3,
            CliError::Core(Numeric(_)) => 4,
            CliError::Core(Internal(_)) => 1,
            CliError::AuditFailed(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::AuditFailed(m) => write!(f, "audit failed: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config_error(msg: impl std::fmt::Display) -> CliError {
    CliError::Core(resa::Error::Config(msg.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("resa {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
