//! `vaest` command-line front end.

pub mod ablation;
pub mod commands;
pub mod config;
pub mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;

/// Error with the process exit code it maps to: 1 for bad input or
/// configuration, 2 for runtime failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn user(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<vaest::Error> for Failure {
    fn from(e: vaest::Error) -> Self {
        if e.is_user_error() {
            Failure::user(e.to_string())
        } else {
            Failure::runtime(e.to_string())
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "vaest", version, about = "Valence-arousal estimation pipeline with label distribution smoothing")]
pub struct Cli {
    /// Flat TOML config file; every key is optional.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides out_dir).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Dataset directory (overrides dataset_root).
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    /// Train without label distribution smoothing.
    #[arg(long, global = true)]
    pub no_lds: bool,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic drifting-grating dataset.
    Synth,
    /// Parse and align a dataset, reporting per-video statistics.
    IngestCheck,
    /// Per-target LDS weight tables and density figures.
    Weights,
    /// Train over the configured folds.
    Train {
        /// Run only this fold.
        #[arg(long)]
        fold: Option<usize>,
    },
    /// Score a checkpoint, or existing prediction files, against the dataset.
    Eval {
        /// Defaults to <out>/train/fold0/best.ckpt.json.
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        /// Directory of <video_id>.txt prediction files to score instead.
        #[arg(long, value_name = "DIR", conflicts_with = "checkpoint")]
        predictions: Option<PathBuf>,
    },
    /// 2D valence-arousal histogram figure.
    PlotHistogram,
}

impl Cli {
    /// Defaults, then the config file, then `--set`, then dedicated flags.
    pub fn resolve_config(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::load(self.config.as_deref())?.with_overrides(&self.overrides)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(data) = &self.data {
            cfg.dataset_root = data.clone();
        }
        if self.no_lds {
            cfg.lds_enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Synth => commands::synth(&cfg, cli.force),
        Command::IngestCheck => commands::ingest_check(&cfg),
        Command::Weights => commands::weights(&cfg),
        Command::Train { fold } => commands::train(&cfg, *fold, cli.force).map(|_| ()),
        Command::Eval {
            checkpoint,
            predictions,
        } => commands::eval(&cfg, checkpoint.as_deref(), predictions.as_deref()).map(|_| ()),
        Command::PlotHistogram => commands::plot_histogram(&cfg),
    }
}
