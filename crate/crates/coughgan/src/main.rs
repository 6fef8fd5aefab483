use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coughgan::cli::{self, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "coughgan",
    about = "Cough-audio preprocessing, Mel spectrogram extraction, conditional GAN augmentation, and classifier training",
    version
)]
struct Cli {
    /// Pipeline configuration (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's root seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize, filter, resample, and segment every manifest clip
    Preprocess,
    /// Extract dB mel spectrograms from the segments
    Featurize,
    /// Train the ACGAN on the training split
    TrainGan,
    /// Generate synthetic spectrograms from the trained generator
    Synth {
        /// Samples per class (required; there is no default)
        #[arg(long)]
        count: usize,
        /// Restrict generation to one class label
        #[arg(long)]
        class: Option<String>,
    },
    /// Train the classifier (optionally on an augmented training set)
    TrainClf {
        /// Synthetic spectrogram container to mix into the training split
        #[arg(long)]
        augment: Option<PathBuf>,
    },
    /// Evaluate a classifier checkpoint on the held-out test split
    Eval {
        /// Checkpoint to evaluate
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Render a history CSV or spectrogram container as PNG
    Plot {
        /// History .csv or spectrogram .acgn file
        #[arg(long)]
        input: PathBuf,
        /// Output directory
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Print manifest statistics
    Stats,
}

fn load_config(cli: &Cli) -> coughgan::Result<PipelineConfig> {
    let path = cli.config.as_ref().ok_or_else(|| {
        coughgan::Error::Config("--config <path> is required for this command".into())
    })?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> coughgan::Result<i32> {
    match &cli.command {
        Command::Preprocess => {
            let summary = cli::cmd_preprocess(&load_config(cli)?)?;
            // skipped inputs are reported through the exit status
            Ok(if summary.skipped > 0 { 5 } else { 0 })
        }
        Command::Featurize => {
            cli::cmd_featurize(&load_config(cli)?)?;
            Ok(0)
        }
        Command::TrainGan => {
            cli::cmd_train_gan(&load_config(cli)?)?;
            Ok(0)
        }
        Command::Synth { count, class } => {
            cli::cmd_synth(&load_config(cli)?, class.as_deref(), *count)?;
            Ok(0)
        }
        Command::TrainClf { augment } => {
            cli::cmd_train_clf(&load_config(cli)?, augment.as_deref())?;
            Ok(0)
        }
        Command::Eval { checkpoint } => {
            cli::cmd_eval(&load_config(cli)?, checkpoint)?;
            Ok(0)
        }
        Command::Plot { input, out } => {
            cli::cmd_plot(input, out)?;
            Ok(0)
        }
        Command::Stats => {
            cli::cmd_stats(&load_config(cli)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
