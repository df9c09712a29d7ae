mod commands;
mod config;
mod error;
mod manifest;
mod reference;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::PipelineConfig;
use error::CliError;

/// Accident-severity pipeline: each subcommand reads the previous stage's
/// artifacts from the output directory and writes its own.
#[derive(Debug, Parser)]
#[command(name = "accsev", version)]
struct Cli {
    /// TOML pipeline config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the positive class label.
    #[arg(long, global = true)]
    positive: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean a raw accident CSV into cleaned.csv.
    Clean {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Frequency tables of the cleaned data.
    Eda,
    /// Per-variable significance tests against the target.
    Screen,
    /// Train/test split.
    Split,
    /// Rebalance the training set.
    Balance,
    /// Fit the random forest.
    Train,
    /// Confusion matrix, metrics and cross-validated AUC on the test set.
    Evaluate,
    /// Mean Decrease Gini ranking.
    Importance,
    /// ROC curve as TSV and SVG.
    Roc,
    /// Forest against a single fully grown tree on the same split.
    Compare,
    /// Full pipeline on the US-Accidents CSV with a divergence report.
    Repro {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(p) = &cli.positive {
        cfg.positive = p.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let ctx = Ctx { cfg: resolve(cli)? };
    match &cli.command {
        Command::Clean { input } => ctx.clean(input.as_deref()),
        Command::Eda => ctx.eda(),
        Command::Screen => ctx.screen(),
        Command::Split => ctx.split(),
        Command::Balance => ctx.balance(),
        Command::Train => ctx.train(),
        Command::Evaluate => ctx
            .evaluate()
            .map(|(m, auc)| format!("evaluate: accuracy {:.3}, AUC {:.3}", m.accuracy, auc)),
        Command::Importance => ctx.importance().map(|imp| {
            let top: Vec<&str> = imp
                .variables
                .iter()
                .take(6)
                .map(|v| v.name.as_str())
                .collect();
            format!("importance: top {}", top.join(", "))
        }),
        Command::Roc => ctx.roc(),
        Command::Compare => ctx.compare().map(|(rf, dt)| {
            format!(
                "compare: forest accuracy {:.3}, tree accuracy {:.3}",
                rf.accuracy, dt.accuracy
            )
        }),
        Command::Repro { input } => ctx.repro(input.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
