use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use stpl_cli::{run_eval, run_predict, run_train, RunConfig, TrainOverrides};

#[derive(Parser)]
#[command(
    name = "stpl",
    version,
    about = "Train and apply two-way pseudoinverse learning ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a TOML run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Maximum number of members trained concurrently (default: one per member).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        /// Model output path; overrides `output.model`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metrics report path; overrides `output.metrics`.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Report accuracy and a confusion table on labelled data.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Label file, for IDX image data.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Write one predicted class name per input sample.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            workers,
            base_seed,
            out,
            metrics,
        } => {
            let cfg = RunConfig::load(&config)?;
            let outcome = run_train(
                cfg,
                &TrainOverrides {
                    workers,
                    base_seed,
                    out,
                    metrics,
                },
            )?;
            eprintln!(
                "validation accuracy {:.2}%, model written to {}",
                100.0 * outcome.report.val_accuracy,
                outcome.model_path.display()
            );
            if let Some(acc) = outcome.test_accuracy {
                eprintln!("test accuracy {:.2}%", 100.0 * acc);
            }
        }
        Command::Eval {
            model,
            test,
            labels,
        } => {
            let outcome = run_eval(&model, &test, labels.as_deref())?;
            print!("{}", outcome.render());
        }
        Command::Predict {
            model,
            input,
            output,
        } => {
            let n = run_predict(&model, &input, &output)?;
            eprintln!("wrote {n} predictions to {}", output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
