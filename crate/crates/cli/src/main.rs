//! `dvgsn`: ingest weekly ILI data, train and evaluate the forecaster, run
//! sweeps and baselines, and inspect learned neighbors.

mod commands;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use manifest::Recorder;
use settings::{Flags, Settings};

#[derive(Parser, Debug)]
#[command(name = "dvgsn", version, about = "Dynamic virtual graph forecaster for weekly ILI rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a CSV, print season statistics, write the windowed dataset
    Ingest(Io),
    /// Train a model and write checkpoint, history and report
    Train(Io),
    /// Score a checkpoint (or a baseline via --model) on every split
    Evaluate {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and score every (q, p, model, lambda) cell on the test split
    Sweep(Io),
    /// Sweep with the fixed-graph model alongside the dynamic one
    Ablate(Io),
    /// List the training weeks most strongly linked to one week
    Explain {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Query week as YYYY/WW
        #[arg(long)]
        stamp: String,
        /// Also probe test weeks for yearly neighbor offsets
        #[arg(long)]
        seasonality: bool,
    },
    /// Score the AR, k-NN and persistence baselines
    Baselines(Io),
    /// Write a synthetic weekly series as CSV
    Synth {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// seasonal | sinusoid
        #[arg(long, default_value = "seasonal")]
        kind: String,
        #[arg(long, default_value_t = 800)]
        len: usize,
        #[arg(long)]
        pandemic: bool,
    },
}

#[derive(clap::Args, Debug)]
struct Io {
    /// Weekly CSV or dataset JSON; defaults to $DVGSN_DATA_DIR/ili.csv
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Failure to write results, as opposed to bad input.
#[derive(Debug)]
pub struct OutputError(anyhow::Error);

impl OutputError {
    pub fn wrap(e: anyhow::Error) -> anyhow::Error {
        anyhow::Error::new(OutputError(e))
    }
}

impl std::fmt::Display for OutputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for OutputError {}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_OTHER: u8 = 1;

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(de) = cause.downcast_ref::<dvgsn::Error>() {
            return if de.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        }
        if cause.downcast_ref::<OutputError>().is_some() {
            return EXIT_OTHER;
        }
    }
    EXIT_INPUT
}

fn run(cli: Cli) -> Result<()> {
    let mut settings = Settings::resolve(&cli.flags)?;
    if matches!(cli.command, Command::Ablate(_)) {
        settings.ablation = dvgsn::training::GraphKind::Fixed;
    }
    if let Some(c) = &cli.flags.config {
        log::info!("config {}", c.display());
    }
    let (name, out) = match &cli.command {
        Command::Ingest(io) => ("ingest", &io.out),
        Command::Train(io) => ("train", &io.out),
        Command::Evaluate { io, .. } => ("evaluate", &io.out),
        Command::Sweep(io) => ("sweep", &io.out),
        Command::Ablate(io) => ("ablate", &io.out),
        Command::Explain { io, .. } => ("explain", &io.out),
        Command::Baselines(io) => ("baselines", &io.out),
        Command::Synth { out, .. } => ("synth", out),
    };
    let input = match &cli.command {
        Command::Ingest(io)
        | Command::Train(io)
        | Command::Evaluate { io, .. }
        | Command::Sweep(io)
        | Command::Ablate(io)
        | Command::Explain { io, .. }
        | Command::Baselines(io) => Some(commands::resolve_input(io.input.as_deref())?),
        Command::Synth { .. } => None,
    };
    let mut rec = Recorder::new(name, out)?;
    if let Some(c) = &cli.flags.config {
        rec.input(c);
    }
    let input = input.as_deref();
    match &cli.command {
        Command::Ingest(_) => commands::ingest(input.unwrap(), &mut rec, &settings)?,
        Command::Train(_) => commands::train_cmd(input.unwrap(), &mut rec, &settings)?,
        Command::Evaluate { checkpoint, .. } => {
            commands::evaluate_cmd(input.unwrap(), checkpoint.as_deref(), &mut rec, &settings)?
        }
        Command::Sweep(_) | Command::Ablate(_) => {
            commands::sweep(input.unwrap(), &mut rec, &settings)?
        }
        Command::Explain {
            checkpoint,
            stamp,
            seasonality,
            ..
        } => commands::explain(input.unwrap(), checkpoint, stamp, *seasonality, &mut rec, &settings)?,
        Command::Baselines(_) => commands::baselines_cmd(input.unwrap(), &mut rec, &settings)?,
        Command::Synth {
            kind, len, pandemic, ..
        } => commands::synth(kind, *len, settings.seed, *pandemic, &mut rec)?,
    }
    rec.finish(&settings)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let numerical = anyhow::Error::from(dvgsn::Error::Diverged {
            epoch: 0,
            step: 0,
            loss: f64::NAN,
        })
        .context("training");
        assert_eq!(exit_code(&numerical), EXIT_NUMERICAL);
        let input = anyhow::Error::from(dvgsn::Error::TooShort {
            required: 10,
            actual: 5,
        });
        assert_eq!(exit_code(&input), EXIT_INPUT);
        let output = OutputError::wrap(anyhow::anyhow!("disk full"));
        assert_eq!(exit_code(&output), EXIT_OTHER);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
