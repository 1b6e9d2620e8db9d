mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lexiground_core::simulate::Setup;

use config::{RunConfig, SpaceChoice};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "lexiground",
    version,
    about = "Visual grounding of word embeddings and behavioral choice modeling"
)]
struct Cli {
    /// Plain-text key-value run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Random seed, recorded in every report.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Directory that receives all output files.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Embedding space(s) to operate on: textual, grounded, or both.
    #[arg(long, global = true, value_name = "SPACE", value_parser = parse_space)]
    space: Option<SpaceChoice>,

    /// Cross-modal mapping flavour: prototype or exemplar.
    #[arg(long, global = true, value_name = "SETUP", value_parser = parse_setup)]
    setup: Option<Setup>,

    #[command(subcommand)]
    command: Command,
}

fn parse_space(s: &str) -> Result<SpaceChoice, String> {
    s.parse()
}

fn parse_setup(s: &str) -> Result<Setup, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Fit the text-to-image linear map from class membership.
    TrainMap {
        /// Ridge strength; "auto" scales it with the data.
        #[arg(long, value_name = "LAMBDA")]
        lambda: Option<String>,
    },
    /// Train the caption alignment and write grounded embeddings.
    Ground {
        /// Caption encoder: mean-pool or gated-recurrent.
        #[arg(long, value_name = "KIND")]
        encoder: Option<String>,
        /// Number of training epochs.
        #[arg(long, value_name = "N")]
        epochs: Option<usize>,
    },
    /// Evaluate trials and aggregate the virtual participant.
    Simulate {
        /// Keep catch trials in the evaluation.
        #[arg(long)]
        include_catch: bool,
    },
    /// Fit the penalized logistic additive model of participant responses.
    FitGam,
    /// Score spaces against a human similarity benchmark.
    Bench,
    /// Exact binomial tests.
    Stats {
        #[command(subcommand)]
        test: StatsTest,
    },
}

#[derive(Subcommand, Clone, Copy)]
enum StatsTest {
    /// Exact two-sided proportions test of successes out of n against p0.
    Proportions {
        successes: u64,
        n: u64,
        /// Null proportion.
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
    },
    /// Paired sign test: wins out of non-tied comparisons.
    SignTest { successes: u64, n: u64 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    // The stats subcommand is pure arithmetic and takes no configuration.
    if let Command::Stats { test } = cli.command {
        return match test {
            StatsTest::Proportions { successes, n, p0 } => {
                commands::stats::run_proportions(successes, n, p0)
            }
            StatsTest::SignTest { successes, n } => commands::stats::run_sign_test(successes, n),
        };
    }

    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out_dir) = cli.out_dir {
        cfg.out_dir = out_dir;
    }
    if let Some(space) = cli.space {
        cfg.space = space;
    }
    if let Some(setup) = cli.setup {
        cfg.setup = setup;
    }

    match cli.command {
        Command::TrainMap { lambda } => {
            if let Some(value) = lambda {
                cfg.set_key("lambda", &value)
                    .map_err(CliError::Validation)?;
            }
            commands::train_map::run(&cfg)
        }
        Command::Ground { encoder, epochs } => {
            if let Some(value) = encoder {
                cfg.set_key("encoder", &value)
                    .map_err(CliError::Validation)?;
            }
            if let Some(value) = epochs {
                cfg.epochs = value;
            }
            commands::ground::run(&cfg)
        }
        Command::Simulate { include_catch } => {
            if include_catch {
                cfg.include_catch = true;
            }
            commands::simulate::run(&cfg)
        }
        Command::FitGam => commands::fit_gam::run(&cfg),
        Command::Bench => commands::bench::run(&cfg),
        Command::Stats { .. } => unreachable!("handled above"),
    }
}
