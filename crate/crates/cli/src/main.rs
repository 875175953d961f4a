//! `fixprice`: evaluate fixed-price mechanisms for bilateral trade from the
//! command line.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.

mod commands;
mod error;
mod output;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fixprice_core::{GameConfig, QuadratureConfig, Seed};

use commands::{Context, EvaluateArgs, GameArgs, SweepArgs, ValidateArgs};
use error::{CliError, EXIT_INPUT};
use output::{Format, Output};

#[derive(Debug, Parser)]
#[command(name = "fixprice", version, about = "Fixed-price mechanisms for bilateral trade")]
struct Cli {
    /// Seed for every Monte Carlo estimate.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Absolute and relative quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Welfare and gains from trade of one mechanism on one instance.
    Evaluate {
        /// Distribution spec (inline JSON or a file path); the seller's when --buyer is given.
        #[arg(long, conflicts_with = "sequence")]
        dist: Option<String>,
        /// Use the n-th member of the worst-case sequence for the mean price instead of --dist.
        #[arg(long)]
        sequence: Option<usize>,
        /// Buyer distribution spec; switches to independent seller and buyer.
        #[arg(long)]
        buyer: Option<String>,
        /// Mechanism spec, e.g. '{"type":"mean"}'.
        #[arg(long)]
        mech: String,
        /// Also estimate by Monte Carlo with this many draws.
        #[arg(long)]
        mc_samples: Option<usize>,
    },
    /// Gains from trade, welfare and welfare ratio over a grid of fixed prices.
    Sweep {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        buyer: Option<String>,
        /// Evenly spaced prices across the support; atoms are always added.
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Explicit comma-separated prices, replacing --points.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        prices: Option<Vec<f64>>,
    },
    /// Known approximation ratios, with the check that certifies each.
    Table1,
    /// Worst-case welfare ratio of the mean price.
    Minimax {
        #[arg(long, default_value_t = 10_000)]
        resolution: usize,
    },
    /// The quantile-rule game against nature's equalizing strategy.
    Game {
        #[arg(long, default_value_t = GameConfig::default().epsilon)]
        epsilon: f64,
        #[arg(long, default_value_t = GameConfig::default().x_grid)]
        x_grid: usize,
        /// Monte Carlo draws at the best level; 0 skips the check.
        #[arg(long, default_value_t = GameConfig::default().mc_samples)]
        mc_samples: usize,
        /// Only the exact expected payoff, without the concrete instance.
        #[arg(long)]
        closed_form: bool,
    },
    /// Check distribution and mechanism specs, reporting every violation.
    Validate {
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        buyer: Option<String>,
        #[arg(long)]
        mech: Option<String>,
    },
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let cfg = match cli.tol {
        Some(tol) => QuadratureConfig::with_tolerance(tol, tol)?,
        None => QuadratureConfig::default(),
    };
    let ctx = Context {
        seed: Seed(cli.seed),
        cfg,
        format: cli.format,
    };
    match cli.command {
        Command::Evaluate {
            dist,
            sequence,
            buyer,
            mech,
            mc_samples,
        } => commands::cmd_evaluate(
            &ctx,
            &EvaluateArgs {
                dist,
                sequence,
                buyer,
                mech,
                mc_samples,
            },
        ),
        Command::Sweep {
            dist,
            buyer,
            points,
            prices,
        } => commands::cmd_sweep(
            &ctx,
            &SweepArgs {
                dist,
                buyer,
                points,
                prices,
            },
        ),
        Command::Table1 => commands::cmd_table1(&ctx),
        Command::Minimax { resolution } => commands::cmd_minimax(&ctx, resolution),
        Command::Game {
            epsilon,
            x_grid,
            mc_samples,
            closed_form,
        } => commands::cmd_game(
            &ctx,
            &GameArgs {
                epsilon,
                x_grid,
                mc_samples,
                closed_form,
            },
        ),
        Command::Validate { dist, buyer, mech } => commands::cmd_validate(&ctx, &ValidateArgs { dist, buyer, mech }),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            context: format!("--out: writing {}", path.display()),
            source,
        }),
        None => io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            context: "writing stdout".to_string(),
            source,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let out_path = cli.out.clone();
    let result = run(cli).and_then(|output| {
        emit(&output.render()?, out_path.as_ref())?;
        Ok(output.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
