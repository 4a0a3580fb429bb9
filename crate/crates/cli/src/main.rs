use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coalloc_cli::commands::{self, PriceChoice, Report};
use coalloc_cli::error::CliResult;
use coalloc_core::ClearingMode;

#[derive(Parser)]
#[command(
    name = "coalloc",
    version,
    about = "Zonal energy and reserve co-allocation clearing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the PTDF matrix of an instance's network.
    Ptdf { instance: PathBuf },
    /// Clear an instance and write a results file.
    Clear {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Balanced)]
        mode: Mode,
        /// Results file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Settle a results file at external or recorded prices.
    Settle {
        instance: PathBuf,
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = Prices::Dual)]
        prices: Prices,
    },
    /// Check a results file independently of the solver that produced it.
    Verify { instance: PathBuf, results: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Decoupled,
    Balanced,
    Overprocure,
}

impl From<Mode> for ClearingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Decoupled => ClearingMode::Decoupled,
            Mode::Balanced => ClearingMode::Balanced,
            Mode::Overprocure => ClearingMode::Overprocure,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Prices {
    External,
    Dual,
}

fn run(cli: Cli) -> CliResult<Report> {
    match cli.command {
        Command::Ptdf { instance } => commands::ptdf(&instance),
        Command::Clear {
            instance,
            mode,
            out,
        } => {
            let config = commands::config_from_env()?;
            commands::clear(&instance, mode.into(), out.as_deref(), &config)
        }
        Command::Settle {
            instance,
            results,
            prices,
        } => {
            let choice = match prices {
                Prices::External => PriceChoice::External,
                Prices::Dual => PriceChoice::Dual,
            };
            commands::settle_results(&instance, &results, choice)
        }
        Command::Verify { instance, results } => {
            let config = commands::config_from_env()?;
            commands::verify_results(&instance, &results, &config)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::from(report.status.code())
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.status.code())
        }
    }
}
