//! Command-line interface: region evaluation, example sweeps, boundary
//! search, coding simulation, and common-part extraction.
//!
//! Every failure maps to a documented exit code:
//! 2 parse/config, 3 factor signature or cardinality, 4 not decomposable,
//! 5 infeasible budget, 6 grid too large, 7 nonpositive rate, 8 memory
//! guard, 1 anything else.

mod commands;
mod io;

use clap::{Parser, Subcommand};
use isac_regions::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "isac-regions",
    version,
    about = "Rate-region tools for state-dependent channels with rate-limited helpers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the rate-region constraints of a factored model.
    Region(commands::RegionArgs),
    /// Reproduce a closed-form example as CSV over a parameter grid.
    Sweep(commands::SweepArgs),
    /// Optimize free factors toward a region boundary.
    Search(commands::SearchArgs),
    /// Monte Carlo simulation of the block coding scheme.
    Simulate(commands::SimulateArgs),
    /// Extract the common component of a state-output distribution.
    CommonPart(commands::CommonPartArgs),
}

fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        return match core {
            CoreError::FactorSignatureMismatch { .. } | CoreError::CardinalityExceeded { .. } => 3,
            CoreError::NotDecomposable => 4,
            CoreError::InfeasibleBudget => 5,
            CoreError::GridTooLarge { .. } => 6,
            CoreError::RateNonpositive { .. } => 7,
            CoreError::MemoryGuard { .. } => 8,
            _ => 2,
        };
    }
    // File and JSON problems are parse errors.
    2
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Region(args) => commands::cmd_region(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Search(args) => commands::cmd_search(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::CommonPart(args) => commands::cmd_common_part(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
