//! `triad` command-line interface: graph construction, minor embedding,
//! single simulations, XY optimization, experiment sweeps, and the
//! winding-number census.
//!
//! Exit codes: 0 success, 2 usage errors, 3 input/validation errors,
//! 4 runtime divergence.

mod commands;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

use commands::{CliError, EmbedArgs, GraphArgs, OptimizeArgs, SimulateArgs, SweepArgs, TwistedArgs};

#[derive(Parser)]
#[command(
    name = "triad",
    version,
    about = "Stuart-Landau oscillator networks on complete, ring, and triad-embedded graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a complete graph with weights drawn from a distribution.
    Graph(GraphArgs),
    /// Minor-embed a complete graph into its triad graph.
    Embed(EmbedArgs),
    /// Integrate one network and report its metrics.
    Simulate(SimulateArgs),
    /// Minimize the XY energy of a graph.
    Optimize(OptimizeArgs),
    /// Run an experiment plan and write row/aggregate CSV tables.
    Sweep(SweepArgs),
    /// Census of winding numbers over ring networks.
    Twisted(TwistedArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Graph(args) => commands::run_graph(args),
        Command::Embed(args) => commands::run_embed(args),
        Command::Simulate(args) => commands::run_simulate(args),
        Command::Optimize(args) => commands::run_optimize(args),
        Command::Sweep(args) => commands::run_sweep(args),
        Command::Twisted(args) => commands::run_twisted(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
