use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};

use nehari_core::cli::{run, RunConfig, Subcommand};

#[derive(Parser)]
#[command(name = "nehari", version, about = "Ground states of coupled fractional Schrödinger systems")]
enum Cli {
    /// Check the structural hypotheses and print the report.
    Check(Common),
    /// Coupled ground state.
    Solve(Common),
    /// Ground state of one scalar equation (`component = u|v`).
    SolveScalar(Common),
    /// Levels along the coupling scales `scales`.
    Sweep(Common),
    /// Perturbed against purely periodic ground-state level.
    ComparePeriodic(Common),
    /// Vanishing-coupling limit along decreasing `scales`.
    Limit(Common),
    /// Mountain-pass geometry checks.
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config entry, e.g. `--set solver.max_iters=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
}

fn main() -> ExitCode {
    let (subcommand, c) = match Cli::parse() {
        Cli::Check(c) => (Subcommand::Check, c),
        Cli::Solve(c) => (Subcommand::Solve, c),
        Cli::SolveScalar(c) => (Subcommand::SolveScalar, c),
        Cli::Sweep(c) => (Subcommand::Sweep, c),
        Cli::ComparePeriodic(c) => (Subcommand::ComparePeriodic, c),
        Cli::Limit(c) => (Subcommand::Limit, c),
        Cli::Diagnose(c) => (Subcommand::Diagnose, c),
    };
    let code = run(&RunConfig {
        subcommand,
        config_path: c.config,
        out_dir: c.out,
        overrides: c.overrides,
        seed: c.seed,
        restarts: c.restarts,
    });
    ExitCode::from(code as u8)
}
