use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod report;

#[derive(Parser)]
#[command(
    name = "agmon",
    version,
    about = "Agmon distance and eigenfunction decay checks for lattice operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural hypotheses on stencil and potential.
    Validate(Common),
    /// Build the Agmon distance and run the eikonal, Lipschitz and agreement checks.
    Distance(Common),
    /// ε sweep of low-lying eigenpairs and the weighted decay certificate.
    Spectrum(Common),
    /// Reversible chain to operator, spectral bounds and (for Metropolis) decay.
    Markov(Common),
}

#[derive(Args, Clone)]
pub struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output`, else ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Validate(c) => ("validate", c),
        Command::Distance(c) => ("distance", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Markov(c) => ("markov", c),
    };
    let code = commands::run(name, &common.config, common.out.as_deref(), common.seed);
    ExitCode::from(code)
}
