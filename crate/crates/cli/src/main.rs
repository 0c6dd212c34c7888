//! `kpmnet` command-line frontend.
//!
//! Exit codes: 0 success, 2 configuration or schema error, 3 invariant
//! violation (support leak, covering failure, failed check), 4 budget exceeded.

mod commands;
mod demo;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::demo::DemoName;

#[derive(Parser, Debug)]
#[command(name = "kpmnet", version, about = "Compile functions on polytopes into ReLU networks that vanish outside the domain")]
struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts; stdout only when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every sampled quantity.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap on coefficient-tensor work and on grid points.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Grid resolution: points per axis for error grids, base points for moduli.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the kernel inequalities for a list of degrees.
    KernelCheck {
        /// Degrees, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Quadrature points; defaults to 64(n+2) per degree.
        #[arg(long)]
        quad_points: Option<usize>,
    },
    /// Ordinary and direction-weighted moduli on a ladder of steps.
    Modulus,
    /// Compile the configured function into a network.
    Compile,
    /// Evaluate a network at the points of a CSV or JSON file.
    Eval { network: PathBuf, points: PathBuf },
    /// Measure a network against a scenario.
    Verify { network: PathBuf, scenario: PathBuf },
    /// Reproduce a named scenario end to end.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

/// Global flags shared by every subcommand.
pub struct Opts {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub grid: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Opts { config: cli.config, out: cli.out, seed: cli.seed, budget: cli.budget, grid: cli.grid };
    let result = match cli.command {
        Command::KernelCheck { n, quad_points } => commands::kernel_check(&opts, n, quad_points),
        Command::Modulus => commands::modulus(&opts),
        Command::Compile => commands::compile(&opts),
        Command::Eval { network, points } => commands::eval(&opts, &network, &points),
        Command::Verify { network, scenario } => commands::verify(&opts, &network, &scenario),
        Command::Demo { name } => demo::run(&opts, name),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
