use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::{Formulation, Omega, Overrides, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Spherical eigenvalues, rearrangements and competition systems for the fractional extension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// First eigenvalue of the spherical problem for one or more boundary sets
    Eig {
        #[arg(long, value_enum, default_value = "k")]
        omega: Omega,
        /// For --omega k: which discretization of the k-symmetric problem
        #[arg(long, value_enum, default_value = "symmetric")]
        formulation: Formulation,
    },
    /// The k-chain λ(k), d(k) for k = 1..kmax with its monotonicity summary
    Sweep,
    /// Competition solve and diagnostics for every (k, β)
    Compete,
    /// Foliated Schwarz symmetrization and polarization trace of a field
    Symmetrize {
        /// Field CSV (theta_index,phi_index,value); a seeded random field otherwise
        #[arg(long)]
        input: Option<PathBuf>,
        /// Iteration budget for the polarization sequence, default 10·n_phi
        #[arg(long)]
        max_steps: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    match cli.command {
        Command::Eig { omega, formulation } => commands::eig(&cfg, omega, formulation),
        Command::Sweep => commands::sweep(&cfg),
        Command::Compete => commands::compete(&cfg),
        Command::Symmetrize { input, max_steps } => commands::symmetrize(&cfg, input.as_deref(), max_steps),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let err = CliError::validation(e.to_string().trim_end().to_string());
            eprintln!("{}", serde_json::to_string(&err).expect("error serializes"));
            return ExitCode::from(error::EXIT_VALIDATION as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
            ExitCode::from(e.exit_code as u8)
        }
    }
}
