use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinsieve_cli::commands;
use thinsieve_cli::{Overrides, RunConfig};

/// Thin orbits of SL2(Z) subgroups, congruence densities and the sieve on
/// c^2 + d^2.
#[derive(Parser)]
#[command(name = "thinsieve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Enumerate (or load) the orbit slice and print its count.
    Orbit,
    /// Ramified primes and local densities for square-free moduli.
    Density,
    /// Legendre identity, remainders and almost-prime counts.
    Sieve,
    /// Growth fit, base point and admissible-R tables.
    Spectral,
    /// Merge all artifacts into a bundle with plot-ready CSVs.
    Report,
    /// Print the resolved config in canonical form with its hash.
    Config,
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = RunConfig::from_overrides(&cli.overrides)?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let ok = match cli.command {
        Command::Orbit => commands::cmd_orbit(&cfg, &mut out)?,
        Command::Density => commands::cmd_density(&cfg, &mut out)?,
        Command::Sieve => commands::cmd_sieve(&cfg, &mut out)?,
        Command::Spectral => commands::cmd_spectral(&cfg, &mut out)?,
        Command::Report => commands::cmd_report(&cfg, &mut out)?,
        Command::Config => {
            write!(out, "{}", cfg.to_text())?;
            writeln!(out, "# hash = {}", cfg.hash())?;
            true
        }
    };
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
