use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flime_cli::{run_bench_command, run_compare, run_evolve, run_ness, run_spectrum, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "flime", version, about = "Floquet-Lindblad master equation runs and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured system and write observables over time.
    Evolve(Common),
    /// Integrate to the periodic steady state and write its cycle.
    Ness(Common),
    /// Steady-state emission spectrum.
    Spectrum(Common),
    /// Time both solvers over a list of period counts.
    Bench(Common),
    /// Evolve with both solvers and report their agreement.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set system.rabi=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (Command::Evolve(c) | Command::Ness(c) | Command::Spectrum(c) | Command::Bench(c) | Command::Compare(c)) =
        &cli.command;
    let cfg = RunConfig::load(&c.config, &c.set)?;
    let out = &c.out;
    match cli.command {
        Command::Evolve(_) | Command::Compare(_) => {
            let report = if matches!(cli.command, Command::Compare(_)) { run_compare(&cfg, out)? } else { run_evolve(&cfg, out)? };
            for (kind, path) in &report.tables {
                println!("{kind}: {}", path.display());
            }
            if let Some(a) = report.agreement {
                println!("max trace distance {:.3e}", a.max_trace_distance);
            }
        }
        Command::Ness(_) => {
            for (kind, n) in run_ness(&cfg, out)?.results {
                let state = if n.converged { "converged" } else { "not converged" };
                println!("{kind}: {state} after {} periods, period mean {:.6}", n.periods_to_converge, n.period_mean);
            }
        }
        Command::Spectrum(_) => {
            for (kind, s) in run_spectrum(&cfg, out)?.results {
                println!("{kind}: {} frequencies, resolution {:.3e}", s.detunings.len(), s.resolution());
            }
        }
        Command::Bench(_) => {
            let (_, table) = run_bench_command(&cfg, out)?;
            println!("{}", table.header.join(","));
            for row in &table.rows {
                println!("{}", row.join(","));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
