use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use destflow::benchmark::emit_benchmark;
use destflow::netfile::parse_network;
use destflow::output::status_label;
use destflow::scenario::{parse_scenario, GuessKind};
use destflow::{run_scenario, write_outputs, Behavior, CliError, Outcome, Result};

#[derive(Parser)]
#[command(name = "destflow", version, about = "Multi-destination traffic on road networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BehaviorArg {
    Basic,
    Rational,
    High,
}

#[derive(Clone, Copy, ValueEnum)]
enum GuessArg {
    Basic,
    Rational,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV results.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        behavior: BehaviorArg,
        #[arg(long)]
        out: PathBuf,
        /// Absolute tolerance of the equilibrium iteration.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long, value_enum)]
        guess: Option<GuessArg>,
        /// Export every n-th time level.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        stride: u64,
    },
    /// Write the benchmark network and scenario files.
    EmitBenchmark {
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a network file.
    Validate {
        #[arg(long)]
        network: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { network, scenario, behavior, out, tol, max_iters, guess, stride } => {
            let net = parse_network(&read(&network)?, &network.display().to_string())?;
            let mut spec = parse_scenario(&read(&scenario)?, &scenario.display().to_string())?;
            if tol.is_some() {
                spec.tol = tol;
            }
            if let Some(m) = max_iters {
                spec.max_iters = m;
            }
            if let Some(g) = guess {
                spec.guess = match g {
                    GuessArg::Basic => GuessKind::Basic,
                    GuessArg::Rational => GuessKind::Rational,
                };
            }
            let behavior = match behavior {
                BehaviorArg::Basic => Behavior::Basic,
                BehaviorArg::Rational => Behavior::Rational,
                BehaviorArg::High => Behavior::HighlyRational,
            };
            let outcome = run_scenario(&net, &spec, behavior)?;
            write_outputs(&out, &net, &outcome, stride as usize)?;
            match &outcome {
                Outcome::Single(r) => println!("{} policy events written to {}", r.events.len(), out.display()),
                Outcome::Equilibrium(rep) => println!(
                    "{} after {} iterations (tol {:e}), {} witness run(s) written to {}",
                    status_label(rep.status),
                    rep.residuals.len(),
                    rep.tol,
                    rep.witnesses.len(),
                    out.display()
                ),
            }
        }
        Command::EmitBenchmark { out } => {
            emit_benchmark(&out)?;
            println!("benchmark files written to {}", out.display());
        }
        Command::Validate { network } => {
            let net = parse_network(&read(&network)?, &network.display().to_string())?;
            println!(
                "ok: {} roads, {} junctions, {} destinations",
                net.num_roads(),
                net.num_junctions(),
                net.num_destinations()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
