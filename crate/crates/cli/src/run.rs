//! Behavior dispatch and result export.

use std::path::Path;

use destflow_core::equilibrium::{fixed_point_solve, ConvergenceReport, Guess};
use destflow_core::network::Network;
use destflow_core::simulate::{run_basic, run_rational, RunResult};

use crate::error::{CliError, Result};
use crate::output::{densities_csv, diagnostics_csv, events_csv};
use crate::scenario::{GuessKind, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Basic,
    Rational,
    HighlyRational,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Single(RunResult),
    Equilibrium(ConvergenceReport),
}

impl Outcome {
    /// The exported runs: the single run, or every equilibrium witness.
    pub fn runs(&self) -> Vec<&RunResult> {
        match self {
            Outcome::Single(r) => vec![r],
            Outcome::Equilibrium(rep) => rep.witnesses.iter().map(|w| &w.run).collect(),
        }
    }
}

pub fn run_scenario(network: &Network, spec: &ScenarioSpec, behavior: Behavior) -> Result<Outcome> {
    let scenario = spec.build(network)?;
    Ok(match behavior {
        Behavior::Basic => Outcome::Single(run_basic(&scenario)?),
        Behavior::Rational => Outcome::Single(run_rational(&scenario)?),
        Behavior::HighlyRational => {
            if !spec.has_finite_inflows() {
                return Err(CliError::Scenario(
                    "the highly rational behavior needs every inflow to stop (finite t_off)".into(),
                ));
            }
            let guess = match spec.guess {
                GuessKind::Basic => Guess::Basic,
                GuessKind::Rational => Guess::Rational,
            };
            Outcome::Equilibrium(fixed_point_solve(&scenario, guess, spec.tol, spec.max_iters)?)
        }
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

/// Single runs go to `densities.csv` and `events.csv`; equilibrium solves write
/// `diagnostics.csv` and `witness<k>_densities.csv` / `witness<k>_events.csv`.
pub fn write_outputs(dir: &Path, network: &Network, outcome: &Outcome, stride: usize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    match outcome {
        Outcome::Single(run) => {
            write(dir, "densities.csv", &densities_csv(network, &run.history, stride))?;
            write(dir, "events.csv", &events_csv(network, &run.events))?;
        }
        Outcome::Equilibrium(rep) => {
            write(dir, "diagnostics.csv", &diagnostics_csv(rep))?;
            for (k, w) in rep.witnesses.iter().enumerate() {
                write(dir, &format!("witness{}_densities.csv", k + 1), &densities_csv(network, &w.run.history, stride))?;
                write(dir, &format!("witness{}_events.csv", k + 1), &events_csv(network, &w.run.events))?;
            }
        }
    }
    Ok(())
}
