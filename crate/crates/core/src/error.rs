use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::network::{DestIndex, JunctionId, RoadId, Violation};

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A density was handed to the flux functions outside `[0, rho_max]`.
    Domain { value: f64, rho_max: f64 },
    /// `dt * v_max > dx`.
    Cfl { dx: f64, dt: f64, v_max: f64 },
    /// Grid parameters that do not line up (non-integer cell or step counts, bad delta).
    Grid(String),
    /// A scheme update produced a state outside the admissible set.
    Invariant { what: &'static str, cell: usize, value: f64 },
    InvalidNetwork(Vec<Violation>),
    MassBalance { step: usize, residual: f64 },
    /// A policy entry with no admissible road was hit by transportable mass.
    UnreachablePolicy { junction: JunctionId, dest: DestIndex, time: f64 },
    /// A policy selected a road that does not leave the junction.
    PolicyRoad { junction: JunctionId, road: RoadId },
    /// Bellman sweeps did not settle.
    NoConvergence { dest: DestIndex, time: f64, iterations: usize },
    Scenario(String),
    /// Histories defined on different grids.
    GridMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { value, rho_max } => {
                write!(f, "density {value} outside [0, {rho_max}]")
            }
            Error::Cfl { dx, dt, v_max } => {
                write!(f, "CFL violated: dt * v_max = {} > dx = {dx}", dt * v_max)
            }
            Error::Grid(msg) => write!(f, "grid: {msg}"),
            Error::Invariant { what, cell, value } => {
                write!(f, "scheme invariant broken ({what}) at cell {cell}: {value}")
            }
            Error::InvalidNetwork(v) => {
                write!(f, "invalid network:")?;
                for x in v {
                    write!(f, " {x};")?;
                }
                Ok(())
            }
            Error::MassBalance { step, residual } => {
                write!(f, "mass balance residual {residual:e} at step {step}")
            }
            Error::UnreachablePolicy { junction, dest, time } => write!(
                f,
                "{dest} has no admissible road at {junction} (t = {time}) but mass is present"
            ),
            Error::PolicyRoad { junction, road } => {
                write!(f, "policy picks {road}, which does not leave {junction}")
            }
            Error::NoConvergence { dest, time, iterations } => write!(
                f,
                "value iteration for {dest} did not converge at t = {time} after {iterations} sweeps"
            ),
            Error::Scenario(msg) => write!(f, "scenario: {msg}"),
            Error::GridMismatch => write!(f, "density histories live on different grids"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
