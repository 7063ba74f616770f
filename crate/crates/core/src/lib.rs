//! Multi-destination traffic on road networks.
//!
//! Each destination group follows its own conservation law
//! `rho_d_t + (rho_d v(rho))_x = 0`, all groups sharing the Greenshields
//! speed of the total density. Junctions are resolved by a multi-path
//! Godunov scheme on small neighborhoods, and groups pick outgoing roads
//! through a routing policy computed from one of three information levels.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x >= 0.0)` is how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod equilibrium;
pub mod error;
pub mod history;
pub mod junction;
pub mod network;
pub mod routing;
pub mod simulate;
pub mod solver;

pub use equilibrium::{density_distance, fixed_point_solve, xi_apply, ConvergenceReport, Guess, Status, XiState};
pub use error::{Error, Result};
pub use history::DensityHistory;
pub use junction::{BoundaryMode, Coupling, Inflow, LambdaSchedule};
pub use network::{DestIndex, JunctionId, Network, NetworkBuilder, RoadId};
pub use routing::{NextPolicy, PolicySlice, RunningCost};
pub use simulate::{run_basic, run_rational, run_with_policy, RunResult, Scenario};
pub use solver::{DensityField, FluxParams, Grid};
