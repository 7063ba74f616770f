//! Forward runs of the coupled network under the three driver behaviors.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::history::DensityHistory;
use crate::junction::{total_mass, Coupling, SlabState};
use crate::network::{DestIndex, JunctionId, RoadId};
use crate::routing::{value_basic, value_rational, NextPolicy, PolicySlice, RunningCost, DEFAULT_SWEEP_CAP};

/// Everything a run needs besides the policy.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub coupling: Coupling,
    /// Policy slab length in time steps.
    pub slab_steps: usize,
    pub cost: RunningCost,
    /// Cap on the per-slot Bellman sweeps of the highly rational solve.
    pub sweep_cap: usize,
}

impl Scenario {
    pub fn new(coupling: Coupling, slab_steps: usize) -> Result<Self> {
        if slab_steps == 0 || !coupling.grid.steps.is_multiple_of(slab_steps) {
            return Err(Error::Grid(format!(
                "slab of {slab_steps} steps does not divide the {} steps of the horizon",
                coupling.grid.steps
            )));
        }
        Ok(Scenario { coupling, slab_steps, cost: RunningCost::TravelTime, sweep_cap: DEFAULT_SWEEP_CAP })
    }

    pub fn num_slabs(&self) -> usize {
        self.coupling.grid.steps / self.slab_steps
    }

    pub fn num_dest(&self) -> usize {
        self.coupling.num_dest()
    }

    /// Total mass the origins would inject if nothing ever blocked them, per unit flux.
    pub fn nominal_injection(&self) -> f64 {
        let g = &self.coupling.grid;
        self.coupling
            .inflows
            .iter()
            .map(|f| {
                let end = f.end_step.unwrap_or(g.steps).min(g.steps);
                let steps = end.saturating_sub(f.start_step) as f64;
                f.density * (1.0 - f.density) * steps * g.dt
            })
            .sum()
    }
}

/// A change of `NEXT_d` at one junction between consecutive slabs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEvent {
    pub time: f64,
    pub junction: JunctionId,
    pub dest: DestIndex,
    pub from: Option<RoadId>,
    pub to: Option<RoadId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub history: DensityHistory,
    pub policy: NextPolicy,
    pub events: Vec<PolicyEvent>,
    /// Cumulative injected and drained mass per destination.
    pub injected: Vec<f64>,
    pub discharged: Vec<f64>,
    pub final_mass: Vec<f64>,
}

impl RunResult {
    pub fn total_injected(&self) -> f64 {
        self.injected.iter().sum()
    }
}

fn events_between(prev: &PolicySlice, cur: &PolicySlice, time: f64, out: &mut Vec<PolicyEvent>) {
    for j in 0..cur.num_junctions() {
        for d in 0..cur.num_dest() {
            let (j, d) = (JunctionId(j), DestIndex(d));
            let (from, to) = (prev.get(j, d), cur.get(j, d));
            if from != to {
                out.push(PolicyEvent { time, junction: j, dest: d, from, to });
            }
        }
    }
}

/// Runs the whole horizon, asking `policy_for` for the policy of every slab.
pub fn simulate(
    scenario: &Scenario,
    mut policy_for: impl FnMut(usize, &SlabState) -> Result<PolicySlice>,
) -> Result<RunResult> {
    let c = &scenario.coupling;
    let mut state = c.empty_state();
    let mut history = DensityHistory::new(&c.grid, c.num_dest(), scenario.slab_steps);
    history.push(&state.roads);
    let mut policy = NextPolicy::default();
    let mut events = Vec::new();
    for h in 0..scenario.num_slabs() {
        let slice = policy_for(h, &state)?;
        if let Some(prev) = policy.slabs.last() {
            events_between(prev, &slice, state.time(&c.grid), &mut events);
        }
        c.advance_slab(&mut state, &slice, scenario.slab_steps, |s| history.push(&s.roads))?;
        policy.slabs.push(slice);
    }
    let final_mass = total_mass(&state, c.grid.dx);
    Ok(RunResult { history, policy, events, injected: state.injected, discharged: state.discharged, final_mass })
}

/// Shortest routes of the empty network, fixed for the whole run.
pub fn basic_policy(scenario: &Scenario) -> Result<PolicySlice> {
    let c = &scenario.coupling;
    let mut slice = PolicySlice::new(c.network.num_junctions(), c.num_dest());
    for d in (0..c.num_dest()).map(DestIndex) {
        let (_, choice) = value_basic(&c.network, &c.grid, d, &scenario.cost)?;
        slice.set_dest(d, &choice);
    }
    Ok(slice)
}

pub fn run_basic(scenario: &Scenario) -> Result<RunResult> {
    let slice = basic_policy(scenario)?;
    simulate(scenario, |_, _| Ok(slice.clone()))
}

/// Re-solves the routes against the current density at the start of every slab.
pub fn run_rational(scenario: &Scenario) -> Result<RunResult> {
    let c = &scenario.coupling;
    simulate(scenario, |_, state| {
        let totals: Vec<Vec<f64>> = state.roads.iter().map(|f| f.totals()).collect();
        let tau = state.time(&c.grid);
        let mut slice = PolicySlice::new(c.network.num_junctions(), c.num_dest());
        for d in (0..c.num_dest()).map(DestIndex) {
            let (_, choice) = value_rational(&c.network, c.grid.dx, d, &totals, tau, &scenario.cost)?;
            slice.set_dest(d, &choice);
        }
        Ok(slice)
    })
}

/// Follows a precomputed policy with one slice per slab.
pub fn run_with_policy(scenario: &Scenario, policy: &NextPolicy) -> Result<RunResult> {
    if policy.len() != scenario.num_slabs() {
        return Err(Error::Scenario(format!(
            "policy has {} slabs, the run needs {}",
            policy.len(),
            scenario.num_slabs()
        )));
    }
    simulate(scenario, |h, _| Ok(policy.slab(h).clone()))
}
