//! Road weights, value functions and the induced `NEXT_d` policies.
//!
//! Three levels of driver information are supported:
//!
//! * basic: weights of the empty network, one time-independent solve;
//! * rational: weights of the current density snapshot, frozen in time;
//! * highly rational: weights along space-time trajectories through a full
//!   density history, solved by backward induction over departure times.
//!
//! All three share the Bellman form `V(J) = min_r V(end r) + w_r` with
//! `V(D_d) = 0` and `V(D_e) = +inf` for the other destinations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::history::DensityHistory;
use crate::network::{DestIndex, JunctionId, JunctionKind, Network, Road, RoadId};
use crate::solver::{FluxParams, Grid};

/// Running cost `l_r(s; rho)` integrated along a trajectory to form a road weight.
#[derive(Debug, Clone, Copy, Default)]
pub enum RunningCost {
    /// `l = 1`: the weight is the travel time.
    #[default]
    TravelTime,
    /// `l(road, s, rho)`, shared by all destinations.
    PerRoad(fn(RoadId, f64, f64) -> f64),
    /// `l(road, d, s, rho)`.
    PerDestination(fn(RoadId, DestIndex, f64, f64) -> f64),
}

impl RunningCost {
    pub fn rate(&self, road: RoadId, d: DestIndex, time: f64, density: f64) -> f64 {
        match self {
            RunningCost::TravelTime => 1.0,
            RunningCost::PerRoad(f) => f(road, time, density),
            RunningCost::PerDestination(f) => f(road, d, time, density),
        }
    }

    /// True when weights do not depend on the destination.
    pub fn is_shared(&self) -> bool {
        !matches!(self, RunningCost::PerDestination(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSample {
    pub road: RoadId,
    pub start_time: f64,
    pub weight: f64,
    pub travel_time: f64,
}

/// Outgoing-road choice per (junction, destination) for one slab.
/// `None` marks junctions from which no admissible road exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySlice {
    num_dest: usize,
    entries: Vec<Option<RoadId>>,
}

impl PolicySlice {
    pub fn new(num_junctions: usize, num_dest: usize) -> Self {
        PolicySlice { num_dest, entries: vec![None; num_junctions * num_dest] }
    }

    pub fn get(&self, j: JunctionId, d: DestIndex) -> Option<RoadId> {
        self.entries[j.0 * self.num_dest + d.0]
    }

    pub fn set(&mut self, j: JunctionId, d: DestIndex, road: Option<RoadId>) {
        self.entries[j.0 * self.num_dest + d.0] = road;
    }

    pub fn num_dest(&self) -> usize {
        self.num_dest
    }

    pub fn num_junctions(&self) -> usize {
        self.entries.len() / self.num_dest.max(1)
    }

    /// Copies the choices of destination `d` from `choices` (indexed by junction).
    pub fn set_dest(&mut self, d: DestIndex, choices: &[Option<RoadId>]) {
        for (j, &c) in choices.iter().enumerate() {
            self.set(JunctionId(j), d, c);
        }
    }
}

/// Piecewise-constant policy: one [`PolicySlice`] per slab.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NextPolicy {
    pub slabs: Vec<PolicySlice>,
}

impl NextPolicy {
    pub fn slab(&self, h: usize) -> &PolicySlice {
        &self.slabs[h]
    }

    pub fn len(&self) -> usize {
        self.slabs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slabs.is_empty()
    }

    /// Choices of destination `d` at junction `j` over all slabs.
    pub fn timeline(&self, j: JunctionId, d: DestIndex) -> Vec<Option<RoadId>> {
        self.slabs.iter().map(|s| s.get(j, d)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueMode {
    Basic,
    /// Snapshot taken at time `tau`.
    Rational(f64),
    HighlyRational,
}

/// `V_d` per (time slot, junction). Basic and rational tables hold one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub mode: ValueMode,
    pub dest: DestIndex,
    pub values: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn at(&self, slot: usize, j: JunctionId) -> f64 {
        self.values[slot][j.0]
    }
}

/// Choices of one destination per (time slot, junction).
#[derive(Debug, Clone, PartialEq)]
pub struct DestPolicy {
    pub dest: DestIndex,
    pub choices: Vec<Vec<Option<RoadId>>>,
}

fn params(road: &Road) -> FluxParams {
    FluxParams::new(road.rho_max, road.v_max)
}

#[inline]
fn speed(p: FluxParams, u: f64) -> f64 {
    p.v_max * (1.0 - u / p.rho_max)
}

/// Travel time through `road` with the density frozen at `omega` (one value per cell).
pub fn travel_time_frozen(road: &Road, omega: &[f64], dx: f64) -> f64 {
    let p = params(road);
    let mut t = 0.0;
    for &u in omega {
        let v = speed(p, u);
        if !(v > 0.0) {
            return f64::INFINITY;
        }
        t += dx / v;
    }
    t
}

/// Walks a vehicle cell by cell from the upstream end of `road`, reading
/// the density slice that contains the current clock.
///
/// `density(slice, cell)` returns the total density; `last_slice` bounds
/// the slices available (`None` for a frozen profile).
#[allow(clippy::too_many_arguments)]
fn trajectory(
    road: &Road,
    cells: usize,
    dx: f64,
    dt: f64,
    start_slot: usize,
    last_slice: Option<usize>,
    d: DestIndex,
    cost: &RunningCost,
    density: impl Fn(usize, usize) -> f64,
) -> WeightSample {
    let p = params(road);
    let t0 = start_slot as f64 * dt;
    let unreachable = WeightSample {
        road: road.id,
        start_time: t0,
        weight: f64::INFINITY,
        travel_time: f64::INFINITY,
    };
    let mut elapsed = 0.0;
    let mut weight = 0.0;
    for k in 0..cells {
        let slice = match last_slice {
            Some(last) => {
                let s = start_slot + libm::floor(elapsed / dt + 1e-9) as usize;
                if s > last {
                    return unreachable;
                }
                s
            }
            None => start_slot,
        };
        let u = density(slice, k);
        let v = speed(p, u);
        if !(v > 0.0) {
            return unreachable;
        }
        let tau = dx / v;
        if !matches!(cost, RunningCost::TravelTime) {
            weight += cost.rate(road.id, d, t0 + elapsed + 0.5 * tau, u) * tau;
        }
        elapsed += tau;
    }
    if let Some(last) = last_slice {
        if (start_slot as f64 + elapsed / dt) > last as f64 + 1e-9 {
            return unreachable;
        }
    }
    if matches!(cost, RunningCost::TravelTime) {
        weight = elapsed;
    }
    WeightSample { road: road.id, start_time: t0, weight, travel_time: elapsed }
}

/// Travel time through `road` departing at slot `start_slot`, following the
/// recorded history. `+inf` if the vehicle stalls or has not arrived by the
/// last recorded slot.
pub fn travel_time_spacetime(road: &Road, hist: &DensityHistory, start_slot: usize) -> f64 {
    road_weight_spacetime(road, hist, start_slot, DestIndex(0), &RunningCost::TravelTime).travel_time
}

/// Weight of `road` under a frozen profile, departing at time `start_time`.
pub fn road_weight_frozen(
    road: &Road,
    omega: &[f64],
    dx: f64,
    start_time: f64,
    d: DestIndex,
    cost: &RunningCost,
) -> WeightSample {
    let mut w = trajectory(road, omega.len(), dx, 1.0, 0, None, d, cost, |_, k| omega[k]);
    if !matches!(cost, RunningCost::TravelTime) && w.weight.is_finite() {
        // re-run with the true clock so that time-dependent costs see `start_time`
        let mut weight = 0.0;
        let mut clock = start_time;
        let p = params(road);
        for &u in omega {
            let tau = dx / speed(p, u);
            weight += cost.rate(road.id, d, clock + 0.5 * tau, u) * tau;
            clock += tau;
        }
        w.weight = weight;
    }
    w.start_time = start_time;
    w
}

/// Weight of `road` for a departure at slot `start_slot` through a space-time history.
pub fn road_weight_spacetime(
    road: &Road,
    hist: &DensityHistory,
    start_slot: usize,
    d: DestIndex,
    cost: &RunningCost,
) -> WeightSample {
    let totals_at = |s: usize, k: usize| hist.total(s, road.id, k);
    trajectory(
        road,
        hist.cells(road.id),
        hist.dx(),
        hist.dt(),
        start_slot,
        Some(hist.last_step()),
        d,
        cost,
        totals_at,
    )
}

/// First road with the strictly smallest finite cost; `None` if all are `+inf`.
fn argmin(candidates: impl Iterator<Item = (RoadId, f64)>) -> (Option<RoadId>, f64) {
    let mut best = (None, f64::INFINITY);
    for (r, c) in candidates {
        if c < best.1 {
            best = (Some(r), c);
        }
    }
    best
}

/// Bellman solve on one time slice with fixed road weights (indexed by road id).
fn bellman_static(network: &Network, d: DestIndex, weights: &[f64]) -> Result<Vec<f64>> {
    let nj = network.num_junctions();
    let target = network.destination(d);
    let mut v = vec![f64::INFINITY; nj];
    v[target.0] = 0.0;
    for _sweep in 0..=nj {
        let mut next = v.clone();
        for j in &network.junctions {
            if j.kind == JunctionKind::Destination {
                continue;
            }
            next[j.id.0] = argmin(j.out.iter().map(|&r| (r, v[network.road(r).end.0] + weights[r.0]))).1;
        }
        if next == v {
            return Ok(v);
        }
        v = next;
    }
    Err(Error::NoConvergence { dest: d, time: 0.0, iterations: nj + 1 })
}

/// Argmin policy of a single-slice table. Ties go to the lowest road id.
pub fn extract_next(values: &[f64], network: &Network, weights: &[f64]) -> Vec<Option<RoadId>> {
    network
        .junctions
        .iter()
        .map(|j| {
            if j.kind == JunctionKind::Destination {
                return None;
            }
            argmin(j.out.iter().map(|&r| (r, values[network.road(r).end.0] + weights[r.0]))).0
        })
        .collect()
}

/// Weights of all roads with the network empty.
pub fn empty_network_weights(network: &Network, grid: &Grid, d: DestIndex, cost: &RunningCost) -> Vec<f64> {
    network
        .roads
        .iter()
        .map(|r| {
            let zeros = vec![0.0; grid.cells_per_road[r.id.0]];
            road_weight_frozen(r, &zeros, grid.dx, 0.0, d, cost).weight
        })
        .collect()
}

/// Weights of all roads from the snapshot `rho_totals` (one profile per road) taken at `tau`.
pub fn snapshot_weights(
    network: &Network,
    dx: f64,
    rho_totals: &[Vec<f64>],
    tau: f64,
    d: DestIndex,
    cost: &RunningCost,
) -> Vec<f64> {
    network
        .roads
        .iter()
        .map(|r| road_weight_frozen(r, &rho_totals[r.id.0], dx, tau, d, cost).weight)
        .collect()
}

/// Drivers ignoring all traffic: weights of the empty network.
pub fn value_basic(network: &Network, grid: &Grid, d: DestIndex, cost: &RunningCost) -> Result<(ValueTable, Vec<Option<RoadId>>)> {
    let w = empty_network_weights(network, grid, d, cost);
    let v = bellman_static(network, d, &w)?;
    let policy = extract_next(&v, network, &w);
    Ok((ValueTable { mode: ValueMode::Basic, dest: d, values: vec![v] }, policy))
}

/// Drivers reacting to the snapshot `rho_totals` taken at time `tau`.
pub fn value_rational(
    network: &Network,
    dx: f64,
    d: DestIndex,
    rho_totals: &[Vec<f64>],
    tau: f64,
    cost: &RunningCost,
) -> Result<(ValueTable, Vec<Option<RoadId>>)> {
    let w = snapshot_weights(network, dx, rho_totals, tau, d, cost);
    let v = bellman_static(network, d, &w).map_err(|e| match e {
        Error::NoConvergence { dest, iterations, .. } => Error::NoConvergence { dest, time: tau, iterations },
        other => other,
    })?;
    let policy = extract_next(&v, network, &w);
    Ok((ValueTable { mode: ValueMode::Rational(tau), dest: d, values: vec![v] }, policy))
}

/// Travel times and weights of every road for every departure slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeWeights {
    /// `[slot][road]`
    pub travel_time: Vec<Vec<f64>>,
    pub weight: Vec<Vec<f64>>,
}

pub fn spacetime_weights(network: &Network, hist: &DensityHistory, d: DestIndex, cost: &RunningCost) -> SpacetimeWeights {
    let slots = hist.len();
    let mut travel_time = Vec::with_capacity(slots);
    let mut weight = Vec::with_capacity(slots);
    for n in 0..slots {
        let samples: Vec<WeightSample> =
            network.roads.iter().map(|r| road_weight_spacetime(r, hist, n, d, cost)).collect();
        travel_time.push(samples.iter().map(|s| s.travel_time).collect());
        weight.push(samples.iter().map(|s| s.weight).collect());
    }
    SpacetimeWeights { travel_time, weight }
}

/// Default cap on the per-slot Bellman sweeps.
pub const DEFAULT_SWEEP_CAP: usize = 1000;

/// Drivers forecasting the whole history: time-dependent values by backward
/// induction over departure slots. Arrival times are rounded to the nearest
/// slot (half up); arrivals after the last slot are worth `+inf`.
pub fn value_highly_rational(
    network: &Network,
    hist: &DensityHistory,
    d: DestIndex,
    cost: &RunningCost,
    sweep_cap: usize,
) -> Result<(ValueTable, DestPolicy)> {
    let w = spacetime_weights(network, hist, d, cost);
    value_highly_rational_with(network, hist.dt(), d, &w, sweep_cap)
}

/// [`value_highly_rational`] with precomputed weights.
pub fn value_highly_rational_with(
    network: &Network,
    dt: f64,
    d: DestIndex,
    w: &SpacetimeWeights,
    sweep_cap: usize,
) -> Result<(ValueTable, DestPolicy)> {
    let slots = w.travel_time.len();
    let last = slots.saturating_sub(1);
    let nj = network.num_junctions();
    let target = network.destination(d);
    let mut values = vec![vec![f64::INFINITY; nj]; slots];
    let mut choices = vec![vec![None; nj]; slots];

    let arrival = |n: usize, r: RoadId| -> Option<usize> {
        let tt = w.travel_time[n][r.0];
        if !tt.is_finite() {
            return None;
        }
        let steps = libm::floor(tt / dt + 0.5);
        if steps > (last - n) as f64 {
            None
        } else {
            Some(n + steps as usize)
        }
    };

    for n in (0..slots).rev() {
        let mut cur = vec![f64::INFINITY; nj];
        cur[target.0] = 0.0;
        let mut sweeps = 0;
        loop {
            let mut changed = false;
            for j in &network.junctions {
                if j.kind == JunctionKind::Destination {
                    continue;
                }
                let cand = j.out.iter().map(|&r| {
                    let end = network.road(r).end.0;
                    let later = match arrival(n, r) {
                        None => f64::INFINITY,
                        Some(m) if m == n => cur[end],
                        Some(m) => values[m][end],
                    };
                    (r, later + w.weight[n][r.0])
                });
                let (choice, best) = argmin(cand);
                if best != cur[j.id.0] || choice != choices[n][j.id.0] {
                    changed = changed || best != cur[j.id.0];
                    cur[j.id.0] = best;
                    choices[n][j.id.0] = choice;
                }
            }
            sweeps += 1;
            if !changed {
                break;
            }
            if sweeps >= sweep_cap {
                return Err(Error::NoConvergence { dest: d, time: n as f64 * dt, iterations: sweeps });
            }
        }
        values[n] = cur;
    }
    Ok((
        ValueTable { mode: ValueMode::HighlyRational, dest: d, values },
        DestPolicy { dest: d, choices },
    ))
}

/// Audit: every finite `V(J)` is attained by some outgoing road.
pub fn bellman_residual(network: &Network, values: &[f64], weights: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in &network.junctions {
        if j.kind == JunctionKind::Destination || !values[j.id.0].is_finite() {
            continue;
        }
        let best = argmin(j.out.iter().map(|&r| (r, values[network.road(r).end.0] + weights[r.0]))).1;
        worst = worst.max((best - values[j.id.0]).abs());
    }
    worst
}
