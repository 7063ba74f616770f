//! Junction neighborhoods and the coupled network step.
//!
//! Around every internal junction the last `m` cells of each incoming road and
//! the first `m` cells of each outgoing road form a small subnetwork. Vehicles
//! of group `d` arriving on road `i` live there as a path population
//! `mu_(i,d)` on the incoming segment followed by the outgoing segment of
//! `NEXT_d`. All populations sharing a cell see the same total density, so
//! merges and diverges are resolved by the scheme itself.
//!
//! Mass of group `d` that already sits on an outgoing segment other than
//! `NEXT_d` (left over from an earlier policy) keeps moving downstream as a
//! tail population on that segment alone.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::network::{DestIndex, JunctionId, JunctionKind, Network, RoadId};
use crate::routing::PolicySlice;
use crate::solver::{interface_flux, scheme_step, transport_ratio, DensityField, FluxParams, Grid, Outflow, PathExit, PathSystem};

/// Largest tolerated mass-balance residual per step.
pub const MASS_BALANCE_TOL: f64 = 1e-9;

/// Cells of one road inside a junction neighborhood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub road: RoadId,
    pub cells: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subnetwork {
    pub junction: JunctionId,
    /// `[b_i - delta, b_i[` of every incoming road, in `inc` order.
    pub inc_segments: Vec<Segment>,
    /// `]a_o, a_o + delta[` of every outgoing road, in `out` order.
    pub out_segments: Vec<Segment>,
}

impl Subnetwork {
    fn width(&self) -> usize {
        self.inc_segments.first().map_or(0, |s| s.cells.len())
    }

    fn out_position(&self, road: RoadId) -> Option<usize> {
        self.out_segments.iter().position(|s| s.road == road)
    }
}

/// Converts `delta` to a cell count and cuts out every junction neighborhood.
pub fn build_subnetworks(network: &Network, grid: &Grid, delta: f64) -> Result<(usize, Vec<Subnetwork>)> {
    let m = crate::solver::integer_ratio(delta, grid.dx)
        .filter(|&m| m >= 1)
        .ok_or_else(|| Error::Grid(format!("delta = {delta} is not a positive multiple of dx = {}", grid.dx)))?;
    let short = network.delta_violations(m as f64 * grid.dx * (1.0 - 1e-9));
    if !short.is_empty() {
        return Err(Error::InvalidNetwork(short));
    }
    for r in &network.roads {
        let cells = grid.cells_per_road[r.id.0];
        let mut need = 0;
        if network.is_internal(r.start) {
            need += m;
        }
        if network.is_internal(r.end) {
            need += m;
        }
        let strict = network.is_internal(r.start) && network.is_internal(r.end);
        if cells < need || (strict && cells == need) {
            return Err(Error::Grid(format!("road {} has {cells} cells, too few for delta = {m} cells", r.name)));
        }
    }
    let subs = network
        .junctions
        .iter()
        .filter(|j| j.kind == JunctionKind::Internal)
        .map(|j| Subnetwork {
            junction: j.id,
            inc_segments: j
                .inc
                .iter()
                .map(|&r| {
                    let n = grid.cells_per_road[r.0];
                    Segment { road: r, cells: n - m..n }
                })
                .collect(),
            out_segments: j.out.iter().map(|&r| Segment { road: r, cells: 0..m }).collect(),
        })
        .collect();
    Ok((m, subs))
}

/// Cells of `road` that belong to no junction neighborhood.
pub fn interior_range(network: &Network, grid: &Grid, m: usize, road: RoadId) -> Range<usize> {
    let r = network.road(road);
    let n = grid.cells_per_road[road.0];
    let lo = if network.is_internal(r.start) { m } else { 0 };
    let hi = if network.is_internal(r.end) { n - m } else { n };
    lo..hi
}

/// Vehicles of one group on one route through a junction neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPopulation {
    /// `None` for a tail population living on one outgoing segment only.
    pub incoming: Option<RoadId>,
    pub dest: DestIndex,
    /// `None` when no outgoing road is admissible; the path then ends at the junction.
    pub outgoing: Option<RoadId>,
    /// Densities along the path, upstream first.
    pub profile: Vec<f64>,
}

/// `Lambda(i, d)` for every incoming road `i` of one junction.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCoefficients {
    pub inc: Vec<RoadId>,
    num_dest: usize,
    values: Vec<f64>,
}

impl SplitCoefficients {
    /// Coefficients proportional to the given masses, `masses[i][d]`.
    /// Groups with no mass anywhere are split evenly.
    pub fn from_masses(inc: Vec<RoadId>, masses: &[Vec<f64>]) -> Self {
        let num_dest = masses.first().map_or(0, |m| m.len());
        let n = inc.len();
        let mut values = vec![0.0; n * num_dest];
        for d in 0..num_dest {
            let sum: f64 = masses.iter().map(|m| m[d]).sum();
            for i in 0..n {
                values[i * num_dest + d] = if sum > 0.0 { masses[i][d] / sum } else { 1.0 / n as f64 };
            }
        }
        SplitCoefficients { inc, num_dest, values }
    }

    /// Coefficient of the `i`-th incoming road.
    pub fn get(&self, i: usize, d: DestIndex) -> f64 {
        self.values[i * self.num_dest + d.0]
    }

    pub fn of_road(&self, road: RoadId, d: DestIndex) -> Option<f64> {
        self.inc.iter().position(|&r| r == road).map(|i| self.get(i, d))
    }
}

/// `Lambda` from the masses of every group on the incoming segments.
pub fn compute_split_coefficients(sub: &Subnetwork, roads: &[DensityField]) -> SplitCoefficients {
    let masses: Vec<Vec<f64>> = sub
        .inc_segments
        .iter()
        .map(|s| {
            let f = &roads[s.road.0];
            (0..f.populations()).map(|d| f.population(d)[s.cells.clone()].iter().sum()).collect()
        })
        .collect();
    SplitCoefficients::from_masses(sub.inc_segments.iter().map(|s| s.road).collect(), &masses)
}

/// Splits the road densities on a neighborhood into path populations.
///
/// Incoming halves copy `rho_d`; the outgoing segment of `NEXT_d` receives
/// `Lambda(i, d) rho_d` on path `(i, d)`; `rho_d` on any other outgoing
/// segment becomes a tail population.
pub fn init_path_densities(
    network: &Network,
    sub: &Subnetwork,
    roads: &[DensityField],
    lam: &SplitCoefficients,
    next: &PolicySlice,
) -> Result<Vec<PathPopulation>> {
    let j = network.junction(sub.junction);
    let nd = network.num_destinations();
    let mut paths = Vec::with_capacity((sub.inc_segments.len() + sub.out_segments.len()) * nd);
    for d in (0..nd).map(DestIndex) {
        let choice = next.get(sub.junction, d);
        if let Some(o) = choice {
            if !j.out.contains(&o) {
                return Err(Error::PolicyRoad { junction: sub.junction, road: o });
            }
        }
        for (i, seg) in sub.inc_segments.iter().enumerate() {
            let mut profile: Vec<f64> = roads[seg.road.0].population(d.0)[seg.cells.clone()].to_vec();
            if let Some(o) = choice {
                let out = &sub.out_segments[sub.out_position(o).expect("outgoing road has a segment")];
                let l = lam.get(i, d);
                profile.extend(roads[o.0].population(d.0)[out.cells.clone()].iter().map(|&v| l * v));
            }
            paths.push(PathPopulation { incoming: Some(seg.road), dest: d, outgoing: choice, profile });
        }
        for seg in &sub.out_segments {
            let profile = if choice == Some(seg.road) {
                vec![0.0; seg.cells.len()]
            } else {
                roads[seg.road.0].population(d.0)[seg.cells.clone()].to_vec()
            };
            paths.push(PathPopulation { incoming: None, dest: d, outgoing: Some(seg.road), profile });
        }
    }
    Ok(paths)
}

/// Local cell layout of a subnetwork: incoming segments first, then outgoing.
fn path_system(network: &Network, sub: &Subnetwork, paths: &[PathPopulation]) -> PathSystem {
    let m = sub.width();
    let mut cell_params = Vec::new();
    for s in sub.inc_segments.iter().chain(&sub.out_segments) {
        let r = network.road(s.road);
        cell_params.extend(core::iter::repeat_n(FluxParams::new(r.rho_max, r.v_max), m));
    }
    let ninc = sub.inc_segments.len();
    let local = |k: usize| k * m..(k + 1) * m;
    let cells = paths
        .iter()
        .map(|p| {
            let mut c: Vec<usize> = Vec::with_capacity(2 * m);
            if let Some(i) = p.incoming {
                let k = sub.inc_segments.iter().position(|s| s.road == i).expect("incoming segment");
                c.extend(local(k));
            }
            if let Some(o) = p.outgoing {
                c.extend(local(ninc + sub.out_position(o).expect("outgoing segment")));
            }
            c
        })
        .collect();
    PathSystem { cell_params, paths: cells }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionState {
    pub lambda: SplitCoefficients,
    pub paths: Vec<PathPopulation>,
    system: PathSystem,
}

/// How `Lambda` follows the incoming masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaSchedule {
    /// Computed once at the start of every policy slab.
    #[default]
    PerSlab,
    /// Recomputed before every time step.
    PerStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Origins inject the scenario inflows, destinations drain freely.
    #[default]
    Open,
    /// Nothing enters or leaves the network.
    Closed,
}

/// Prescribed boundary density of one group at one origin on `[start, end)` (in steps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inflow {
    pub origin: JunctionId,
    pub dest: DestIndex,
    pub density: f64,
    pub start_step: usize,
    /// `None` keeps the inflow on until the horizon.
    pub end_step: Option<usize>,
}

impl Inflow {
    /// Inflow active on the half-open time window `[t_on, t_off)`.
    pub fn window(origin: JunctionId, dest: DestIndex, density: f64, t_on: f64, t_off: Option<f64>, dt: f64) -> Self {
        let step = |t: f64| libm::ceil(t / dt - 1e-9).max(0.0) as usize;
        Inflow { origin, dest, density, start_step: step(t_on), end_step: t_off.map(step) }
    }

    pub fn active(&self, n: usize) -> bool {
        n >= self.start_step && self.end_step.is_none_or(|e| n < e)
    }
}

/// Network, grid and boundary data shared by every step.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub network: Network,
    pub grid: Grid,
    /// Neighborhood width in cells.
    pub delta_cells: usize,
    pub subnetworks: Vec<Subnetwork>,
    pub interiors: Vec<Range<usize>>,
    pub inflows: Vec<Inflow>,
    pub boundary: BoundaryMode,
    pub lambda: LambdaSchedule,
}

/// Densities of the whole network at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabState {
    /// Full road fields, neighborhoods included, one population per destination.
    pub roads: Vec<DensityField>,
    /// Per subnetwork, `None` until the first slab starts.
    pub junctions: Vec<Option<JunctionState>>,
    pub step: usize,
    /// Cumulative mass injected at origins, per destination.
    pub injected: Vec<f64>,
    /// Cumulative mass drained at destinations, per destination.
    pub discharged: Vec<f64>,
}

impl SlabState {
    pub fn time(&self, grid: &Grid) -> f64 {
        grid.time(self.step)
    }
}

/// Mass of every group on the network, neighborhood cells counted once.
pub fn total_mass(state: &SlabState, dx: f64) -> Vec<f64> {
    let nd = state.injected.len();
    (0..nd).map(|d| state.roads.iter().map(|f| f.mass(d, dx)).sum()).collect()
}

/// At a junction with `k` incoming roads the first cell of an outgoing road
/// can receive its supply from all `k` of them in one step, so staying below
/// `rho_max` needs `k * dt * v_max <= dx` for every outgoing road.
pub fn check_merge_cfl(network: &Network, grid: &Grid) -> Result<()> {
    for j in &network.junctions {
        let k = j.inc.len() as f64;
        if k < 2.0 {
            continue;
        }
        for &o in &j.out {
            let v = network.road(o).v_max;
            if k * grid.dt * v > grid.dx {
                return Err(Error::Grid(format!(
                    "{} merges {} roads into {}: {} x dt x v_max = {} exceeds dx = {}",
                    j.id,
                    j.inc.len(),
                    o,
                    j.inc.len(),
                    k * grid.dt * v,
                    grid.dx
                )));
            }
        }
    }
    Ok(())
}

impl Coupling {
    pub fn new(
        network: Network,
        grid: Grid,
        delta: f64,
        inflows: Vec<Inflow>,
        boundary: BoundaryMode,
        lambda: LambdaSchedule,
    ) -> Result<Self> {
        let violations = network.violations();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        check_merge_cfl(&network, &grid)?;
        let (m, subnetworks) = build_subnetworks(&network, &grid, delta)?;
        let nd = network.num_destinations();
        for f in &inflows {
            if network.junctions.get(f.origin.0).map(|j| j.kind) != Some(JunctionKind::Origin) {
                return Err(Error::Scenario(format!("inflow at {}, which is not an origin", f.origin)));
            }
            if f.dest.0 >= nd {
                return Err(Error::Scenario(format!("inflow for unknown {}", f.dest)));
            }
            let rho_max = network.junction(f.origin).out.iter().map(|&r| network.road(r).rho_max).fold(f64::INFINITY, f64::min);
            if !(f.density >= 0.0 && f.density < rho_max) {
                return Err(Error::Scenario(format!("inflow density {} outside [0, {rho_max})", f.density)));
            }
        }
        let interiors = network.roads.iter().map(|r| interior_range(&network, &grid, m, r.id)).collect();
        Ok(Coupling { network, grid, delta_cells: m, subnetworks, interiors, inflows, boundary, lambda })
    }

    pub fn num_dest(&self) -> usize {
        self.network.num_destinations()
    }

    fn params(&self, r: RoadId) -> FluxParams {
        let road = self.network.road(r);
        FluxParams::new(road.rho_max, road.v_max)
    }

    /// The empty network at `t = 0`.
    pub fn empty_state(&self) -> SlabState {
        let nd = self.num_dest();
        SlabState {
            roads: self.grid.cells_per_road.iter().map(|&c| DensityField::zeros(nd, c)).collect(),
            junctions: vec![None; self.subnetworks.len()],
            step: 0,
            injected: vec![0.0; nd],
            discharged: vec![0.0; nd],
        }
    }

    /// Rebuilds every path population from the road fields under `next`.
    pub fn start_slab(&self, state: &mut SlabState, next: &PolicySlice) -> Result<()> {
        for (k, sub) in self.subnetworks.iter().enumerate() {
            let lambda = compute_split_coefficients(sub, &state.roads);
            let paths = init_path_densities(&self.network, sub, &state.roads, &lambda, next)?;
            let system = path_system(&self.network, sub, &paths);
            state.junctions[k] = Some(JunctionState { lambda, paths, system });
        }
        Ok(())
    }

    /// Advances `steps` time steps under the fixed policy `next`, calling
    /// `observe` after each one.
    pub fn advance_slab(
        &self,
        state: &mut SlabState,
        next: &PolicySlice,
        steps: usize,
        mut observe: impl FnMut(&SlabState),
    ) -> Result<()> {
        self.start_slab(state, next)?;
        for s in 0..steps {
            if s > 0 && self.lambda == LambdaSchedule::PerStep {
                self.start_slab(state, next)?;
            }
            self.step(state, next)?;
            observe(state);
        }
        Ok(())
    }

    /// Per-group flux through the upstream face of the first cell of `road`, which leaves `origin`.
    fn origin_inflow(&self, state: &SlabState, origin: JunctionId, road: RoadId, next: &PolicySlice) -> Result<Vec<f64>> {
        let nd = self.num_dest();
        let mut bc = vec![0.0; nd];
        if self.boundary == BoundaryMode::Closed {
            return Ok(bc);
        }
        for f in self.inflows.iter().filter(|f| f.origin == origin && f.active(state.step) && f.density > 0.0) {
            match next.get(origin, f.dest) {
                Some(r) if r == road => bc[f.dest.0] += f.density,
                Some(_) => {}
                None => {
                    return Err(Error::UnreachablePolicy {
                        junction: origin,
                        dest: f.dest,
                        time: self.grid.time(state.step),
                    })
                }
            }
        }
        let total: f64 = bc.iter().sum();
        if total == 0.0 {
            return Ok(bc);
        }
        let p = self.params(road);
        let g = interface_flux(total, p, state.roads[road.0].total(0), p);
        Ok(bc.iter().map(|&b| g * b / total).collect())
    }

    /// One time step of the coupled system.
    pub fn step(&self, state: &mut SlabState, next: &PolicySlice) -> Result<()> {
        let nd = self.num_dest();
        let ratio = self.grid.ratio();
        let dx = self.grid.dx;
        let nr = self.network.num_roads();
        let mass_before: f64 = state.roads.iter().map(|f| f.total_mass(dx)).sum();

        // Flux from each road interior into the neighborhood at its downstream end.
        let mut to_junction: Vec<Option<Vec<f64>>> = vec![None; nr];
        for r in &self.network.roads {
            if !self.network.is_internal(r.end) {
                continue;
            }
            let field = &state.roads[r.id.0];
            let last = self.interiors[r.id.0].end - 1;
            let p = self.params(r.id);
            let (ul, ur) = (field.total(last), field.total(last + 1));
            let g = interface_flux(ul, p, ur, p);
            to_junction[r.id.0] = Some((0..nd).map(|d| transport_ratio(field.get(d, last), ul) * g).collect());
        }

        // Neighborhoods.
        let mut from_junction: Vec<Vec<f64>> = vec![vec![0.0; nd]; nr];
        let mut new_paths: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.subnetworks.len());
        for (k, sub) in self.subnetworks.iter().enumerate() {
            let js = state.junctions[k].as_ref().ok_or_else(|| Error::Scenario("slab not started".into()))?;
            let values: Vec<Vec<f64>> = js.paths.iter().map(|p| p.profile.clone()).collect();
            let mut inflow = Vec::with_capacity(js.paths.len());
            let mut exits = Vec::with_capacity(js.paths.len());
            for p in &js.paths {
                inflow.push(match p.incoming {
                    Some(i) => to_junction[i.0].as_ref().expect("incoming road ends here")[p.dest.0],
                    None => 0.0,
                });
                exits.push(match p.outgoing {
                    Some(o) => {
                        let lo = self.interiors[o.0].start;
                        PathExit::Ghost { density: state.roads[o.0].total(lo), params: self.params(o) }
                    }
                    None => PathExit::Blocked,
                });
            }
            let stepped = js.system.step(&values, &inflow, &exits, ratio)?;
            for (pi, p) in js.paths.iter().enumerate() {
                if stepped.blocked_density[pi] > 0.0 {
                    return Err(Error::UnreachablePolicy {
                        junction: sub.junction,
                        dest: p.dest,
                        time: self.grid.time(state.step),
                    });
                }
                if let Some(o) = p.outgoing {
                    from_junction[o.0][p.dest.0] += stepped.outflow[pi];
                }
            }
            new_paths.push(stepped.values);
        }

        // Road interiors.
        let mut injected = vec![0.0; nd];
        let mut discharged = vec![0.0; nd];
        let mut roads = state.roads.clone();
        for r in &self.network.roads {
            let range = self.interiors[r.id.0].clone();
            let field = &state.roads[r.id.0];
            let p = self.params(r.id);
            let interior = DensityField::from_profiles(
                &(0..nd).map(|d| field.population(d)[range.clone()].to_vec()).collect::<Vec<_>>(),
            );
            let inflow = match self.network.junction(r.start).kind {
                JunctionKind::Origin => {
                    let f = self.origin_inflow(state, r.start, r.id, next)?;
                    for d in 0..nd {
                        injected[d] += f[d] * self.grid.dt;
                    }
                    f
                }
                _ => from_junction[r.id.0].clone(),
            };
            let outflow = match (&to_junction[r.id.0], self.boundary) {
                (Some(f), _) => Outflow::Flux(f.clone()),
                (None, BoundaryMode::Open) => Outflow::Free,
                (None, BoundaryMode::Closed) => Outflow::Closed,
            };
            if to_junction[r.id.0].is_none() {
                let out = crate::solver::boundary_outflow(&interior, &outflow, p);
                for d in 0..nd {
                    discharged[d] += out[d] * self.grid.dt;
                }
            }
            let stepped = scheme_step(&interior, &inflow, &outflow, p, ratio)?;
            let dst = &mut roads[r.id.0];
            for d in 0..nd {
                dst.population_mut(d)[range.clone()].copy_from_slice(stepped.population(d));
            }
        }

        // Neighborhood cells of the road fields are the sums of the path populations.
        for (k, sub) in self.subnetworks.iter().enumerate() {
            let js = state.junctions[k].as_mut().expect("slab started");
            for seg in sub.inc_segments.iter().chain(&sub.out_segments) {
                for d in 0..nd {
                    roads[seg.road.0].population_mut(d)[seg.cells.clone()].iter_mut().for_each(|v| *v = 0.0);
                }
            }
            for (p, vals) in js.paths.iter_mut().zip(new_paths[k].drain(..)) {
                let mut s = 0;
                let mut deposit = |seg: &Segment, vals: &[f64]| {
                    let dst = roads[seg.road.0].population_mut(p.dest.0);
                    for (c, &v) in seg.cells.clone().zip(vals) {
                        dst[c] += v;
                    }
                };
                if let Some(i) = p.incoming {
                    let seg = sub.inc_segments.iter().find(|s| s.road == i).expect("segment");
                    deposit(seg, &vals[..seg.cells.len()]);
                    s = seg.cells.len();
                }
                if let Some(o) = p.outgoing {
                    let seg = &sub.out_segments[sub.out_position(o).expect("segment")];
                    deposit(seg, &vals[s..]);
                }
                p.profile = vals;
            }
        }
        for (r, f) in roads.iter_mut().enumerate() {
            let rho_max = self.network.roads[r].rho_max;
            f.check(rho_max)?;
            f.settle(rho_max);
        }

        let mass_after: f64 = roads.iter().map(|f| f.total_mass(dx)).sum();
        let residual = (mass_after - mass_before) - (injected.iter().sum::<f64>() - discharged.iter().sum::<f64>());
        if !(residual.abs() <= MASS_BALANCE_TOL) {
            return Err(Error::MassBalance { step: state.step, residual });
        }
        state.roads = roads;
        state.step += 1;
        for d in 0..nd {
            state.injected[d] += injected[d];
            state.discharged[d] += discharged[d];
        }
        Ok(())
    }
}
