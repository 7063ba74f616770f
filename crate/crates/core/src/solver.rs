//! Multi-population Godunov finite-volume scheme for `u_a_t + (u_a v(u))_x = 0`.
//!
//! Every population is advected with the velocity of the *total* density
//! `u = sum_a u_a`. The interface flux of population `a` is the classical
//! Godunov flux of the total, weighted by the upstream fraction `u_a / u`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::Network;

/// Totals below this are treated as empty when forming `u_a / u`.
pub const TRANSPORT_FLOOR: f64 = 1e-14;

/// Slack allowed when checking that inputs lie in `[0, rho_max]`.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Greenshields fundamental diagram parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    pub rho_max: f64,
    pub v_max: f64,
}

impl FluxParams {
    pub const UNIT: FluxParams = FluxParams { rho_max: 1.0, v_max: 1.0 };

    pub fn new(rho_max: f64, v_max: f64) -> Self {
        FluxParams { rho_max, v_max }
    }

    pub fn critical_density(&self) -> f64 {
        0.5 * self.rho_max
    }

    pub fn max_flux(&self) -> f64 {
        0.25 * self.rho_max * self.v_max
    }

    fn check(&self, u: f64) -> Result<()> {
        if u >= -DOMAIN_TOL && u <= self.rho_max + DOMAIN_TOL {
            Ok(())
        } else {
            Err(Error::Domain { value: u, rho_max: self.rho_max })
        }
    }

    #[inline]
    fn speed(&self, u: f64) -> f64 {
        self.v_max * (1.0 - u / self.rho_max)
    }

    #[inline]
    fn flow(&self, u: f64) -> f64 {
        u * self.speed(u)
    }

    /// Increasing envelope of the flux.
    #[inline]
    pub fn demand(&self, u: f64) -> f64 {
        if u <= self.critical_density() {
            self.flow(u)
        } else {
            self.max_flux()
        }
    }

    /// Decreasing envelope of the flux.
    #[inline]
    pub fn supply(&self, u: f64) -> f64 {
        if u >= self.critical_density() {
            self.flow(u)
        } else {
            self.max_flux()
        }
    }
}

pub fn velocity(u: f64, p: FluxParams) -> Result<f64> {
    p.check(u)?;
    Ok(p.speed(u))
}

pub fn flux(u: f64, p: FluxParams) -> Result<f64> {
    p.check(u)?;
    Ok(p.flow(u))
}

/// Godunov numerical flux for the concave Greenshields flux: `min(demand(ul), supply(ur))`.
pub fn godunov_numerical_flux(u_left: f64, u_right: f64, p: FluxParams) -> Result<f64> {
    p.check(u_left)?;
    p.check(u_right)?;
    Ok(interface_flux(u_left, p, u_right, p))
}

/// Godunov flux across an interface where the flux function may jump.
#[inline]
pub fn interface_flux(u_left: f64, p_left: FluxParams, u_right: f64, p_right: FluxParams) -> f64 {
    let d = p_left.demand(u_left);
    let s = p_right.supply(u_right);
    if d < s {
        d
    } else {
        s
    }
}

/// Fraction of the interface flux carried by a population of density `part`
/// in a cell of total density `total`.
#[inline]
pub fn transport_ratio(part: f64, total: f64) -> f64 {
    if total == 0.0 || total < TRANSPORT_FLOOR {
        0.0
    } else {
        part / total
    }
}

pub fn check_cfl(dx: f64, dt: f64, v_max: f64) -> bool {
    dt * v_max <= dx
}

/// Space-time discretization shared by every road.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dx: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Number of time steps, `horizon / dt`.
    pub steps: usize,
    /// Cell count per road, indexed by road id.
    pub cells_per_road: Vec<usize>,
}

/// `x / unit` when it is an integer up to round-off.
pub fn integer_ratio(x: f64, unit: f64) -> Option<usize> {
    let q = x / unit;
    let n = libm::round(q);
    if n < 0.0 || (q - n).abs() > 1e-9 * n.max(1.0) {
        None
    } else {
        Some(n as usize)
    }
}

impl Grid {
    pub fn new(network: &Network, dx: f64, dt: f64, horizon: f64) -> Result<Grid> {
        if !(dx > 0.0 && dt > 0.0 && dx.is_finite() && dt.is_finite()) {
            return Err(Error::Grid(alloc::format!("dx = {dx} and dt = {dt} must be positive")));
        }
        let v_max = network.max_speed();
        if !check_cfl(dx, dt, v_max) {
            return Err(Error::Cfl { dx, dt, v_max });
        }
        let steps = integer_ratio(horizon, dt).ok_or_else(|| {
            Error::Grid(alloc::format!("horizon {horizon} is not a multiple of dt = {dt}"))
        })?;
        let cells_per_road = network
            .roads
            .iter()
            .map(|r| {
                integer_ratio(r.length(), dx).filter(|&n| n > 0).ok_or_else(|| {
                    Error::Grid(alloc::format!(
                        "road {} has length {}, not a positive multiple of dx = {dx}",
                        r.name,
                        r.length()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Grid { dx, dt, horizon, steps, cells_per_road })
    }

    /// `dt / dx`.
    pub fn ratio(&self) -> f64 {
        self.dt / self.dx
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn total_cells(&self) -> usize {
        self.cells_per_road.iter().sum()
    }
}

/// Cell averages of several populations on one shared 1-D domain,
/// stored population-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    populations: usize,
    cells: usize,
    values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(populations: usize, cells: usize) -> Self {
        DensityField { populations, cells, values: vec![0.0; populations * cells] }
    }

    /// Builds a field from one profile per population.
    pub fn from_profiles(profiles: &[Vec<f64>]) -> Self {
        let cells = profiles.first().map_or(0, |p| p.len());
        assert!(profiles.iter().all(|p| p.len() == cells), "ragged profiles");
        let values = profiles.iter().flat_map(|p| p.iter().copied()).collect();
        DensityField { populations: profiles.len(), cells, values }
    }

    pub fn populations(&self) -> usize {
        self.populations
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn get(&self, population: usize, cell: usize) -> f64 {
        self.values[population * self.cells + cell]
    }

    #[inline]
    pub fn set(&mut self, population: usize, cell: usize, value: f64) {
        self.values[population * self.cells + cell] = value;
    }

    pub fn population(&self, population: usize) -> &[f64] {
        &self.values[population * self.cells..(population + 1) * self.cells]
    }

    pub fn population_mut(&mut self, population: usize) -> &mut [f64] {
        &mut self.values[population * self.cells..(population + 1) * self.cells]
    }

    /// Total density in `cell`.
    #[inline]
    pub fn total(&self, cell: usize) -> f64 {
        let mut s = 0.0;
        for a in 0..self.populations {
            s += self.values[a * self.cells + cell];
        }
        s
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.cells).map(|k| self.total(k)).collect()
    }

    /// Integral of population `a` over the domain.
    pub fn mass(&self, population: usize, dx: f64) -> f64 {
        self.population(population).iter().sum::<f64>() * dx
    }

    pub fn total_mass(&self, dx: f64) -> f64 {
        self.values.iter().sum::<f64>() * dx
    }

    /// Removes round-off excursions below zero or above `rho_max`, taking any
    /// excess from the largest population of the cell. Meant for fields that
    /// already passed [`DensityField::check`].
    pub fn settle(&mut self, rho_max: f64) {
        for k in 0..self.cells {
            for a in 0..self.populations {
                let v = &mut self.values[a * self.cells + k];
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let mut total = self.total(k);
            while total > rho_max {
                let a = (0..self.populations)
                    .max_by(|&x, &y| self.get(x, k).total_cmp(&self.get(y, k)))
                    .expect("a cell above rho_max has populations");
                let v = self.get(a, k);
                let cut = (total - rho_max).max(v * f64::EPSILON);
                self.set(a, k, (v - cut).max(0.0));
                total = self.total(k);
            }
        }
    }

    /// Checks `0 <= u_a <= u <= rho_max` everywhere (with [`DOMAIN_TOL`] slack on the bounds).
    pub fn check(&self, rho_max: f64) -> Result<()> {
        for k in 0..self.cells {
            let mut total = 0.0;
            for a in 0..self.populations {
                let v = self.get(a, k);
                if !(v >= -DOMAIN_TOL) {
                    return Err(Error::Invariant { what: "negative density", cell: k, value: v });
                }
                total += v;
            }
            if !(total <= rho_max + DOMAIN_TOL) {
                return Err(Error::Invariant { what: "density above rho_max", cell: k, value: total });
            }
        }
        Ok(())
    }
}

/// Downstream boundary of a 1-D domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Outflow {
    /// Transmissive: the ghost cell copies the last cell.
    Free,
    /// No flux leaves.
    Closed,
    /// A neighbouring cell of total density `density` under its own flux function.
    Ghost { density: f64, params: FluxParams },
    /// Flux per population, computed elsewhere.
    Flux(Vec<f64>),
}

/// Flux per population leaving the last cell of `field` under `outflow`.
pub fn boundary_outflow(field: &DensityField, outflow: &Outflow, p: FluxParams) -> Vec<f64> {
    let np = field.populations();
    let last = match field.cells().checked_sub(1) {
        Some(l) => l,
        None => return vec![0.0; np],
    };
    let total = field.total(last);
    let g = match outflow {
        Outflow::Closed => return vec![0.0; np],
        Outflow::Flux(f) => return f.clone(),
        Outflow::Free => interface_flux(total, p, total, p),
        Outflow::Ghost { density, params } => interface_flux(total, p, *density, *params),
    };
    (0..np).map(|a| transport_ratio(field.get(a, last), total) * g).collect()
}

/// One explicit step of the multi-population Godunov scheme on a single domain.
///
/// `inflow[a]` enters through the upstream face; the downstream face follows
/// `outflow`. `ratio` is `dt / dx`.
pub fn scheme_step(
    field: &DensityField,
    inflow: &[f64],
    outflow: &Outflow,
    p: FluxParams,
    ratio: f64,
) -> Result<DensityField> {
    if !check_cfl(1.0, ratio, p.v_max) {
        return Err(Error::Cfl { dx: 1.0, dt: ratio, v_max: p.v_max });
    }
    let np = field.populations();
    let nc = field.cells();
    assert_eq!(inflow.len(), np, "one inflow per population");
    let mut next = field.clone();
    if nc == 0 {
        return Ok(next);
    }
    let totals = field.totals();
    // g[k] is the total flux through the face between cells k and k+1.
    let g: Vec<f64> = (0..nc - 1).map(|k| interface_flux(totals[k], p, totals[k + 1], p)).collect();
    let out = boundary_outflow(field, outflow, p);
    for a in 0..np {
        let u = field.population(a);
        let dst = next.population_mut(a);
        let mut left = inflow[a];
        for k in 0..nc {
            let right = if k + 1 < nc { transport_ratio(u[k], totals[k]) * g[k] } else { out[a] };
            dst[k] = u[k] - ratio * (right - left);
            left = right;
        }
    }
    next.check(p.rho_max)?;
    next.settle(p.rho_max);
    Ok(next)
}

/// Downstream end of one path in a [`PathSystem`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathExit {
    /// Next cell outside the system, with its total density and flux function.
    Ghost { density: f64, params: FluxParams },
    /// Nothing may leave.
    Blocked,
}

/// Several populations, each living on its own chain of cells, with chains
/// allowed to share cells. The flux between two consecutive cells of a chain
/// uses the totals of *all* populations in those cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSystem {
    pub cell_params: Vec<FluxParams>,
    pub paths: Vec<Vec<usize>>,
}

/// Result of [`PathSystem::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub values: Vec<Vec<f64>>,
    /// Flux leaving the downstream end of each path.
    pub outflow: Vec<f64>,
    /// Largest density of a population stuck in front of a [`PathExit::Blocked`] end
    /// while its cell carries transportable mass, per path.
    pub blocked_density: Vec<f64>,
}

impl PathSystem {
    pub fn totals(&self, values: &[Vec<f64>]) -> Vec<f64> {
        let mut t = vec![0.0; self.cell_params.len()];
        for (path, vals) in self.paths.iter().zip(values) {
            for (&c, &v) in path.iter().zip(vals) {
                t[c] += v;
            }
        }
        t
    }

    pub fn step(&self, values: &[Vec<f64>], inflow: &[f64], exits: &[PathExit], ratio: f64) -> Result<PathStep> {
        let totals = self.totals(values);
        let mut out_values = Vec::with_capacity(values.len());
        let mut outflow = Vec::with_capacity(values.len());
        let mut blocked_density = Vec::with_capacity(values.len());
        for (pi, (path, u)) in self.paths.iter().zip(values).enumerate() {
            let mut next = u.clone();
            let mut left = inflow[pi];
            let mut blocked = 0.0;
            for s in 0..path.len() {
                let c = path[s];
                let frac = transport_ratio(u[s], totals[c]);
                let right = if s + 1 < path.len() {
                    let c2 = path[s + 1];
                    frac * interface_flux(totals[c], self.cell_params[c], totals[c2], self.cell_params[c2])
                } else {
                    match exits[pi] {
                        PathExit::Ghost { density, params } => {
                            frac * interface_flux(totals[c], self.cell_params[c], density, params)
                        }
                        PathExit::Blocked => {
                            if frac > 0.0 && u[s] >= TRANSPORT_FLOOR {
                                blocked = u[s];
                            }
                            0.0
                        }
                    }
                };
                next[s] = u[s] - ratio * (right - left);
                if s + 1 == path.len() {
                    outflow.push(right);
                }
                left = right;
            }
            if path.is_empty() {
                outflow.push(0.0);
            }
            out_values.push(next);
            blocked_density.push(blocked);
        }
        let new_totals = self.totals(&out_values);
        for (pi, vals) in out_values.iter().enumerate() {
            for (s, &v) in vals.iter().enumerate() {
                if !(v >= -DOMAIN_TOL) {
                    return Err(Error::Invariant { what: "negative path density", cell: self.paths[pi][s], value: v });
                }
            }
        }
        for (c, (&t, p)) in new_totals.iter().zip(&self.cell_params).enumerate() {
            if !(t <= p.rho_max + DOMAIN_TOL) {
                return Err(Error::Invariant { what: "path density above rho_max", cell: c, value: t });
            }
        }
        Ok(PathStep { values: out_values, outflow, blocked_density })
    }
}
