//! Fixed points of the map `Xi`: density history -> routes optimal against it -> new history.
//!
//! A fixed point is a state in which nobody, knowing the whole future,
//! would change route. Iterating `Xi` may instead settle on a two-cycle.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::history::DensityHistory;
use crate::network::DestIndex;
use crate::routing::{value_highly_rational, NextPolicy, PolicySlice};
use crate::simulate::{run_basic, run_rational, run_with_policy, RunResult, Scenario};

pub const DEFAULT_MAX_ITERS: usize = 50;

/// Relative tolerance; the absolute one scales with injected mass and horizon.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-6;

/// One iterate: a history together with the policy that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct XiState {
    pub run: RunResult,
    pub iteration: usize,
}

impl XiState {
    pub fn history(&self) -> &DensityHistory {
        &self.run.history
    }

    pub fn policy(&self) -> &NextPolicy {
        &self.run.policy
    }
}

#[derive(Debug, Clone)]
pub enum Guess {
    Basic,
    Rational,
    Provided(DensityHistory),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    PeriodTwoCycle,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub status: Status,
    pub tol: f64,
    /// `|Xi^k(rho) - Xi^(k-1)(rho)|` for every application `k`.
    pub residuals: Vec<f64>,
    /// Distance of each iterate to the one two applications back (`NaN` where undefined).
    pub two_step: Vec<f64>,
    /// The last iterate, or the two members of the detected cycle.
    pub witnesses: Vec<XiState>,
}

/// Discrete L1 distance over destinations, roads, cells and slab boundaries.
pub fn density_distance(a: &DensityHistory, b: &DensityHistory) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::GridMismatch);
    }
    let k = a.slab_steps();
    let w = a.dx() * a.dt() * k as f64;
    let mut sum = 0.0;
    let mut n = 0;
    while n < a.len() {
        for (x, y) in a.frame(n).iter().zip(b.frame(n)) {
            sum += (x - y).abs();
        }
        n += k;
    }
    Ok(sum * w)
}

/// Policy of every slab against the full history `hist`.
pub fn highly_rational_policy(scenario: &Scenario, hist: &DensityHistory) -> Result<NextPolicy> {
    let c = &scenario.coupling;
    let nj = c.network.num_junctions();
    let nd = c.num_dest();
    let mut slabs: Vec<PolicySlice> = (0..scenario.num_slabs()).map(|_| PolicySlice::new(nj, nd)).collect();
    for d in (0..nd).map(DestIndex) {
        let (_, pol) = value_highly_rational(&c.network, hist, d, &scenario.cost, scenario.sweep_cap)?;
        for (h, slab) in slabs.iter_mut().enumerate() {
            slab.set_dest(d, &pol.choices[h * scenario.slab_steps]);
        }
    }
    Ok(NextPolicy { slabs })
}

/// One application of `Xi`.
pub fn xi_apply(scenario: &Scenario, hist: &DensityHistory) -> Result<RunResult> {
    let c = &scenario.coupling;
    let shape = DensityHistory::zeros(&c.grid, c.num_dest(), scenario.slab_steps);
    if !hist.same_shape(&shape) {
        return Err(Error::GridMismatch);
    }
    let policy = highly_rational_policy(scenario, hist)?;
    run_with_policy(scenario, &policy)
}

/// The run the iteration starts from.
pub fn initial_run(scenario: &Scenario, guess: &Guess) -> Result<RunResult> {
    match guess {
        Guess::Basic => run_basic(scenario),
        Guess::Rational => run_rational(scenario),
        Guess::Provided(h) => {
            let policy = highly_rational_policy(scenario, h)?;
            Ok(RunResult {
                history: h.clone(),
                policy,
                events: Vec::new(),
                injected: Vec::new(),
                discharged: Vec::new(),
                final_mass: Vec::new(),
            })
        }
    }
}

/// Default tolerance for a guess run: relative tolerance times injected mass times horizon.
pub fn default_tol(scenario: &Scenario, guess_run: &RunResult) -> f64 {
    let mass = if guess_run.injected.is_empty() { scenario.nominal_injection() } else { guess_run.total_injected() };
    DEFAULT_RELATIVE_TOL * mass * scenario.coupling.grid.horizon
}

/// Iterates `Xi` from the guess until a fixed point or a two-cycle shows up.
/// `tol = None` picks [`default_tol`].
pub fn fixed_point_solve(scenario: &Scenario, guess: Guess, tol: Option<f64>, max_iters: usize) -> Result<ConvergenceReport> {
    if max_iters < 2 {
        return Err(Error::Scenario(alloc::format!("max_iters = {max_iters}, need at least 2")));
    }
    let first = initial_run(scenario, &guess)?;
    let tol = tol.unwrap_or_else(|| default_tol(scenario, &first));
    if !(tol >= 0.0) {
        return Err(Error::Scenario(alloc::format!("tolerance {tol} must be nonnegative")));
    }
    let mut iterates = Vec::with_capacity(3);
    iterates.push(XiState { run: first, iteration: 0 });
    let mut residuals = Vec::new();
    let mut two_step = Vec::new();
    for k in 1..=max_iters {
        let run = xi_apply(scenario, &iterates.last().expect("nonempty").run.history)?;
        let prev = &iterates[iterates.len() - 1];
        let r1 = density_distance(&run.history, &prev.run.history)?;
        let r2 = if iterates.len() >= 2 {
            density_distance(&run.history, &iterates[iterates.len() - 2].run.history)?
        } else {
            f64::NAN
        };
        residuals.push(r1);
        two_step.push(r2);
        let state = XiState { run, iteration: k };
        if r1 <= tol {
            return Ok(ConvergenceReport { status: Status::Converged, tol, residuals, two_step, witnesses: alloc::vec![state] });
        }
        if r2 <= tol {
            let partner = iterates.pop().expect("previous iterate");
            return Ok(ConvergenceReport {
                status: Status::PeriodTwoCycle,
                tol,
                residuals,
                two_step,
                witnesses: alloc::vec![partner, state],
            });
        }
        iterates.push(state);
        if iterates.len() > 2 {
            iterates.remove(0);
        }
    }
    let last = iterates.pop().expect("nonempty");
    Ok(ConvergenceReport { status: Status::MaxIterations, tol, residuals, two_step, witnesses: alloc::vec![last] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::junction::{BoundaryMode, Coupling, Inflow, LambdaSchedule};
    use crate::network::{NetworkBuilder, RoadId};
    use crate::solver::Grid;

    fn chain_scenario() -> Scenario {
        let n = NetworkBuilder::new()
            .road("a", "o", "j", 0.3)
            .road("b", "j", "d", 0.3)
            .destination("d")
            .build()
            .unwrap();
        let g = Grid::new(&n, 0.01, 0.005, 3.0).unwrap();
        let o = n.junction_by_name("o").unwrap();
        let f = Inflow::window(o, DestIndex(0), 0.3, 0.0, Some(0.5), g.dt);
        let c = Coupling::new(n, g, 0.01, vec![f], BoundaryMode::Open, LambdaSchedule::PerSlab).unwrap();
        Scenario::new(c, 1).unwrap()
    }

    #[test]
    fn distance_basics() {
        let s = chain_scenario();
        let g = &s.coupling.grid;
        let a = DensityHistory::zeros(g, 1, 1);
        let mut b = a.clone();
        assert_eq!(density_distance(&a, &b).unwrap(), 0.0);
        b.set(10, DestIndex(0), RoadId(1), 5, 0.1);
        let d = density_distance(&a, &b).unwrap();
        assert!((d - 0.1 * 0.01 * 0.005).abs() < 1e-18);
        let other = DensityHistory::zeros(g, 2, 1);
        assert_eq!(density_distance(&a, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn forced_route_converges_at_once() {
        let s = chain_scenario();
        let rep = fixed_point_solve(&s, Guess::Basic, None, 10).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert!(rep.residuals.len() <= 2);
        assert_eq!(rep.residuals[0], 0.0);
    }
}
