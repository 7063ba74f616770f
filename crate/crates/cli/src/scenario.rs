//! Scenario files.
//!
//! ```text
//! dx 0.01
//! dt 0.005
//! horizon 5
//! delta 0.01
//! slab 0.005                      # policy update interval, a multiple of dt
//! inflow j1 j7 0.3 0 1            # origin, destination junction, density, t_on, t_off|inf
//! tol 1e-4                        # optional absolute tolerance for the equilibrium solve
//! max-iters 50
//! guess basic                     # basic | rational
//! lambda per-slab                 # per-slab | per-step
//! boundary open                   # open | closed
//! ```
//!
//! `dx`, `dt` and `horizon` are required; `delta` defaults to `dx` and `slab` to `dt`.

use destflow_core::junction::{BoundaryMode, Coupling, Inflow, LambdaSchedule};
use destflow_core::network::Network;
use destflow_core::solver::{integer_ratio, Grid};
use destflow_core::{equilibrium, Scenario};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessKind {
    Basic,
    Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InflowSpec {
    pub origin: String,
    pub destination: String,
    pub density: f64,
    pub t_on: f64,
    pub t_off: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub dx: f64,
    pub dt: f64,
    pub horizon: f64,
    pub delta: f64,
    pub slab: f64,
    pub inflows: Vec<InflowSpec>,
    pub tol: Option<f64>,
    pub max_iters: usize,
    pub guess: GuessKind,
    pub lambda: LambdaSchedule,
    pub boundary: BoundaryMode,
}

impl ScenarioSpec {
    pub fn new(dx: f64, dt: f64, horizon: f64) -> Self {
        ScenarioSpec {
            dx,
            dt,
            horizon,
            delta: dx,
            slab: dt,
            inflows: Vec::new(),
            tol: None,
            max_iters: equilibrium::DEFAULT_MAX_ITERS,
            guess: GuessKind::Basic,
            lambda: LambdaSchedule::PerSlab,
            boundary: BoundaryMode::Open,
        }
    }

    pub fn inflow(mut self, origin: &str, destination: &str, density: f64, t_on: f64, t_off: Option<f64>) -> Self {
        self.inflows.push(InflowSpec { origin: origin.into(), destination: destination.into(), density, t_on, t_off });
        self
    }

    pub fn has_finite_inflows(&self) -> bool {
        self.inflows.iter().all(|f| f.t_off.is_some())
    }

    /// Resolves names against `network` and builds the core scenario.
    pub fn build(&self, network: &Network) -> Result<Scenario> {
        let grid = Grid::new(network, self.dx, self.dt, self.horizon)?;
        let mut inflows = Vec::with_capacity(self.inflows.len());
        for f in &self.inflows {
            let origin = network
                .junction_by_name(&f.origin)
                .ok_or_else(|| CliError::Scenario(format!("inflow origin `{}` is not a junction", f.origin)))?;
            let dest = network
                .junction_by_name(&f.destination)
                .and_then(|j| network.dest_index(j))
                .ok_or_else(|| CliError::Scenario(format!("inflow target `{}` is not a destination", f.destination)))?;
            if let Some(off) = f.t_off {
                if off < f.t_on {
                    return Err(CliError::Scenario(format!("inflow window [{}, {off}) is reversed", f.t_on)));
                }
            }
            inflows.push(Inflow::window(origin, dest, f.density, f.t_on, f.t_off, grid.dt));
        }
        let slab_steps = integer_ratio(self.slab, self.dt)
            .filter(|&k| k > 0)
            .ok_or_else(|| CliError::Scenario(format!("slab {} is not a positive multiple of dt = {}", self.slab, self.dt)))?;
        let coupling = Coupling::new(network.clone(), grid, self.delta, inflows, self.boundary, self.lambda)?;
        Ok(Scenario::new(coupling, slab_steps)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "dx {}\ndt {}\nhorizon {}\ndelta {}\nslab {}\n",
            self.dx, self.dt, self.horizon, self.delta, self.slab
        );
        for f in &self.inflows {
            let off = f.t_off.map_or("inf".to_string(), |t| t.to_string());
            s += &format!("inflow {} {} {} {} {off}\n", f.origin, f.destination, f.density, f.t_on);
        }
        if let Some(tol) = self.tol {
            s += &format!("tol {tol}\n");
        }
        s += &format!("max-iters {}\n", self.max_iters);
        s += match self.guess {
            GuessKind::Basic => "guess basic\n",
            GuessKind::Rational => "guess rational\n",
        };
        s += match self.lambda {
            LambdaSchedule::PerSlab => "lambda per-slab\n",
            LambdaSchedule::PerStep => "lambda per-step\n",
        };
        s += match self.boundary {
            BoundaryMode::Open => "boundary open\n",
            BoundaryMode::Closed => "boundary closed\n",
        };
        s
    }
}

pub fn parse_scenario(text: &str, file: &str) -> Result<ScenarioSpec> {
    let err = |line: usize, msg: String| CliError::Parse { file: file.into(), line, msg };
    let num = |line: usize, tok: &str| -> Result<f64> {
        tok.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(line, format!("`{tok}` is not a number")))
    };
    let (mut dx, mut dt, mut horizon, mut delta, mut slab) = (None, None, None, None, None);
    let mut spec = ScenarioSpec::new(0.0, 0.0, 0.0);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tok: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        let Some(&kw) = tok.first() else { continue };
        let arity = if kw == "inflow" { 6 } else { 2 };
        if tok.len() != arity {
            return Err(err(line, format!("`{kw}` takes {} argument(s)", arity - 1)));
        }
        match kw {
            "dx" => dx = Some(num(line, tok[1])?),
            "dt" => dt = Some(num(line, tok[1])?),
            "horizon" => horizon = Some(num(line, tok[1])?),
            "delta" => delta = Some(num(line, tok[1])?),
            "slab" => slab = Some(num(line, tok[1])?),
            "tol" => spec.tol = Some(num(line, tok[1])?),
            "max-iters" => {
                spec.max_iters = tok[1].parse().map_err(|_| err(line, format!("`{}` is not a count", tok[1])))?
            }
            "guess" => {
                spec.guess = match tok[1] {
                    "basic" => GuessKind::Basic,
                    "rational" => GuessKind::Rational,
                    other => return Err(err(line, format!("unknown guess `{other}`"))),
                }
            }
            "lambda" => {
                spec.lambda = match tok[1] {
                    "per-slab" => LambdaSchedule::PerSlab,
                    "per-step" => LambdaSchedule::PerStep,
                    other => return Err(err(line, format!("unknown lambda schedule `{other}`"))),
                }
            }
            "boundary" => {
                spec.boundary = match tok[1] {
                    "open" => BoundaryMode::Open,
                    "closed" => BoundaryMode::Closed,
                    other => return Err(err(line, format!("unknown boundary mode `{other}`"))),
                }
            }
            "inflow" => {
                let t_off = if tok[5] == "inf" { None } else { Some(num(line, tok[5])?) };
                spec.inflows.push(InflowSpec {
                    origin: tok[1].into(),
                    destination: tok[2].into(),
                    density: num(line, tok[3])?,
                    t_on: num(line, tok[4])?,
                    t_off,
                });
            }
            other => return Err(err(line, format!("unknown keyword `{other}`"))),
        }
    }
    let missing = |what: &str| CliError::Parse { file: file.into(), line: 0, msg: format!("missing `{what}`") };
    spec.dx = dx.ok_or_else(|| missing("dx"))?;
    spec.dt = dt.ok_or_else(|| missing("dt"))?;
    spec.horizon = horizon.ok_or_else(|| missing("horizon"))?;
    spec.delta = delta.unwrap_or(spec.dx);
    spec.slab = slab.unwrap_or(spec.dt);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use destflow_core::NetworkBuilder;

    fn chain() -> Network {
        NetworkBuilder::new().road("a", "o", "j", 0.1).road("b", "j", "d", 0.1).destination("d").build().unwrap()
    }

    #[test]
    fn defaults_and_round_trip() {
        let s = parse_scenario("dx 0.01\ndt 0.005\nhorizon 1\ninflow o d 0.3 0 inf\n", "s").unwrap();
        assert_eq!(s.delta, 0.01);
        assert_eq!(s.slab, 0.005);
        assert_eq!(s.max_iters, 50);
        assert!(!s.has_finite_inflows());
        assert_eq!(parse_scenario(&s.to_text(), "again").unwrap(), s);
    }

    #[test]
    fn builds_against_network() {
        let s = ScenarioSpec::new(0.01, 0.005, 1.0).inflow("o", "d", 0.3, 0.0, Some(0.5));
        let sc = s.build(&chain()).unwrap();
        assert_eq!(sc.slab_steps, 1);
        assert_eq!(sc.coupling.inflows[0].end_step, Some(100));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_scenario("dx 0.01\ndt 0.005\n", "s"), Err(CliError::Parse { .. })));
        assert!(matches!(parse_scenario("dx 0.01\nspeed 2\n", "s"), Err(CliError::Parse { line: 2, .. })));
        assert!(matches!(parse_scenario("inflow o d 0.3 0\n", "s"), Err(CliError::Parse { line: 1, .. })));
        let n = chain();
        let bad_target = ScenarioSpec::new(0.01, 0.005, 1.0).inflow("o", "j", 0.3, 0.0, None);
        assert!(matches!(bad_target.build(&n), Err(CliError::Scenario(_))));
        let jam = ScenarioSpec::new(0.01, 0.005, 1.0).inflow("o", "d", 1.0, 0.0, None);
        assert!(jam.build(&n).is_err());
        let mut slab = ScenarioSpec::new(0.01, 0.005, 1.0);
        slab.slab = 0.0075;
        assert!(slab.build(&n).is_err());
        let cfl = ScenarioSpec::new(0.01, 0.02, 1.0);
        assert!(matches!(cfl.build(&n), Err(CliError::Model(destflow_core::Error::Cfl { .. }))));
    }
}
