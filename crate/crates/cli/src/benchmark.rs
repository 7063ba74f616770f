//! The eight-road test network with two origins and two destinations.
//!
//! Group 1 enters at `j1` bound for `j7` and can go `r1 r3 r6 r7` or
//! `r1 r2 r5`. Group 2 enters at `j3` bound for `j8` and has the single path
//! `r4 r6 r8`, so the two groups share `r6`.
//!
//! Only the topology is known; the lengths below are a reconstruction. They
//! make `r1 r3 r6 r7` (1.20) strictly shorter than `r1 r2 r5` (1.25) and were
//! picked among nearby multiples of `dx` so that all three driver behaviors
//! show their characteristic outcome.

use std::path::Path;

use destflow_core::network::{Network, NetworkBuilder};

use crate::error::{CliError, Result};
use crate::netfile::serialize_network;
use crate::scenario::ScenarioSpec;

/// `(road, start, end, length)`, reconstructed lengths.
pub const BENCHMARK_ROADS: [(&str, &str, &str, f64); 8] = [
    ("r1", "j1", "j2", 0.35),
    ("r2", "j2", "j4", 0.6),
    ("r3", "j2", "j5", 0.4),
    ("r4", "j3", "j5", 0.45),
    ("r5", "j4", "j7", 0.65),
    ("r6", "j5", "j6", 0.5),
    ("r7", "j6", "j7", 0.3),
    ("r8", "j6", "j8", 0.3),
];

pub const BENCHMARK_DESTINATIONS: [&str; 2] = ["j7", "j8"];

pub const DX: f64 = 0.01;
pub const DT: f64 = 0.005;
pub const HORIZON: f64 = 5.0;
pub const GROUP1_DENSITY: f64 = 0.3;
pub const GROUP2_DENSITY: f64 = 0.4;
/// End of the inflow in the equilibrium scenario, so the network empties.
pub const INFLOW_STOP: f64 = 1.0;

pub fn benchmark_network() -> Network {
    let mut b = NetworkBuilder::new();
    for (name, start, end, len) in BENCHMARK_ROADS {
        b.road(name, start, end, len);
    }
    for d in BENCHMARK_DESTINATIONS {
        b.destination(d);
    }
    b.build().expect("benchmark network is valid")
}

/// Inflow on for the whole horizon, or until [`INFLOW_STOP`] when `stop` is set.
pub fn benchmark_scenario(stop: bool) -> ScenarioSpec {
    let t_off = stop.then_some(INFLOW_STOP);
    ScenarioSpec::new(DX, DT, HORIZON)
        .inflow("j1", "j7", GROUP1_DENSITY, 0.0, t_off)
        .inflow("j3", "j8", GROUP2_DENSITY, 0.0, t_off)
}

/// Writes `benchmark.net`, `benchmark.scenario` and `benchmark-high.scenario` into `dir`.
pub fn emit_benchmark(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let header = "# Reconstructed lengths: the path r1 r3 r6 r7 (1.20) is shorter than r1 r2 r5 (1.25).\n";
    let files = [
        ("benchmark.net", format!("{header}{}", serialize_network(&benchmark_network()))),
        ("benchmark.scenario", benchmark_scenario(false).to_text()),
        ("benchmark-high.scenario", format!("# inflow stops at t = 1 so the network empties\n{}", benchmark_scenario(true).to_text())),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use destflow_core::network::DestIndex;
    use destflow_core::routing::value_basic;
    use destflow_core::{Grid, RunningCost};

    #[test]
    fn shape() {
        let n = benchmark_network();
        assert_eq!((n.num_roads(), n.num_junctions(), n.num_destinations()), (8, 8, 2));
        assert!(n.violations().is_empty());
        assert!(n.delta_violations(DX).is_empty());
    }

    #[test]
    fn group_two_has_one_path() {
        let n = benchmark_network();
        // every junction on the way from j3 to j8 has exactly one outgoing road that still reaches j8
        let j8 = n.junction_by_name("j8").unwrap();
        let reach = n.reaching(j8);
        let mut j = n.junction_by_name("j3").unwrap();
        let mut path = Vec::new();
        while j != j8 {
            let opts: Vec<_> = n.junction(j).out.iter().copied().filter(|&r| reach[n.road(r).end.0]).collect();
            assert_eq!(opts.len(), 1);
            path.push(n.road(opts[0]).name.clone());
            j = n.road(opts[0]).end;
        }
        assert_eq!(path, ["r4", "r6", "r8"]);
    }

    #[test]
    fn short_route_goes_through_r3() {
        let n = benchmark_network();
        let g = Grid::new(&n, DX, DT, HORIZON).unwrap();
        let (_, next) = value_basic(&n, &g, DestIndex(0), &RunningCost::TravelTime).unwrap();
        let j2 = n.junction_by_name("j2").unwrap();
        assert_eq!(next[j2.0], n.road_by_name("r3"));
    }

    #[test]
    fn scenarios_build() {
        let n = benchmark_network();
        assert!(benchmark_scenario(false).build(&n).is_ok());
        assert!(benchmark_scenario(true).has_finite_inflows());
    }
}
