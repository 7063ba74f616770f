mod common;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use common::{random_network, rng, Shape, DT, DX};
use destflow_core::network::{DestIndex, JunctionKind, Network, NetworkBuilder, RoadId};
use destflow_core::routing::{
    bellman_residual, empty_network_weights, extract_next, snapshot_weights, value_basic, value_highly_rational,
    value_rational, RunningCost, DEFAULT_SWEEP_CAP,
};
use destflow_core::{DensityHistory, Grid};
use proptest::prelude::*;
use rand::Rng;

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distances to `target` over reversed roads with weight `length / v_max`.
fn dijkstra(n: &Network, target: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n.num_junctions()];
    dist[target] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, target)]);
    while let Some(Entry(d, j)) = heap.pop() {
        if d > dist[j] {
            continue;
        }
        for &r in &n.junctions[j].inc {
            let road = n.road(r);
            let cand = d + road.length() / road.v_max;
            if cand < dist[road.start.0] {
                dist[road.start.0] = cand;
                heap.push(Entry(cand, road.start.0));
            }
        }
    }
    dist
}

const BIG: Shape = Shape { max_junctions: 50, max_in: 50, cycles: true, varied_params: true };
const SMALL: Shape = Shape { max_junctions: 10, max_in: 3, cycles: true, varied_params: false };

#[test]
fn basic_values_match_dijkstra_on_100_networks() {
    for seed in 0..100 {
        let n = random_network(&mut rng(seed), &BIG);
        let g = Grid::new(&n, DX, DT, 1.0).unwrap();
        for d in 0..n.num_destinations() {
            let (table, next) = value_basic(&n, &g, DestIndex(d), &RunningCost::TravelTime).unwrap();
            let oracle = dijkstra(&n, n.destinations[d].0);
            for (j, (&v, &o)) in table.values[0].iter().zip(&oracle).enumerate() {
                assert!(v == o || (v - o).abs() <= 1e-12, "seed {seed} junction {j}: {v} vs {o}");
            }
            for j in &n.junctions {
                match next[j.id.0] {
                    Some(r) => {
                        let road = n.road(r);
                        let via = road.length() / road.v_max + oracle[road.end.0];
                        assert!((via - oracle[j.id.0]).abs() <= 1e-12);
                    }
                    None => assert!(j.kind == JunctionKind::Destination || !oracle[j.id.0].is_finite()),
                }
            }
        }
    }
}

fn random_totals(rng: &mut rand_chacha::ChaCha8Rng, g: &Grid) -> Vec<Vec<f64>> {
    g.cells_per_road.iter().map(|&c| (0..c).map(|_| rng.gen_range(0.0..0.95)).collect()).collect()
}

proptest! {
    #[test]
    fn more_traffic_never_shortens_a_route(seed in any::<u64>(), scale in 1.0..1.05f64) {
        let mut rng = rng(seed);
        let n = random_network(&mut rng, &SMALL);
        let g = Grid::new(&n, DX, DT, 1.0).unwrap();
        let light = random_totals(&mut rng, &g);
        let heavy: Vec<Vec<f64>> = light.iter().map(|r| r.iter().map(|&u| (u * scale).min(0.99)).collect()).collect();
        for d in (0..n.num_destinations()).map(DestIndex) {
            let (a, _) = value_rational(&n, DX, d, &light, 0.0, &RunningCost::TravelTime).unwrap();
            let (b, _) = value_rational(&n, DX, d, &heavy, 0.0, &RunningCost::TravelTime).unwrap();
            for (x, y) in a.values[0].iter().zip(&b.values[0]) {
                prop_assert!(x <= y);
            }
        }
    }

    #[test]
    fn scaling_the_cost_scales_values_and_keeps_routes(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = random_network(&mut rng, &SMALL);
        let g = Grid::new(&n, DX, DT, 1.0).unwrap();
        let totals = random_totals(&mut rng, &g);
        let double = RunningCost::PerRoad(|_, _, _| 2.0);
        for d in (0..n.num_destinations()).map(DestIndex) {
            let (a, pa) = value_rational(&n, DX, d, &totals, 0.0, &RunningCost::TravelTime).unwrap();
            let (b, pb) = value_rational(&n, DX, d, &totals, 0.0, &double).unwrap();
            prop_assert_eq!(pa, pb);
            for (x, y) in a.values[0].iter().zip(&b.values[0]) {
                prop_assert!(*y == 2.0 * x);
            }
        }
    }

    #[test]
    fn values_satisfy_the_triangle_inequality(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = random_network(&mut rng, &SMALL);
        let g = Grid::new(&n, DX, DT, 1.0).unwrap();
        let totals = random_totals(&mut rng, &g);
        for d in (0..n.num_destinations()).map(DestIndex) {
            let w = snapshot_weights(&n, DX, &totals, 0.0, d, &RunningCost::TravelTime);
            let (t, next) = value_rational(&n, DX, d, &totals, 0.0, &RunningCost::TravelTime).unwrap();
            let v = &t.values[0];
            prop_assert_eq!(bellman_residual(&n, v, &w), 0.0);
            prop_assert_eq!(&extract_next(v, &n, &w), &next);
            for r in &n.roads {
                prop_assert!(v[r.start.0] <= w[r.id.0] + v[r.end.0]);
            }
        }
    }
}

#[test]
fn empty_weights_are_free_flow_times() {
    let n = random_network(&mut rng(7), &BIG);
    let g = Grid::new(&n, DX, DT, 1.0).unwrap();
    let w = empty_network_weights(&n, &g, DestIndex(0), &RunningCost::TravelTime);
    for r in &n.roads {
        assert!((w[r.id.0] - r.length() / r.v_max).abs() <= 1e-14);
    }
}

fn diamond() -> Network {
    NetworkBuilder::new()
        .road("in", "o", "j", 0.2)
        .road("short", "j", "d", 0.3)
        .road("long", "j", "d", 0.5)
        .destination("d")
        .build()
        .unwrap()
}

#[test]
fn scripted_jam_moves_the_switch_time() {
    // the short branch sits at density 0.9 (speed 0.1) until t = 1 and is empty afterwards;
    // leaving j at slot n it costs 0.3 + 0.09 c, c = cells entered before t = 1,
    // which beats the long branch (0.5) from slot 160 (c = 2) on
    let n = diamond();
    let g = Grid::new(&n, DX, DT, 3.0).unwrap();
    let mut h = DensityHistory::zeros(&g, 1, 1);
    let short = n.road_by_name("short").unwrap();
    for step in 0..200 {
        for k in 0..30 {
            h.set(step, DestIndex(0), short, k, 0.9);
        }
    }
    let (table, pol) = value_highly_rational(&n, &h, DestIndex(0), &RunningCost::TravelTime, DEFAULT_SWEEP_CAP).unwrap();
    let j = n.junction_by_name("j").unwrap().0;
    let long = n.road_by_name("long");
    for step in 0..h.len() {
        let want = match step {
            0..=159 => long,
            160..=540 => Some(short),
            _ => None,
        };
        assert_eq!(pol.choices[step][j], want, "slot {step}");
    }
    assert!((table.values[159][j] - 0.5).abs() < 1e-12);
    assert!((table.values[160][j] - 0.48).abs() < 1e-12);
    assert!((table.values[300][j] - 0.3).abs() < 1e-12);
    assert!(table.values[541][j].is_infinite());
}

#[test]
fn unreachable_destination_has_no_route() {
    // j2 only reaches d1, so d2 is infinite there and NEXT is None
    let n = NetworkBuilder::new()
        .road("a", "o", "j1", 0.2)
        .road("b", "j1", "d2", 0.2)
        .road("c", "j1", "j2", 0.2)
        .road("e", "j2", "d1", 0.2)
        .destination("d1")
        .destination("d2")
        .build_unchecked();
    let g = Grid::new(&n, DX, DT, 1.0).unwrap();
    let (t, next) = value_basic(&n, &g, DestIndex(1), &RunningCost::TravelTime).unwrap();
    let j2 = n.junction_by_name("j2").unwrap();
    assert!(t.at(0, j2).is_infinite());
    assert_eq!(next[j2.0], None);
    assert_eq!(next[n.junction_by_name("j1").unwrap().0], Some(RoadId(1)));
}
