#![allow(dead_code)]

use destflow_core::network::{Network, NetworkBuilder, DEFAULT_RHO_MAX, DEFAULT_V_MAX};
use destflow_core::solver::FluxParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub const DX: f64 = 0.01;
pub const DT: f64 = 0.005;

pub struct Shape {
    pub max_junctions: usize,
    /// Cap on incoming roads per junction.
    pub max_in: usize,
    /// Allow roads from later to earlier internal junctions.
    pub cycles: bool,
    /// Draw `rho_max` and `v_max` instead of the unit defaults.
    pub varied_params: bool,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A connected network in which every non-destination junction reaches every
/// destination: origins feed a spine of internal junctions whose last member
/// feeds all destinations, plus random shortcuts.
pub fn random_network(rng: &mut ChaCha8Rng, shape: &Shape) -> Network {
    let n_orig = rng.gen_range(1..=2);
    let n_dest = rng.gen_range(1..=2);
    let n_int = rng.gen_range(2..=shape.max_junctions - n_orig - n_dest);
    let int = |k: usize| format!("i{k}");
    let mut indeg = vec![0usize; n_int + n_dest];
    let mut roads: Vec<(String, String)> = Vec::new();
    for k in 0..n_int - 1 {
        roads.push((int(k), int(k + 1)));
        indeg[k + 1] += 1;
    }
    for d in 0..n_dest {
        roads.push((int(n_int - 1), format!("d{d}")));
        indeg[n_int + d] += 1;
    }
    roads.push(("o0".into(), int(0)));
    indeg[0] += 1;
    for o in 1..n_orig {
        let open: Vec<usize> = (0..n_int).filter(|&k| indeg[k] < shape.max_in).collect();
        let k = open[rng.gen_range(0..open.len())];
        roads.push((format!("o{o}"), int(k)));
        indeg[k] += 1;
    }
    for _ in 0..rng.gen_range(0..=n_int) {
        let a = rng.gen_range(0..n_int);
        let target = rng.gen_range(0..n_int + n_dest);
        let forward = target > a;
        if target == a || (!forward && !shape.cycles) || indeg[target] >= shape.max_in {
            continue;
        }
        let name = if target < n_int { int(target) } else { format!("d{}", target - n_int) };
        roads.push((int(a), name));
        indeg[target] += 1;
    }
    let mut b = NetworkBuilder::new();
    for (k, (s, e)) in roads.iter().enumerate() {
        let cells = rng.gen_range(3..=8) as f64;
        let (rho, v) = if shape.varied_params {
            (rng.gen_range(0.8..1.5), rng.gen_range(0.5..=1.0))
        } else {
            (DEFAULT_RHO_MAX, DEFAULT_V_MAX)
        };
        b.road_with(&format!("r{k}"), s, e, cells * DX, rho, v);
    }
    for d in 0..n_dest {
        b.destination(&format!("d{d}"));
    }
    b.build().expect("generated network is valid")
}

pub fn params(n: &Network, r: destflow_core::RoadId) -> FluxParams {
    let road = n.road(r);
    FluxParams::new(road.rho_max, road.v_max)
}

/// Greenshields flux.
pub fn f(u: f64, p: FluxParams) -> f64 {
    p.v_max * u * (1.0 - u / p.rho_max)
}

/// Classical Godunov flux of a concave flux function.
pub fn scalar_godunov(ul: f64, ur: f64, p: FluxParams) -> f64 {
    let c = 0.5 * p.rho_max;
    if ul <= ur {
        f(ul, p).min(f(ur, p))
    } else if ur < c && c < ul {
        f(c, p)
    } else {
        f(ul, p).max(f(ur, p))
    }
}

/// One step of the scalar scheme with ghost cells `left` and `right`.
pub fn scalar_step(u: &[f64], left: f64, right: f64, p: FluxParams, ratio: f64) -> Vec<f64> {
    let n = u.len();
    let face = |k: usize| -> f64 {
        let ul = if k == 0 { left } else { u[k - 1] };
        let ur = if k == n { right } else { u[k] };
        scalar_godunov(ul, ur, p)
    };
    (0..n).map(|k| u[k] - ratio * (face(k + 1) - face(k))).collect()
}
