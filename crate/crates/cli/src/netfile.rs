//! Line-oriented network files.
//!
//! ```text
//! # comment
//! road <id> <start-junction> <end-junction> <length> [rho_max] [v_max]
//! destination <junction>
//! origin <junction>
//! ```
//!
//! Junction ids are numbered by first appearance in the road lines and
//! destinations by the order of their lines. Origin lines are optional; when
//! present they must match the junctions without incoming roads.

use std::fmt::Write as _;

use destflow_core::network::{Network, NetworkBuilder, DEFAULT_RHO_MAX, DEFAULT_V_MAX};

use crate::error::{CliError, Result};

fn number(file: &str, line: usize, what: &str, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Parse { file: file.into(), line, msg: format!("{what} `{tok}` is not a number") })
}

/// Parses and validates a network file. `file` names the source in messages.
pub fn parse_network(text: &str, file: &str) -> Result<Network> {
    let mut b = NetworkBuilder::new();
    let mut road_names: Vec<&str> = Vec::new();
    let mut junctions: Vec<&str> = Vec::new();
    let mut later: Vec<(usize, &str, &str)> = Vec::new();
    let err = |line: usize, msg: String| CliError::Parse { file: file.into(), line, msg };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tok: Vec<&str> = content.split_whitespace().collect();
        let Some(&kw) = tok.first() else { continue };
        match kw {
            "road" => {
                if !(5..=7).contains(&tok.len()) {
                    return Err(err(line, "expected `road <id> <start> <end> <length> [rho_max] [v_max]`".into()));
                }
                if road_names.contains(&tok[1]) {
                    return Err(err(line, format!("duplicate road `{}`", tok[1])));
                }
                let len = number(file, line, "length", tok[4])?;
                let rho = tok.get(5).map(|t| number(file, line, "rho_max", t)).transpose()?.unwrap_or(DEFAULT_RHO_MAX);
                let v = tok.get(6).map(|t| number(file, line, "v_max", t)).transpose()?.unwrap_or(DEFAULT_V_MAX);
                for j in [tok[2], tok[3]] {
                    if !junctions.contains(&j) {
                        junctions.push(j);
                    }
                }
                road_names.push(tok[1]);
                b.road_with(tok[1], tok[2], tok[3], len, rho, v);
            }
            "destination" | "origin" => {
                if tok.len() != 2 {
                    return Err(err(line, format!("expected `{kw} <junction>`")));
                }
                later.push((line, kw, tok[1]));
            }
            other => return Err(err(line, format!("unknown keyword `{other}`"))),
        }
    }
    for (line, kw, j) in later {
        if !junctions.contains(&j) {
            return Err(err(line, format!("{kw} `{j}` is not an endpoint of any road")));
        }
        if kw == "destination" {
            b.destination(j);
        } else {
            b.origin(j);
        }
    }
    b.build().map_err(CliError::Network)
}

/// Writes `n` in the format read by [`parse_network`].
pub fn serialize_network(n: &Network) -> String {
    let mut s = String::new();
    for r in &n.roads {
        let start = &n.junction(r.start).name;
        let end = &n.junction(r.end).name;
        let _ = write!(s, "road {} {start} {end} {}", r.name, r.length());
        if r.rho_max != DEFAULT_RHO_MAX || r.v_max != DEFAULT_V_MAX {
            let _ = write!(s, " {} {}", r.rho_max, r.v_max);
        }
        s.push('\n');
    }
    for &d in &n.destinations {
        let _ = writeln!(s, "destination {}", n.junction(d).name);
    }
    for &o in &n.origins {
        let _ = writeln!(s, "origin {}", n.junction(o).name);
    }
    s
}
