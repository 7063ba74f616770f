//! CSV export.

use std::fmt::Write as _;

use destflow_core::equilibrium::{ConvergenceReport, Status};
use destflow_core::network::{Network, RoadId};
use destflow_core::simulate::PolicyEvent;
use destflow_core::DensityHistory;

/// `printf("%.9g")`.
pub fn fmt_g9(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let s = format!("{v:.*}", (8 - exp) as usize);
        trim_fraction(&s).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const DENSITY_HEADER: &str = "t,road,x,dest,density\n";
pub const EVENT_HEADER: &str = "t,junction,dest,from_road,to_road\n";
pub const DIAGNOSTICS_HEADER: &str = "iteration,residual,two_step_residual,status\n";

/// One row per time level (every `stride`-th), road, cell and destination.
pub fn densities_csv(network: &Network, hist: &DensityHistory, stride: usize) -> String {
    let stride = stride.max(1);
    let mut s = String::from(DENSITY_HEADER);
    let nd = hist.num_dest();
    for n in (0..hist.len()).step_by(stride) {
        let t = fmt_g9(n as f64 * hist.dt());
        for road in &network.roads {
            for k in 0..hist.cells(road.id) {
                let x = fmt_g9(road.a + (k as f64 + 0.5) * hist.dx());
                for d in 0..nd {
                    let v = hist.density(n, destflow_core::DestIndex(d), road.id, k);
                    let _ = writeln!(s, "{t},{},{x},{},{}", road.name, d + 1, fmt_g9(v));
                }
            }
        }
    }
    s
}

fn road_name(network: &Network, r: Option<RoadId>) -> &str {
    r.map_or("none", |r| network.road(r).name.as_str())
}

pub fn events_csv(network: &Network, events: &[PolicyEvent]) -> String {
    let mut s = String::from(EVENT_HEADER);
    for e in events {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_g9(e.time),
            network.junction(e.junction).name,
            e.dest.0 + 1,
            road_name(network, e.from),
            road_name(network, e.to)
        );
    }
    s
}

pub fn status_label(status: Status) -> &'static str {
    match status {
        Status::Converged => "converged",
        Status::PeriodTwoCycle => "period-two-cycle",
        Status::MaxIterations => "max-iterations",
    }
}

/// One row per iteration; the last row carries the final status.
pub fn diagnostics_csv(report: &ConvergenceReport) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    let last = report.residuals.len();
    for (i, (r1, r2)) in report.residuals.iter().zip(&report.two_step).enumerate() {
        let status = if i + 1 == last { status_label(report.status) } else { "running" };
        let _ = writeln!(s, "{},{},{},{status}", i + 1, fmt_g9(*r1), fmt_g9(*r2));
    }
    s
}
