use std::path::Path;
use std::process::Command;

use destflow::benchmark::{benchmark_network, benchmark_scenario, emit_benchmark};
use destflow::netfile::{parse_network, serialize_network};
use destflow::output::events_csv;
use destflow::scenario::parse_scenario;
use destflow::{run_scenario, Behavior, CliError, Outcome};
use destflow_core::network::{NetworkBuilder, Violation};
use destflow_core::simulate::run_basic;
use proptest::prelude::*;

fn destflow(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_destflow")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

proptest! {
    #[test]
    fn network_files_round_trip(
        lengths in prop::collection::vec(0.02..5.0f64, 2..8),
        params in prop::collection::vec(prop::option::of((0.1..3.0f64, 0.1..3.0f64)), 8),
    ) {
        // a chain o -> j0 -> ... -> d with arbitrary lengths and road constants
        let mut b = NetworkBuilder::new();
        let k = lengths.len();
        for (i, &len) in lengths.iter().enumerate() {
            let start = if i == 0 { "o".to_string() } else { format!("j{i}") };
            let end = if i + 1 == k { "d".to_string() } else { format!("j{}", i + 1) };
            let (rho, v) = params[i].unwrap_or((1.0, 1.0));
            b.road_with(&format!("r{i}"), &start, &end, len, rho, v);
        }
        b.destination("d");
        let n = b.build().unwrap();
        let text = serialize_network(&n);
        let again = parse_network(&text, "round-trip").unwrap();
        prop_assert_eq!(&again, &n);
        prop_assert_eq!(serialize_network(&again), text);
    }
}

#[test]
fn benchmark_file_parses_to_the_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    emit_benchmark(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("benchmark.net")).unwrap();
    assert_eq!(parse_network(&text, "benchmark.net").unwrap(), benchmark_network());
    let sc = std::fs::read_to_string(dir.path().join("benchmark-high.scenario")).unwrap();
    assert_eq!(parse_scenario(&sc, "s").unwrap(), benchmark_scenario(true));
}

#[test]
fn every_single_road_deletion_is_caught() {
    let text = serialize_network(&benchmark_network());
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate().filter(|(_, l)| l.starts_with("road")) {
        let mutated: String = lines.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, l)| format!("{l}\n")).collect();
        assert!(parse_network(&mutated, "m").is_err(), "deleting `{line}` went unnoticed");
    }
}

#[test]
fn mutations_name_the_broken_invariant() {
    let base = serialize_network(&benchmark_network());
    let violations = |text: &str| match parse_network(text, "m") {
        Err(CliError::Network(v)) => v,
        other => panic!("expected a validation error, got {other:?}"),
    };
    let v = violations(&base.replace("road r3 j2 j5 0.4", "road r3 j2 j5 -0.4"));
    assert!(v.iter().any(|x| matches!(x, Violation::NonPositiveLength { .. })));
    let v = violations(&base.replace("road r6 j5 j6 0.5", "road r6 j5 j6 0.5 0 1"));
    assert!(v.iter().any(|x| matches!(x, Violation::NonPositiveRhoMax { .. })));
    // r8 turned around: j8 loses its only incoming road and becomes a second source
    let v = violations(&base.replace("road r8 j6 j8 0.3", "road r8 j8 j6 0.3"));
    assert!(!v.is_empty());
    // j3 can no longer reach j8 once r6 feeds only j7
    let cut = base.replace("road r8 j6 j8 0.3\n", "road r8 j9 j8 0.3\n");
    let v = violations(&cut);
    assert!(v.iter().any(|x| matches!(x, Violation::Unreachable { .. })), "{v:?}");
}

#[test]
fn exports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    emit_benchmark(dir.path()).unwrap();
    let net = dir.path().join("benchmark.net");
    let sc = dir.path().join("benchmark.scenario");
    for behavior in ["basic", "rational"] {
        let (a, b) = (dir.path().join(format!("{behavior}-a")), dir.path().join(format!("{behavior}-b")));
        for out in [&a, &b] {
            let (code, _, err) = destflow(&[
                "simulate", "--network", p(&net), "--scenario", p(&sc), "--behavior", behavior, "--out", p(out), "--stride", "25",
            ]);
            assert_eq!(code, 0, "{err}");
        }
        for f in ["densities.csv", "events.csv"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{behavior} {f}");
        }
    }
    let events = std::fs::read_to_string(dir.path().join("rational-a/events.csv")).unwrap();
    assert!(events.lines().skip(1).any(|l| l.contains(",j2,1,r3,r2")));
    let basic = std::fs::read_to_string(dir.path().join("basic-a/densities.csv")).unwrap();
    // 1001 levels at stride 25 -> 41 exported, 355 cells, 2 groups
    assert_eq!(basic.lines().count(), 1 + 41 * 355 * 2);
    assert!(basic.starts_with("t,road,x,dest,density\n0,r1,0.005,1,0\n"));
}

#[test]
fn highly_rational_run_writes_diagnostics_and_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    emit_benchmark(dir.path()).unwrap();
    let out = dir.path().join("high");
    let (code, stdout, err) = destflow(&[
        "simulate",
        "--network",
        p(&dir.path().join("benchmark.net")),
        "--scenario",
        p(&dir.path().join("benchmark-high.scenario")),
        "--behavior",
        "high",
        "--out",
        p(&out),
        "--stride",
        "100",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.starts_with("period-two-cycle"), "{stdout}");
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("iteration,residual,two_step_residual,status\n1,"));
    assert!(diag.trim_end().ends_with(",period-two-cycle"));
    for k in 1..=2 {
        assert!(out.join(format!("witness{k}_densities.csv")).exists());
        assert!(out.join(format!("witness{k}_events.csv")).exists());
    }
}

#[test]
fn two_iterations_are_not_enough_for_the_benchmark() {
    let n = benchmark_network();
    let mut spec = benchmark_scenario(true);
    spec.max_iters = 2;
    match run_scenario(&n, &spec, Behavior::HighlyRational).unwrap() {
        Outcome::Equilibrium(rep) => {
            assert_eq!(rep.status, destflow_core::Status::MaxIterations);
            assert_eq!(rep.residuals.len(), 2);
            assert_eq!(rep.witnesses.len(), 1);
        }
        Outcome::Single(_) => panic!("expected an equilibrium report"),
    }
}

#[test]
fn basic_routes_ignore_the_inflow_level() {
    let n = benchmark_network();
    let full = benchmark_scenario(false);
    let mut half = full.clone();
    half.inflows.iter_mut().for_each(|f| f.density *= 0.5);
    let a = run_basic(&full.build(&n).unwrap()).unwrap();
    let b = run_basic(&half.build(&n).unwrap()).unwrap();
    assert_eq!(a.policy, b.policy);
    assert_eq!(events_csv(&n, &a.events), events_csv(&n, &b.events));
    assert_ne!(a.history, b.history);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    emit_benchmark(dir.path()).unwrap();
    let net = dir.path().join("benchmark.net");
    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    };

    assert_eq!(destflow(&["validate", "--network", p(&net)]).0, 0);
    assert_eq!(destflow(&["simulate", "--network", p(&net)]).0, 2);
    assert_eq!(destflow(&["frobnicate"]).0, 2);

    let garbled = write("garbled.net", "road r1 j1 j2 long\n");
    let (code, _, err) = destflow(&["validate", "--network", p(&garbled)]);
    assert_eq!(code, 3);
    assert!(err.contains("garbled.net:1"), "{err}");

    let invalid = write("invalid.net", "road a o j 1\nroad b j j 1\nroad c j d 1\ndestination d\n");
    assert_eq!(destflow(&["validate", "--network", p(&invalid)]).0, 4);

    let open_ended = dir.path().join("benchmark.scenario");
    let (code, _, err) = destflow(&[
        "simulate", "--network", p(&net), "--scenario", p(&open_ended), "--behavior", "high", "--out", p(&dir.path().join("x")),
    ]);
    assert_eq!(code, 4, "{err}");

    // drivers cannot arrive before the horizon, yet the inflow is on
    let chain = write("chain.net", "road a o j 1\nroad b j d 1\ndestination d\n");
    let short = write("short.scenario", "dx 0.01\ndt 0.005\nhorizon 1\ninflow o d 0.3 0 0.5\n");
    let (code, _, err) = destflow(&[
        "simulate", "--network", p(&chain), "--scenario", p(&short), "--behavior", "high", "--out", p(&dir.path().join("y")),
    ]);
    assert_eq!(code, 5, "{err}");

    assert_eq!(destflow(&["validate", "--network", p(&dir.path().join("missing.net"))]).0, 6);
}

#[test]
fn both_split_schedules_are_reported() {
    use destflow::scenario::ScenarioSpec;
    use destflow_core::equilibrium::density_distance;
    use destflow_core::junction::LambdaSchedule;
    use destflow_core::simulate::run_rational;
    let run = |n: &destflow_core::Network, mut spec: ScenarioSpec, lambda, slab: f64| {
        spec.lambda = lambda;
        spec.slab = slab;
        let r = run_rational(&spec.build(n).unwrap()).unwrap();
        let balance = r.total_injected() - r.discharged.iter().sum::<f64>() - r.final_mass.iter().sum::<f64>();
        assert!(balance.abs() < 1e-9, "{balance}");
        r
    };

    // every benchmark merge sees each group from a single road, so the weights never move
    let n = benchmark_network();
    let a = run(&n, benchmark_scenario(false), LambdaSchedule::PerSlab, 0.05);
    let b = run(&n, benchmark_scenario(false), LambdaSchedule::PerStep, 0.05);
    let gap = density_distance(&a.history, &b.history).unwrap();
    println!("benchmark, 10 steps per slab: per-slab vs per-step distance {gap:.3e}");
    assert_eq!(gap, 0.0);

    // two roads carrying one group into a merge
    let n = NetworkBuilder::new()
        .road("a", "o1", "j", 0.3)
        .road("b", "o2", "j", 0.3)
        .road("c", "j", "d", 0.3)
        .destination("d")
        .build()
        .unwrap();
    let spec = ScenarioSpec::new(0.01, 0.005, 2.0).inflow("o1", "d", 0.4, 0.0, Some(0.6)).inflow("o2", "d", 0.2, 0.3, None);
    let one = run(&n, spec.clone(), LambdaSchedule::PerSlab, 0.005);
    let two = run(&n, spec.clone(), LambdaSchedule::PerStep, 0.005);
    assert_eq!(density_distance(&one.history, &two.history).unwrap(), 0.0);
    let a = run(&n, spec.clone(), LambdaSchedule::PerSlab, 0.05);
    let b = run(&n, spec, LambdaSchedule::PerStep, 0.05);
    let gap = density_distance(&a.history, &b.history).unwrap();
    println!("merge, 10 steps per slab: per-slab vs per-step distance {gap:.3e}");
    // one-cell segments: re-splitting proportionally only moves roundoff
    assert!(gap < 1e-12);
}
