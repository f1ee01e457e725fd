use std::path::Path;
use std::process::{Command, Output};

fn geolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geolab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

#[test]
fn unknown_flag_exits_with_two() {
    let out = geolab(&["relax", "solve", "--map", "flip", "--frobnicate", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_values_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    assert_eq!(geolab(&["selfsim", "field", "--t", "0", "--out", path_str(&out)]).status.code(), Some(2));
    assert_eq!(geolab(&["rigid", "theorem2", "--inertia", "1,2", "--axis", "1,0,0"]).status.code(), Some(2));
    assert_eq!(geolab(&["relax", "solve", "--map", "flip", "--eps-end", "1", "--eps-start", "0.1", "--out", path_str(&out)]).status.code(), Some(2));
    assert_eq!(geolab(&["hydro", "trace", "--x", "0,0.5,0.5", "--out", path_str(&out)]).status.code(), Some(2));
}

#[test]
fn help_exits_with_zero() {
    assert_eq!(geolab(&["--help"]).status.code(), Some(0));
}

#[test]
fn field_csv_has_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let run = geolab(&["selfsim", "field", "--t", "0.5", "--samples", "11", "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,g1,p,dp"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    // p ≤ 0 everywhere and the centre value is −t^{4/3}/(9t²)
    assert!(rows.iter().all(|r| r[2] <= 0.0));
    let centre = &rows[5];
    assert_eq!(centre[0], 0.0);
    assert!((centre[2] + 0.5f64.powf(4.0 / 3.0) / (9.0 * 0.25)).abs() < 1e-15);
}

#[test]
fn rigid_outputs_follow_their_formats() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("path.csv");
    let run = geolab(&["rigid", "simulate", "--inertia", "1,2,3", "--omega0", "0.2,1,0.1", "--steps", "20", "--out", path_str(&csv)]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 9 + 3 + 9 + 1);
    assert_eq!((header[0], header[10], header[13], header[22]), ("t", "b1", "m11", "sym_residual"));
    assert_eq!(text.lines().count(), 22);

    let report = dir.path().join("t2.json");
    let run = geolab(&["rigid", "theorem2", "--inertia", "1,2,3", "--axis", "0,2,0", "--out", path_str(&report)]);
    assert_eq!(run.status.code(), Some(0));
    let v = json(&std::fs::read(&report).unwrap());
    for key in ["endpoint_gap", "multiplier_gap", "sym_residual_u", "sym_residual_v", "verdict"] {
        assert!(v["data"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["data"]["verdict"], "exceptional");
    assert_eq!(v["data"]["axis"][1].as_f64(), Some(1.0));
}

#[test]
fn hydro_trace_writes_branches() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let run = geolab(&["hydro", "trace", "--x", "0.25,0.5,0.25", "--t0", "auto", "--t1", "1", "--out", path_str(&csv)]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("t,X1,X2,X3,branch"));
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0].parse::<f64>().unwrap(), 1.0);
    assert!(["lower", "upper", "still"].contains(&last[4]));
    let v = json(&run.stdout);
    assert_eq!(v["data"]["t0"].as_f64(), Some(0.125));
}

#[test]
fn solve_then_pressure_round_trips_the_potentials() {
    let dir = tempfile::tempdir().unwrap();
    let run_file = dir.path().join("run.json");
    let csv = dir.path().join("pressure.csv");
    let solve = geolab(&["relax", "solve", "--map", "identity", "--n", "8", "--T", "4", "--eps-end", "1e-2", "--out", path_str(&run_file)]);
    assert_eq!(solve.status.code(), Some(0), "{}", String::from_utf8_lossy(&solve.stderr));
    let stored = json(&std::fs::read(&run_file).unwrap());
    assert_eq!(stored["schema_version"], 1);
    // off-diagonal endpoint potentials are −∞ and stored as null
    assert!(stored["log_a"][0][1].is_null());
    assert!(stored["log_a"][0][0].is_number());
    assert_eq!(stored["log_b"].as_array().unwrap().len(), 3);

    let pressure = geolab(&["relax", "pressure", "--run", path_str(&run_file), "--out", path_str(&csv)]);
    assert_eq!(pressure.status.code(), Some(0), "{}", String::from_utf8_lossy(&pressure.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("k,t_k,x_i,p"));
    assert_eq!(text.lines().count(), 1 + 3 * 8);
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert_eq!(first[1].parse::<f64>().unwrap(), 0.25);
}

#[test]
fn corrupted_run_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let run_file = dir.path().join("run.json");
    std::fs::write(&run_file, "{\"schema_version\": 1, \"unexpected\": true}").unwrap();
    let csv = dir.path().join("p.csv");
    let out = geolab(&["relax", "pressure", "--run", path_str(&run_file), "--out", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quick_suite_passes() {
    let out = geolab(&["verify-all", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out.stdout);
    assert_eq!(v["pass"], true);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut unique = names.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), names.len(), "each check appears once");
}

#[test]
fn failing_checks_exit_with_one_and_are_listed() {
    let out = geolab(&["hydro", "verify", "--tol", "hydro.weak_refinement_ratio=1e9"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hydro.weak_refinement_ratio"), "{err}");
    assert_eq!(json(&out.stdout)["pass"], false);
}

#[test]
fn probe_uniqueness_holds_for_every_shipped_plan() {
    for (map, n, steps) in [("flip", "32", "16"), ("identity", "32", "16"), ("selfsim", "64", "16")] {
        let out = geolab(&["relax", "probe-uniqueness", "--map", map, "--n", n, "--T", steps, "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0), "{map}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
