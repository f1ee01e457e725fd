//! One line per acceptance criterion. Criteria 1 to 5 run the full suites
//! through the binary; criterion 6 compares two quick runs byte for byte.
//!
//! The mid-time Pearson correlation of criterion 5 is a known failure at the
//! shipped resolution: it is reported as FAIL and does not abort the run.
//! Any other failing check, or a runtime over budget, does.

use std::process::{Command, Output};
use std::time::{Duration, Instant};

const KNOWN_FAILURES: &[&str] = &["relax.pearson_mid_time"];

fn geolab(args: &[&str]) -> (Output, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_geolab"))
        .args(args)
        .output()
        .expect("binary runs");
    (out, start.elapsed())
}

struct Outcome {
    pass: bool,
    unexpected: Vec<String>,
}

fn criterion(n: u8, budget: Duration) -> Outcome {
    let id = n.to_string();
    let (out, elapsed) = geolab(&["verify-all", "--criterion", &id, "--seed", "1"]);
    let report: serde_json::Value = match serde_json::from_slice(&out.stdout) {
        Ok(v) => v,
        Err(e) => {
            let msg = format!("no report ({e}): {}", String::from_utf8_lossy(&out.stderr));
            println!("criterion {n}: FAIL ({:.1} s) {msg}", elapsed.as_secs_f64());
            return Outcome { pass: false, unexpected: vec![msg] };
        }
    };
    let failing: Vec<String> = report["checks"]
        .as_array()
        .into_iter()
        .flatten()
        .filter(|c| c["pass"] != true)
        .map(|c| {
            format!(
                "{} = {} ({} {})",
                c["name"].as_str().unwrap_or("?"),
                c["value"],
                c["relation"].as_str().unwrap_or("?"),
                c["tolerance"]
            )
        })
        .collect();
    let pass = failing.is_empty() && out.status.code() == Some(0);
    let verdict = if pass { "PASS" } else { "FAIL" };
    let detail = if failing.is_empty() { String::new() } else { format!(" [{}]", failing.join("; ")) };
    println!("criterion {n}: {verdict} ({:.1} s){detail}", elapsed.as_secs_f64());

    let mut unexpected: Vec<String> = failing
        .into_iter()
        .filter(|f| !KNOWN_FAILURES.iter().any(|k| f.starts_with(k)))
        .collect();
    let expected_code = if pass { 0 } else { 1 };
    if out.status.code() != Some(expected_code) {
        unexpected.push(format!("criterion {n}: exit code {:?}", out.status.code()));
    }
    if elapsed > budget {
        unexpected.push(format!("criterion {n}: {:.1} s over the {} s budget", elapsed.as_secs_f64(), budget.as_secs()));
    }
    Outcome { pass, unexpected }
}

fn determinism() -> Outcome {
    let (a, ta) = geolab(&["verify-all", "--quick"]);
    let (b, tb) = geolab(&["verify-all", "--quick"]);
    let identical = a.stdout == b.stdout && !a.stdout.is_empty();
    let exits = a.status.code() == Some(0) && b.status.code() == Some(0);
    let pass = identical && exits;
    println!(
        "criterion 6: {} ({:.1} s) [{} bytes, identical: {identical}, exit codes {:?}/{:?}]",
        if pass { "PASS" } else { "FAIL" },
        (ta + tb).as_secs_f64(),
        a.stdout.len(),
        a.status.code(),
        b.status.code()
    );
    let unexpected = if pass { Vec::new() } else { vec!["criterion 6: quick reports differ or fail".into()] };
    Outcome { pass, unexpected }
}

fn main() {
    let budgets = [30, 5, 60, 30, 600];
    let mut outcomes: Vec<Outcome> = budgets
        .iter()
        .enumerate()
        .map(|(i, &s)| criterion(i as u8 + 1, Duration::from_secs(s)))
        .collect();
    outcomes.push(determinism());

    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    let unexpected: Vec<String> = outcomes.into_iter().flat_map(|o| o.unexpected).collect();
    if !unexpected.is_empty() {
        for u in &unexpected {
            eprintln!("unexpected: {u}");
        }
        std::process::exit(1);
    }
}
