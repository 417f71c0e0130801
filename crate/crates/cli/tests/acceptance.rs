//! Acceptance battery: runs `suite --seed 42` twice through the binary,
//! prints one verdict line per criterion and fails if any criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use serde_json::Value;

/// Wall-time budget of the sandwich-chain criterion, seconds.
const SANDWICH_BUDGET: f64 = 600.0;

struct Run {
    stdout: Vec<u8>,
    /// Seconds per criterion, from the stderr timing lines.
    seconds: BTreeMap<u32, f64>,
}

fn suite() -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_prodstate")).args(["suite", "--seed", "42"]).output().expect("binary runs");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let seconds = stderr
        .lines()
        .filter_map(|l| {
            let rest = l.strip_prefix("criterion ")?;
            let (id, rest) = rest.split_once(": ")?;
            let secs = rest.split_once('s')?.0;
            Some((id.parse().ok()?, secs.parse().ok()?))
        })
        .collect();
    Run { stdout: out.stdout, seconds }
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let first = suite();
    let second = suite();
    let records: Vec<Value> = String::from_utf8_lossy(&first.stdout).lines().filter_map(|l| serde_json::from_str(l).ok()).collect();
    let criteria: BTreeMap<u64, &Value> =
        records.iter().filter(|r| r["kind"] == "criterion").map(|r| (r["id"].as_u64().unwrap(), r)).collect();

    let mut verdicts: Vec<(u32, String, bool, String)> = Vec::new();
    for id in 1..=11u32 {
        let Some(r) = criteria.get(&(id as u64)) else {
            verdicts.push((id, "missing from suite output".into(), false, String::new()));
            continue;
        };
        let mut passed = r["passed"].as_bool().unwrap_or(false);
        let mut detail = format!("{} cases", r["cases"]);
        if id == 1 {
            let secs = first.seconds.get(&1).copied().unwrap_or(f64::INFINITY);
            passed &= secs <= SANDWICH_BUDGET;
            detail.push_str(&format!(", {secs:.0}s of {SANDWICH_BUDGET:.0}s"));
        }
        if !passed {
            detail.push_str(&format!(", failures: {}", r["failures"]));
        }
        verdicts.push((id, r["name"].as_str().unwrap_or("").to_string(), passed, detail));
    }
    let identical = !first.stdout.is_empty() && first.stdout == second.stdout;
    verdicts.push((12, "suite --seed 42 byte-identical across runs".into(), identical, format!("{} bytes", first.stdout.len())));

    for (id, name, passed, detail) in &verdicts {
        println!("criterion {id:>2}: {} — {name} ({detail})", if *passed { "PASS" } else { "FAIL" });
    }
    println!("total {:.0}s", start.elapsed().as_secs_f64());
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.2).map(|v| v.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
