use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blackout_risk::cases::{PAIR10_JSON, STRESS30_JSON};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_blackout-risk"));
    c.env_remove("BLACKOUT_RISK_WORKERS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_case(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap_or("").to_string()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let out = run(&["risk", "--case", "x.json", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--ledger"));
}

#[test]
fn bad_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), "pair10.json", PAIR10_JSON);
    let missing = run(&["simulate", "--case", "/nonexistent.json", "--outages", "3,7"]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = run(&["simulate", "--case", s(&case), "--outages", "3,99"]);
    assert_eq!(unknown.status.code(), Some(2));
    let rho = run(&["jointp", "--case", s(&case), "--branches", "3,7", "--rho0", "1.5"]);
    assert_eq!(rho.status.code(), Some(2));
    let junk = write_case(dir.path(), "junk.json", "{");
    assert_eq!(run(&["simulate", "--case", s(&junk)]).status.code(), Some(2));
}

#[test]
fn simulate_and_jointp_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), "pair10.json", PAIR10_JSON);
    let out = run(&["simulate", "--case", s(&case), "--outages", "3,7"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["is_blackout"], true);
    assert_eq!(v["load_shed_mw"], 60.0);

    let out = run(&["jointp", "--case", s(&case), "--branches", "3,7", "--rho0", "0.15", "--L", "300"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = v["value"].as_f64().unwrap();
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn campaign_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), "stress30.json", STRESS30_JSON);
    let mut ledgers = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("l{workers}.jsonl"));
        let st = bin()
            .args(["rc-campaign", "--case", s(&case), "--trials", "400", "--seed", "9", "--out", s(&out)])
            .env("BLACKOUT_RISK_WORKERS", workers)
            .output()
            .unwrap();
        assert!(st.status.success());
        let mut manifest = out.clone().into_os_string();
        manifest.push(".manifest.json");
        assert!(Path::new(&manifest).exists());
        ledgers.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(ledgers[0], ledgers[1]);
    assert!(!ledgers[0].is_empty());
}

#[test]
fn pipeline_writes_expected_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let case = write_case(d, "stress30.json", STRESS30_JSON);
    let ledger = d.join("ledger.jsonl");
    let st = run(&["rc-campaign", "--case", s(&case), "--trials", "3000", "--seed", "1", "--out", s(&ledger)]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));

    let bounds = d.join("bounds.json");
    let table = d.join("undersampling.csv");
    let st = run(&[
        "estimate-size", "--case", s(&case), "--ledger", s(&ledger), "--out", s(&bounds), "--table", s(&table),
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let b: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&bounds).unwrap()).unwrap();
    assert!(b["chao_lower"].as_f64().unwrap() <= b["rcp_upper"].as_f64().unwrap());
    assert_eq!(header(&table), "rank,branch_a,branch_b,frequency,rc_found,true_count,proportion");

    let grid = d.join("risk.csv");
    let st = run(&["risk", "--case", s(&case), "--ledger", s(&ledger), "--out", s(&grid)]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    assert_eq!(header(&grid), "rho0,L,r2,r3_low,r3_high,total_low,total_high,share3_low,share3_high");
    assert_eq!(std::fs::read_to_string(&grid).unwrap().lines().count(), 1 + 16);

    let st = run(&["analyze", "accumulation", "--ledger", s(&ledger), "--out-dir", s(d)]);
    assert!(st.status.success());
    assert_eq!(header(&d.join("accumulation.csv")), "trial,k,discoveries,unique,discoveries_k,unique_k");
    let st = run(&["analyze", "pair-freq", "--ledger", s(&ledger), "--out-dir", s(d)]);
    assert!(st.status.success());
    assert_eq!(header(&d.join("pair_freq.csv")), "rank,branch_a,branch_b,count");
    let st = run(&["analyze", "distributions", "--ledger", s(&ledger), "--case", s(&case), "--out-dir", s(d)]);
    assert!(st.status.success());
    assert_eq!(header(&d.join("blackout_sizes.csv")), "k,shed_mw");
    assert_eq!(header(&d.join("set_distances.csv")), "k,distance_km");
    assert_eq!(header(&d.join("medians.csv")), "k,sets,median_shed_mw,median_distance_km");
    let st = run(&[
        "analyze", "distances", "--ledger", s(&ledger), "--case", s(&case), "--out-dir", s(d), "--benign-pairs", "500",
    ]);
    assert!(st.status.success());
    assert_eq!(header(&d.join("distance_comparison.csv")), "kind,distance_km");

    // distances need the case
    let st = run(&["analyze", "distances", "--ledger", s(&ledger), "--out-dir", s(d)]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn load_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), "pair10.json", PAIR10_JSON);
    let out = dir.path().join("sweep.csv");
    let st = run(&[
        "load-sweep", "--case", s(&case), "--scheme", "10,5", "--trials", "200", "--factors", "1.0,0.9",
        "--out", s(&out),
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.9,"));
}
