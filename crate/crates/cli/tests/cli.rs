use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_neutral-host"));
    c.env_remove("NEUTRAL_HOST_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONFIG: &str = r#"{"num_sites": 12, "num_requests": 10, "runs": 4, "seed": 11}"#;

#[test]
fn help_exits_zero() {
    let o = run(&["solve", "--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("--group-size"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["solve"])), 2);
    assert_eq!(code(&run(&["simulate", "x.json", "--sweep", "Q=1"])), 2);
    assert_eq!(code(&run(&["solve", "/nonexistent/scenario.json"])), 2);
}

#[test]
fn malformed_json_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"num_sites": 5, "num_bandz": 2}"#);
    let o = run(&["gen-scenario", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("num_bandz"));

    let sc = write(&dir, "s.json", r#"{"grid": {"rows": 1, "cols": 1}}"#);
    let o = run(&["solve", s(&sc)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bands"));
}

#[test]
fn solve_then_validate() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", CONFIG);
    let sc = dir.path().join("s.json");
    let sol = dir.path().join("sol.json");
    assert_eq!(code(&run(&["gen-scenario", s(&cfg), "--run", "2", "-o", s(&sc)])), 0);
    assert_eq!(code(&run(&["solve", s(&sc), "--group-size", "23", "-o", s(&sol)])), 0);
    let o = run(&["validate", s(&sc), s(&sol)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    // same answer without grouping, at PRB resolution
    let o = run(&["solve", s(&sc), "--no-timing"]);
    assert_eq!(code(&o), 0);
    let fine: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let coarse: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(fine["objective"], coarse["objective"]);
    assert_eq!(fine["stats"]["wall_time_ms"], 0.0);
}

#[test]
fn validate_flags_a_broken_solution() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", CONFIG);
    let sc = dir.path().join("s.json");
    assert_eq!(code(&run(&["gen-scenario", s(&cfg), "-o", s(&sc)])), 0);
    let o = run(&["solve", s(&sc)]);
    let mut sol: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let first = sol["accepted"][0].clone();
    let mut twin = first.clone();
    twin["request"] = (first["request"].as_u64().unwrap() + 1000).into();
    sol["accepted"].as_array_mut().unwrap().push(twin);
    let bad = write(&dir, "bad.json", &sol.to_string());
    assert_eq!(code(&run(&["validate", s(&sc), s(&bad)])), 1);

    // a duplicated window on a real request overlaps itself
    let mut sol: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let n = sol["accepted"].as_array().unwrap().len();
    if n >= 2 {
        let other = sol["accepted"][1].clone();
        sol["accepted"][0]["site"] = other["site"].clone();
        sol["accepted"][0]["band"] = other["band"].clone();
        sol["accepted"][0]["start"] = other["start"].clone();
        let bad = write(&dir, "bad2.json", &sol.to_string());
        let v = run(&["validate", s(&sc), s(&bad)]);
        assert_eq!(code(&v), 1);
        assert!(!v.stdout.is_empty());
    }
}

#[test]
fn oracle_check_summary() {
    let o = run(&["oracle-check", "--instances", "30", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "30/30 matched");
}

#[test]
fn export_lp_sections() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"num_sites": 3, "num_requests": 2, "num_bands": 1, "prbs_per_band": 6, "group_size": 1, "demand_model": {"max_blocks": 2}}"#);
    let sc = dir.path().join("s.json");
    assert_eq!(code(&run(&["gen-scenario", s(&cfg), "-o", s(&sc)])), 0);
    let o = run(&["export-lp", s(&sc)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for section in ["Maximize", "Subject To", "Binary", "End"] {
        assert!(text.contains(section), "missing {section}");
    }
}

#[test]
fn simulate_is_independent_of_jobs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", CONFIG);
    let args = ["simulate", s(&cfg), "--sweep", "I=4,8", "--sweep", "p_sb=0,0.5", "--no-timing"];
    let one = bin().args(args).args(["--jobs", "1"]).output().unwrap();
    let many = bin().args(args).env("NEUTRAL_HOST_JOBS", "3").output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, many.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("I,B,W,p_ns,p_sb,K,"));
}

#[test]
fn timeslot_trace_lines() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", CONFIG);
    let sc = dir.path().join("s.json");
    assert_eq!(code(&run(&["gen-scenario", s(&cfg), "-o", s(&sc)])), 0);
    let scenario: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sc).unwrap()).unwrap();
    let area = scenario["sites"][0]["coverage"][0].as_u64().unwrap();
    let arrivals = write(
        &dir,
        "a.json",
        &format!(r#"[{{"time": 1, "request": {{"id": 0, "area": {area}, "demand": 23}}}}]"#),
    );
    let o = run(&["timeslot", s(&arrivals), "--scenario", s(&sc), "--delta", "10", "--latency", "9.55"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let events: Vec<serde_json::Value> = String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let active: Vec<&serde_json::Value> = events.iter().filter(|e| e["kind"] == "service_active").collect();
    assert_eq!(active.len(), 1);
    assert_eq!(active[0]["time"], 19.55);

    let o = run(&["timeslot", s(&arrivals), "--scenario", s(&sc), "--delta", "10"]);
    assert_eq!(code(&o), 2);
}
