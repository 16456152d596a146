use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn dla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dla")).args(args).output().expect("run dla")
}

fn ok(args: &[&str]) -> String {
    let out = dla(args);
    assert!(out.status.success(), "dla {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_of(args: &[&str]) -> (i32, Value) {
    let out = dla(args);
    let code = out.status.code().expect("exit code");
    let err: Value = serde_json::from_slice(&out.stderr).expect("json on stderr");
    (code, err["error"].clone())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dla-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = scratch("seed");
    let out = dir.join("run.jsonl");
    let (code, err) = error_of(&["simulate", "--graph", "z3", "--particles", "5", "--out", s(&out)]);
    assert_eq!(code, 2);
    assert_eq!(err["kind"], "config");
    assert!(err["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn unknown_key_is_named() {
    let dir = scratch("key");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "graph = z3\nseed = 1\nparticels = 10\n").unwrap();
    let (code, err) = error_of(&["simulate", "--config", s(&cfg), "--out", s(&dir.join("r.jsonl"))]);
    assert_eq!(code, 2);
    assert!(err["message"].as_str().unwrap().contains("particels"));
}

#[test]
fn missing_input_is_an_io_error() {
    let (code, err) = error_of(&["fit", "--in", "/nonexistent/run.jsonl", "--window", "1:2"]);
    assert_eq!(code, 4);
    assert_eq!(err["kind"], "io");
}

#[test]
fn exhausted_step_budget_is_a_resource_error() {
    let dir = scratch("budget");
    let out = dir.join("run.jsonl");
    let (code, _) = error_of(&[
        "simulate",
        "--graph",
        "z3",
        "--particles",
        "50",
        "--seed",
        "1",
        "--step-cap",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn config_file_and_flags_agree() {
    let dir = scratch("agree");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# tree run\ngraph = tree3\nparticles = 300\nseed = 42\n").unwrap();
    let (a, b) = (dir.join("a.jsonl"), dir.join("b.jsonl"));
    ok(&["simulate", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["simulate", "--graph", "tree3", "--particles", "300", "--seed", "42", "--out", s(&b)]);
    let (a, b) = (std::fs::read_to_string(a).unwrap(), std::fs::read_to_string(b).unwrap());
    assert_eq!(a, b);
    let header: Value = serde_json::from_str(a.lines().next().unwrap()).unwrap();
    assert_eq!(header["header"]["seed"], 42);
    assert_eq!(header["header"]["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(a.lines().count(), 301);
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let dir = scratch("resume");
    let (full, part) = (dir.join("full.jsonl"), dir.join("part.jsonl"));
    ok(&["simulate", "--graph", "z3", "--particles", "400", "--seed", "5", "--out", s(&full)]);
    ok(&[
        "simulate",
        "--graph",
        "z3",
        "--particles",
        "250",
        "--seed",
        "5",
        "--checkpoint-every",
        "100",
        "--out",
        s(&part),
    ]);
    let ckpt = format!("{}.ckpt", s(&part));
    ok(&["simulate", "--resume", &ckpt, "--particles", "400"]);
    assert_eq!(std::fs::read(full).unwrap(), std::fs::read(part).unwrap());
}

#[test]
fn fit_reports_and_appends_csv() {
    let dir = scratch("fit");
    let run = dir.join("run.jsonl");
    ok(&["simulate", "--graph", "tree3", "--particles", "3000", "--seed", "2", "--out", s(&run)]);
    let (json, csv) = (dir.join("fit.json"), dir.join("fit.csv"));
    for _ in 0..2 {
        ok(&["fit", "--in", s(&run), "--window", "100:3000", "--json", s(&json), "--csv", s(&csv)]);
    }
    let f: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let slope = f["fit"]["slope"].as_f64().unwrap();
    assert!(slope > 0.0 && slope < 0.5, "tree radius grows logarithmically, slope {slope}");
    let csv = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1], lines[2]);
}

#[test]
fn capacity_and_bounds_print_closed_forms() {
    let cap = ok(&["potential", "cap", "--graph", "tree4", "--set", "root"]);
    // a k-regular tree singleton has capacity k (1 - 1/(k-1))
    let value: f64 = cap.lines().find_map(|l| l.strip_prefix("capacity")).unwrap().trim().parse().unwrap();
    assert!((value - 4.0 * (1.0 - 1.0 / 3.0)).abs() < 1e-6);
    let bounds = ok(&["bounds", "--family", "carpet3"]);
    let beta = (13f64.log2() - 2.0) / 3.0;
    assert!(bounds.contains(&format!("{beta}")) || bounds.contains(&format!("{beta:.6}")), "{bounds}");
}
