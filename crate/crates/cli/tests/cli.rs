use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decoy-synth"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Value of `key` inside `[section]` of a report.
fn field(report: &str, section: &str, key: &str) -> f64 {
    let header = format!("[{section}]");
    let body = report.split(&header).nth(1).unwrap_or_else(|| panic!("no {header}"));
    let prefix = format!("{key}: ");
    body.lines()
        .take_while(|l| !l.starts_with('['))
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in {header}"))
        .parse()
        .unwrap()
}

fn block<'a>(report: &'a str, section: &str) -> &'a str {
    let start = report.find(&format!("[{section}]")).unwrap();
    let rest = &report[start + 1..];
    let end = rest.find("\n[").map_or(rest.len(), |i| i + 1);
    &report[start..start + 1 + end]
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_shipped_fixtures() {
    for name in ["fig1", "grid6", "grid6_alt", "grid10", "decoy_on_only_path"] {
        let text = stdout(&run(&["validate", path_str(&fixture(&format!("{name}.pag")))]));
        assert!(text.starts_with("valid: yes"), "{name}");
    }
}

#[test]
fn parse_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pag");
    fs::write(&path, "GAMMA 0.9\nACTION a\nSTATE s\nTRANS s a nowhere 1\n").unwrap();
    let out = run(&["validate", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = run(&["validate", path_str(&dir.path().join("missing.pag"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn no_decoy_mode_writes_no_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let g6 = fixture("grid6.pag");
    let text = stdout(&run(&[
        "solve",
        path_str(&g6),
        "--mode",
        "no-decoy",
        "--out",
        path_str(dir.path()),
    ]));
    assert!(field(&text, "best response", "attacker_reach") > 0.99);
    assert!(field(&text, "best response", "defender_value") < 0.01);
    assert!(!dir.path().join("strategy.txt").exists());
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn decoy_solve_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g6 = fixture("grid6.pag");
    let args = [
        "solve",
        path_str(&g6),
        "--mode",
        "decoy",
        "--budget",
        "4",
        "--restarts",
        "3",
        "--seed",
        "7",
        "--out",
        path_str(dir.path()),
    ];
    let solved = stdout(&run(&args));
    let strategy = dir.path().join("strategy.txt");
    let used: f64 = fs::read_to_string(&strategy)
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("Y "))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!(used <= 4.0 && used > 0.0);

    let evaluated = stdout(&run(&["evaluate", path_str(&g6), path_str(&strategy)]));
    assert_eq!(block(&solved, "best response"), block(&evaluated, "best response"));
}

#[test]
fn empty_strategy_matches_no_decoy() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "BUDGET 3\n").unwrap();
    for name in ["fig1.pag", "grid6_alt.pag"] {
        let inst = fixture(name);
        let base = stdout(&run(&["solve", path_str(&inst), "--mode", "no-decoy"]));
        let eval = stdout(&run(&["evaluate", path_str(&inst), path_str(&empty)]));
        assert_eq!(block(&base, "best response"), block(&eval, "best response"), "{name}");
    }
}

#[test]
fn over_budget_strategy_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("s.txt");
    fs::write(&strategy, "BUDGET 6\nY 1,4 3\nY 4,5 2\n").unwrap();
    let out = run(&["evaluate", path_str(&fixture("grid6.pag")), path_str(&strategy)]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&strategy, "BUDGET 4\nY 1,4 1\nY 2,2 1\n").unwrap();
    let out = run(&["evaluate", path_str(&fixture("grid6.pag")), path_str(&strategy)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2,2"));
}

#[test]
fn infeasible_budget_exits_3() {
    let out = run(&[
        "solve",
        path_str(&fixture("grid6.pag")),
        "--mode",
        "decoy",
        "--budget",
        "0.000002",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn action_modification_does_not_hurt() {
    let g6 = fixture("grid6.pag");
    let decoy = stdout(&run(&["solve", path_str(&g6), "--mode", "decoy"]));
    let action = stdout(&run(&["solve", path_str(&g6), "--mode", "decoy-action"]));
    let v_decoy = field(&decoy, "synthesis", "defender_value");
    let v_action = field(&action, "synthesis", "defender_value");
    assert!(v_action >= v_decoy - 1e-3, "{v_action} vs {v_decoy}");
}

#[test]
fn solve_is_deterministic_and_manifest_checksums_match() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let inst = fixture("fig1.pag");
    for dir in [&a, &b] {
        stdout(&run(&[
            "solve",
            path_str(&inst),
            "--seed",
            "3",
            "--out",
            path_str(dir.path()),
        ]));
    }
    for name in [
        "strategy.txt",
        "trace_restart0.csv",
        "trace_restart1.csv",
        "trace_restart2.csv",
        "report.txt",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 5);
    for out in outputs {
        let path = out.as_str().unwrap();
        let digest = hex::encode(Sha256::digest(fs::read(path).unwrap()));
        assert_eq!(manifest["checksums"][path].as_str().unwrap(), digest);
    }
    assert_eq!(manifest["seed"], 3);
}

#[test]
fn trace_flag_writes_best_restart() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("best.csv");
    let out = stdout(&run(&[
        "solve",
        path_str(&fixture("decoy_on_only_path.pag")),
        "--trace",
        path_str(&trace),
        "--restarts",
        "2",
    ]));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("iter,defender_value,attacker_value,budget_used,wall_ms\n"));
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[4], "0");
    let v: f64 = last[1].parse().unwrap();
    assert!((v - field(&out, "synthesis", "defender_value")).abs() < 1e-5);
}

#[test]
fn generate_gridworld_counts_states() {
    let text = stdout(&run(&[
        "generate",
        "gridworld",
        "--rows",
        "6",
        "--cols",
        "6",
        "--alpha",
        "0.1",
        "--target",
        "5,5",
        "--sensor",
        "2,2",
        "--decoy",
        "0,5",
        "--modifiable",
        "3,3:N",
        "--budget",
        "2",
    ]));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.pag");
    fs::write(&path, &text).unwrap();
    let summary = stdout(&run(&["validate", path_str(&path)]));
    assert!(summary.contains("states: 37\n"));
    assert!(summary.contains("decoys: 0,5\n"));

    let out = run(&["generate", "gridworld", "--rows", "3", "--cols", "3", "--target", "9,9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_random_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.pag");
    let p2 = dir.path().join("b.pag");
    for p in [&p1, &p2] {
        stdout(&run(&[
            "generate",
            "random",
            "--states",
            "50",
            "--seed",
            "1",
            "--out",
            path_str(p),
        ]));
    }
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    let summary = stdout(&run(&["validate", path_str(&p1)]));
    assert!(summary.contains("states: 50\n"));
}

#[test]
fn bench_table_is_ordered() {
    let text = stdout(&run(&["bench", "--sizes", "6,4", "--restarts", "1"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("size,states,decoys,seconds,defender_value"));
    let states: Vec<usize> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(states, [17, 37]);
}
