use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn table1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/table1.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbatch"))
        .args(args)
        .env_remove("SBATCH_WORKERS")
        .output()
        .expect("spawn sbatch")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_table1() {
    let t = table1();
    for model in ["ia", "g", "h"] {
        let out = run(&["solve", s(&t), "--model", model]);
        assert!(out.status.success());
        let v = json(&out);
        assert_eq!(v["objective"], 61);
        assert_eq!(v["status"], "optimal");
    }
    let core = json(&run(&["solve", s(&t), "--no-sizing"]));
    assert_eq!(core["objective"], 55);
}

#[test]
fn oracle_variations() {
    let t = table1();
    let bc = run(&["oracle", s(&t), "--availability", "batch", "--initiation", "complete"]);
    assert!(bc.status.success());
    assert_eq!(json(&bc)["objective"], 99);
    let nonpre = json(&run(&["oracle", s(&t), "--preemption", "off"]));
    assert_eq!(nonpre["objective"], 71);
}

#[test]
fn encode_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let t = table1();
    for (formulation, flags, want) in [
        ("rp", &[][..], "61"),
        ("pa", &["--availability", "batch", "--initiation", "complete"][..], "99"),
    ] {
        let sched = dir.path().join(format!("{formulation}-sched.json"));
        let mut args = vec!["oracle", s(&t)];
        args.extend_from_slice(flags);
        std::fs::write(&sched, run(&args).stdout).unwrap();
        let lp = dir.path().join(format!("{formulation}.lp"));
        let assignment = dir.path().join(format!("{formulation}.json"));
        let enc = run(&[
            "encode",
            s(&t),
            "--formulation",
            formulation,
            "--schedule",
            s(&sched),
            "--assignment-out",
            s(&assignment),
            "-o",
            s(&lp),
        ]);
        assert!(enc.status.success(), "{}", String::from_utf8_lossy(&enc.stderr));
        let check = run(&["check", s(&lp), s(&assignment)]);
        assert!(check.status.success());
        let v = json(&check);
        assert_eq!(v["feasible"], true);
        assert_eq!(v["objective"], want);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["solve", "/nonexistent/instance.json"]).status.code(), Some(1));
    assert_eq!(run(&["solve"]).status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"jobs\": 3}").unwrap();
    assert_eq!(run(&["oracle", s(&bad)]).status.code(), Some(1));
}

#[test]
fn gen_is_deterministic() {
    let a = run(&["gen", "--jobs", "8", "--families", "2", "--machines", "2", "--seed", "11"]);
    let b = run(&["gen", "--jobs", "8", "--families", "2", "--machines", "2", "--seed", "11"]);
    let c = run(&["gen", "--jobs", "8", "--families", "2", "--machines", "2", "--seed", "12"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(json(&a)["jobs"].as_array().unwrap().len(), 8);
}

#[test]
fn gantt_renders_svg() {
    let dir = tempfile::tempdir().unwrap();
    let t = table1();
    let solved = dir.path().join("solved.json");
    std::fs::write(&solved, run(&["solve", s(&t)]).stdout).unwrap();
    let svg = dir.path().join("g.svg");
    let out = run(&["gantt", s(&t), s(&solved), "-o", s(&svg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert_eq!(text.matches("class=\"job\"").count(), 5);
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    std::fs::create_dir(&suite).unwrap();
    std::fs::copy(table1(), suite.join("table1.json")).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "bench",
        s(&suite),
        "--configs",
        "ia-IPF,g-IPF",
        "--time-limit",
        "2s",
        "--sample",
        "100ms",
        "-o",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["rows.csv", "gaps.csv", "pairwise.csv", "improvement.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let rows = std::fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert!(rows.lines().skip(1).all(|l| l.contains(",61,")));
}
