use std::process::{Command, Output};

use majsim::exact::ExactJson;
use serde_json::Value;

fn majsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_majsim"))
        .args(args)
        .env("MAJSIM_THREADS", "2")
        .output()
        .expect("run majsim")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Second line of a JSON payload (the first is metadata).
fn record(out: &Output) -> Value {
    let text = stdout(out);
    let mut lines = text.lines();
    let meta: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(meta["meta"]["config_hash"].is_string());
    serde_json::from_str(lines.next().unwrap()).unwrap()
}

fn write_graph(dir: &tempfile::TempDir, name: &str, family: &str, n: &str) -> String {
    let path = dir.path().join(name);
    let out = majsim(&["gen", family, n, "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let k5 = write_graph(&dir, "k5.edges", "complete", "5");
    let c4 = write_graph(&dir, "c4.edges", "cycle", "4");
    let k3 = write_graph(&dir, "k3.edges", "complete", "3");

    let out = majsim(&["simulate", "--graph", &k5, "--init", "+++++"]);
    assert!(out.status.success());
    let rec = record(&out);
    assert_eq!(rec["steps_to_absorption"], 0);
    assert_eq!(rec["consensus"], true);

    let rec = record(&majsim(&["simulate", "--graph", &c4, "--init", "++--"]));
    assert_eq!(rec["steps_to_absorption"], 0);
    assert_eq!(rec["consensus"], false);
    assert_eq!(rec["final"], "++--");

    let out = majsim(&["simulate", "--graph", &k3, "--init", "++-", "--seed", "7", "--trace"]);
    let rec = record(&out);
    assert_eq!(rec["consensus"], true);
    assert_eq!(rec["final"], "+++");
    let trace: Vec<u64> = serde_json::from_value(rec["z_trace"].clone()).unwrap();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));

    let meta: Value = serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    assert_eq!(meta["meta"]["seed"], 7);
}

#[test]
fn simulate_timeout_exits_nonzero_with_partial_record() {
    let out = majsim(&["simulate", "--family", "cycle", "--n", "12", "--init", "+-+-+-+-+-+-", "--max-steps", "1"]);
    assert!(!out.status.success());
    let rec = record(&out);
    assert_eq!(rec["timeout"], true);
    assert_eq!(rec["initial"], "+-+-+-+-+-+-");
}

#[test]
fn simulate_rejects_bad_initial_state() {
    assert!(!majsim(&["simulate", "--family", "cycle", "--n", "4", "--init", "++-"]).status.success());
    assert!(!majsim(&["simulate", "--family", "cycle", "--n", "4", "--init", "++0-"]).status.success());
}

#[test]
fn exact_examples() {
    let dir = tempfile::tempdir().unwrap();
    let c4 = write_graph(&dir, "c4.edges", "cycle", "4");
    let k4 = write_graph(&dir, "k4.edges", "complete", "4");
    let p2 = write_graph(&dir, "p2.edges", "path", "2");
    let value = |args: &[&str]| -> ExactJson { serde_json::from_value(record(&majsim(args))).unwrap() };
    assert!((value(&["exact", "--graph", &c4, "--p", "0.5"]).p_consensus - 0.75).abs() < 1e-12);
    assert!((value(&["exact", "--graph", &k4, "--p", "0.3"]).p_consensus - 1.0).abs() < 1e-12);
    let p2v = value(&["exact", "--graph", &p2, "--p", "0"]);
    assert_eq!(p2v.p_consensus, 1.0);
    assert_eq!(p2v.h.unwrap().len(), 4);

    let out = majsim(&["exact", "--family", "path", "--n", "17"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("enumeration cap"));
}

#[test]
fn gen_rejects_bad_family_and_size() {
    assert!(!majsim(&["gen", "wheel", "5"]).status.success());
    assert!(!majsim(&["gen", "cycle", "2"]).status.success());
    assert!(!majsim(&["gen", "random", "4", "--extra", "9"]).status.success());
}

#[test]
fn disconnected_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.edges");
    std::fs::write(&path, "4 2\n0 1\n2 3\n").unwrap();
    let out = majsim(&["exact", "--graph", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not connected"));
}

#[test]
fn mc_and_sweep_outputs() {
    let out = majsim(&["mc", "--family", "complete", "--n", "6", "--p", "0.5", "--trials", "500"]);
    assert!(out.status.success());
    let rec = record(&out);
    assert_eq!(rec["estimate"]["consensus_frequency"], 1.0);
    assert_eq!(rec["report"]["method"], "mc");

    let out = majsim(&["sweep", "--family", "path", "--n", "5", "--p-grid", "0.1,0.5,0.9", "--trials", "300"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# majsim "));
    assert_eq!(
        lines[1],
        "graph_id,n,m,p,bound,exact_or_estimate,method,satisfied,wilson_low,wilson_high,mean_absorption_steps,mean_flips"
    );
    assert_eq!(lines.len(), 5);
    let bounds: Vec<f64> = lines[2..].iter().map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    for (b, want) in bounds.iter().zip([0.28, -1.0, 0.28]) {
        assert!((b - want).abs() < 1e-9);
    }
}

#[test]
fn verify_suites_report_instances() {
    let out = majsim(&["verify", "bound", "--max-n", "8", "--p-grid", "0.05:0.95:0.05"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["summary"]["passed"], true);
    assert!(text.lines().count() > 10);

    let out = majsim(&["verify", "blocked", "--family", "cycle", "--n", "4..10"]);
    assert!(out.status.success());

    let out = majsim(&["verify", "potential", "--trials", "100", "--family", "random"]);
    assert!(out.status.success());

    let out = majsim(&["verify", "absorption", "--trials", "100"]);
    assert!(out.status.success());

    assert!(!majsim(&["verify", "nonsense"]).status.success());
}

#[test]
fn verify_reachability_dumps_counterexamples() {
    // Small paths satisfy the equivalence; from n = 6 on it has counterexamples.
    let out = majsim(&["verify", "reachability", "--family", "path", "--n", "4..5"]);
    assert!(out.status.success());
    let out = majsim(&["verify", "reachability", "--family", "path", "--n", "6"]);
    assert!(!out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\"state\":\"++-+--\""));
    assert!(text.contains("\"graph\":\"6 5; 0 1; 1 2; 2 3; 3 4; 4 5\""));
}
