use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aicert")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Runs with `--json` into a temporary file and returns (exit code, report).
fn run_json(args: &[&str]) -> (i32, Value) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.push("--json");
    full.push(&p);
    let out = run(&full);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("no report: {}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), serde_json::from_str(&text).unwrap())
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schema/report.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

fn assert_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn has_cert(report: &Value, kind: &str) -> Option<Value> {
    report["analysis"]["certificates"].as_array().unwrap().iter().find(|c| c["kind"] == kind).cloned()
}

#[test]
fn structural_switch_is_certified_with_path() {
    let (code, r) = run_json(&["analyze", &fixture("switch_bounded.crn"), "--regime", "structural"]);
    assert_eq!(code, 0);
    assert_eq!(has_cert(&r, "path").unwrap()["nodes"], serde_json::json!([1, 2]));
    assert_eq!(r["regime"], "structural");
}

#[test]
fn robust_switch_is_certified() {
    let (code, r) = run_json(&["analyze", &fixture("switch2.crn"), "--regime", "robust"]);
    assert_eq!(code, 0);
    assert_eq!(has_cert(&r, "robust").unwrap()["w_minus"], serde_json::json!([0.125, 0.25]));
    assert!(r["analysis"]["setpoint_bound"]["evaluations"].as_array().unwrap().len() >= 10);
}

#[test]
fn robust_switch_above_threshold_is_refuted_by_a_plus() {
    let (code, r) = run_json(&["analyze", &fixture("switch2_k16.crn"), "--regime", "robust"]);
    assert_eq!(code, 1);
    let refutations: Vec<_> = r["analysis"]["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["kind"] == "refutation")
        .collect();
    assert!(refutations.iter().any(|c| c["witness"]["type"] == "matrix" && c["witness"]["name"] == "A+"));
    assert!(refutations.iter().any(|c| c["reason"].as_str().unwrap().contains("A+ is not Hurwitz")));
}

#[test]
fn robust_switch_at_seven_tenths_is_still_stable() {
    // det A+ = 3 - 2k, so the stability threshold sits at k = 3/2
    let out = run(&["analyze", &fixture("switch2_k07.crn"), "--regime", "robust"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_lower_gain_breaks_controllability() {
    let (code, r) = run_json(&["analyze", &fixture("switch2_nopath.crn")]);
    assert_eq!(code, 1);
    assert_eq!(r["analysis"]["verdicts"]["output_controllable"], false);
    assert_eq!(r["analysis"]["verdicts"]["hurwitz_stable"], true);
}

#[test]
fn sign_cycle_is_refuted() {
    let (code, r) = run_json(&["analyze", &fixture("switch_sign_cycle.crn")]);
    assert_eq!(code, 1);
    let cycle = r["analysis"]["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["kind"] == "refutation" && c["witness"]["type"] == "cycle")
        .cloned()
        .unwrap();
    assert_eq!(cycle["witness"]["nodes"], serde_json::json!([1, 2, 1]));
}

#[test]
fn malformed_input_exits_two_with_diagnostic() {
    let out = run(&["analyze", &fixture("malformed.crn")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("malformed.crn:2:"), "{err}");
    assert!(err.contains("syntax error"), "{err}");
}

#[test]
fn unreadable_file_exits_two() {
    assert_eq!(run(&["analyze", "/nonexistent/net.crn"]).status.code(), Some(2));
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(run(&["analyze", &fixture("switch.crn"), "--regime", "fuzzy"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", &fixture("switch.crn"), "--c", "5"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", &fixture("switch.crn"), "--q", "1,2,3"]).status.code(), Some(2));
}

#[test]
fn sign_rates_cannot_be_analysed_robustly() {
    assert_eq!(run(&["analyze", &fixture("switch_sign.crn"), "--regime", "robust"]).status.code(), Some(2));
}

#[test]
fn bound_flags_change_the_bound() {
    let (_, a) = run_json(&["analyze", &fixture("switch.crn")]);
    let (_, b) = run_json(&["analyze", &fixture("switch.crn"), "--c", "0.5", "--q", "1,2"]);
    let bound = |r: &Value| r["analysis"]["setpoint_bound"]["bound"].as_f64().unwrap();
    assert_ne!(bound(&a), bound(&b));
    assert_eq!(b["analysis"]["setpoint_bound"]["q"], serde_json::json!([1.0, 2.0]));
}

#[test]
fn every_report_matches_the_schema() {
    for (name, regime) in [
        ("switch.crn", None),
        ("switch.crn", Some("structural")),
        ("switch_bounded.crn", None),
        ("switch2.crn", None),
        ("switch2_k16.crn", None),
        ("switch2_nopath.crn", None),
        ("switch_sign.crn", None),
        ("switch_sign_cycle.crn", None),
        ("birth_death.crn", None),
    ] {
        let f = fixture(name);
        let mut args = vec!["analyze", f.as_str()];
        if let Some(r) = regime {
            args.extend(["--regime", r]);
        }
        let (_, report) = run_json(&args);
        assert_valid(&report);
    }
    let (_, sim) = run_json(&["simulate", &fixture("switch.crn"), "--horizon", "20", "--replicates", "4"]);
    assert_valid(&sim);
    let (_, single) = run_json(&["simulate", &fixture("switch.crn"), "--horizon", "1", "--replicates", "1"]);
    assert_valid(&single);
}

#[test]
fn reports_are_deterministic() {
    let strip = |mut v: Value| {
        v["timing"] = Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    for args in [
        vec!["analyze", "switch2.crn"],
        vec!["analyze", "switch_sign.crn"],
        vec!["simulate", "switch.crn", "--horizon", "50", "--replicates", "4", "--jobs", "3"],
    ] {
        let f = fixture(args[1]);
        let mut full = args.clone();
        full[1] = &f;
        let (_, a) = run_json(&full);
        let (_, b) = run_json(&full);
        assert_eq!(strip(a), strip(b));
    }
}

#[test]
fn simulation_does_not_depend_on_thread_count() {
    let f = fixture("switch.crn");
    let base = ["simulate", f.as_str(), "--horizon", "30", "--replicates", "6"];
    let (_, one) = run_json(&[&base[..], &["--jobs", "1"]].concat());
    let (_, four) = run_json(&[&base[..], &["--jobs", "4"]].concat());
    assert_eq!(one["simulation"], four["simulation"]);
}

#[test]
fn simulate_tracks_the_setpoint() {
    let (code, r) = run_json(&["simulate", &fixture("switch.crn"), "--horizon", "200"]);
    assert_eq!(code, 0);
    let sim = &r["simulation"];
    assert_eq!(sim["setpoint"], 5.0);
    assert_eq!(sim["controlled"], "X2");
    assert!((sim["mean"].as_f64().unwrap() - 5.0).abs() < 0.25);
    assert!(sim["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("below certified bound")));
}

#[test]
fn single_short_replicate_fails_the_tolerance() {
    let (code, r) = run_json(&["simulate", &fixture("switch.crn"), "--horizon", "1", "--replicates", "1"]);
    assert_eq!(code, 1);
    assert_eq!(r["simulation"]["stderr"], Value::Null);
    assert_eq!(r["outcome"], "out_of_tolerance");
}

#[test]
fn simulate_needs_controller_parameters() {
    assert_eq!(run(&["simulate", &fixture("switch2.crn")]).status.code(), Some(2));
    let out = run(&["simulate", &fixture("switch.crn"), "--horizon", "5", "--mu", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("paths.csv");
    let out = run(&[
        "simulate",
        &fixture("switch.crn"),
        "--horizon",
        "2",
        "--replicates",
        "2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.code().is_some());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("time,X1,X2,_aic_Z1,_aic_Z2,replicate\n"), "{text}");
}

#[test]
fn explain_point_network() {
    let out = stdout(&run(&["explain", &fixture("switch.crn")]));
    assert!(out.contains("A:\n[-1  0]\n[ 2 -3]"), "{out}");
    assert!(out.contains("S:\n[ 1 -1  0  0  0]\n[ 0  0  1  1 -1]"), "{out}");
    assert!(out.contains("W:\n"));
    assert!(out.contains("graph of A:\n{(1, 2)}"));
    assert!(out.contains("controllability program"));
}

#[test]
fn explain_sign_network() {
    let out = stdout(&run(&["explain", &fixture("switch_sign.crn")]));
    assert!(out.contains("S_A:\n[- 0]\n[+ -]"), "{out}");
    assert!(out.contains("graph of S_A:\n{(1, 2)}"), "{out}");
    assert!(out.contains("graph of S_C:\n{(1, 2), (2, 1)}"), "{out}");
}

#[test]
fn explain_interval_network() {
    let out = stdout(&run(&["explain", &fixture("switch2.crn")]));
    assert!(out.contains("A-:\n[-2  0]\n[ 1 -4]"), "{out}");
    assert!(out.contains("A+:\n[ -1 0.5]\n[  2  -3]"), "{out}");
}
