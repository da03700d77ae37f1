use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aiq_core::{Modality, StandardIntelligentMachine, World};
use serde_json::{json, Value};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn aiq(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aiq"))
        .args(args)
        .env("AIQ_DATA_DIR", data_dir)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error(o: &Output) -> Value {
    assert!(!o.status.success());
    serde_json::from_slice(&o.stderr)
        .unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn sample_bank_is_valid_but_not_conforming() {
    let dir = tempfile::tempdir().unwrap();
    let bank = data("sample_bank.json");
    let out = stdout(&aiq(
        dir.path(),
        &["bank", "validate", bank.to_str().unwrap()],
    ));
    assert_eq!(out, "conforming=false (4/subtest)\nquestions=60\n");
}

#[test]
fn invalid_bank_is_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bank.json");
    std::fs::write(&bad, r#"{"scale_id":"ai-iq-15","questions":[]}"#).unwrap();
    let o = aiq(dir.path(), &["bank", "validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error(&o)["error"]["code"], "invalid_bank");
}

#[test]
fn paper_sampling_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout(&aiq(dir.path(), &["paper", "sample", "--seed", "42"]));
    let b = stdout(&aiq(dir.path(), &["paper", "sample", "--seed", "42"]));
    assert_eq!(a, b);
    let paper: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(paper["paper_id"], "ai-iq-15-seed42");
    assert_eq!(paper["entries"].as_array().unwrap().len(), 60);
    let file = dir.path().join("p.json");
    stdout(&aiq(
        dir.path(),
        &[
            "paper",
            "sample",
            "--seed",
            "42",
            "--out",
            file.to_str().unwrap(),
        ],
    ));
    assert_eq!(std::fs::read_to_string(file).unwrap(), a);
}

#[test]
fn golden_leaderboard_reports_recomputed_values() {
    let dir = tempfile::tempdir().unwrap();
    let table = data("published_leaderboard.csv");
    let csv = stdout(&aiq(
        dir.path(),
        &[
            "report",
            "leaderboard",
            "--golden",
            table.to_str().unwrap(),
            "--format",
            "csv",
        ],
    ));
    assert_eq!(
        csv.lines().nth(1),
        Some("1,18Ages,Human,97,104.85,104.79,-0.06,yes")
    );
    assert_eq!(csv.lines().filter(|l| l.ends_with(",yes")).count(), 49);
    let table_out = stdout(&aiq(
        dir.path(),
        &["report", "leaderboard", "--golden", table.to_str().unwrap()],
    ));
    assert!(
        table_out.trim_end().ends_with("matched=49/53 (±0.1)"),
        "{table_out}"
    );
}

#[test]
fn classify_reads_a_trace_document() {
    let dir = tempfile::tempdir().unwrap();
    let mut world = World::new();
    let known = world.draw("water boils at 100C", Modality::Text);
    let mut m =
        StandardIntelligentMachine::new([Modality::Text], [Modality::Text]).with_knowledge([known]);
    let initial = m.snapshot();
    let fresh = world.draw("ice melts at 0C", Modality::Text);
    m.input_knowledge(fresh);
    let grown = json!({ "initial": initial, "final": m.snapshot(), "trace": m.trace() });
    m.innovate(&mut world, 7);
    let innovated = json!({ "initial": initial, "final": m.snapshot(), "trace": m.trace() });

    for (doc, expected) in [(grown, 2), (innovated, 3)] {
        let path = dir.path().join("trace.json");
        std::fs::write(&path, doc.to_string()).unwrap();
        let out: Value = serde_json::from_str(&stdout(&aiq(
            dir.path(),
            &["machine", "classify", path.to_str().unwrap()],
        )))
        .unwrap();
        assert_eq!(
            out,
            json!({ "system_type": format!("type-{expected}"), "number": expected })
        );
    }
}

#[test]
fn session_run_grade_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = stdout(&aiq(
        d,
        &[
            "session",
            "run",
            "--subject",
            "scripted-demo",
            "--paper",
            "ai-iq-15-seed7",
            "--cohort",
            "cli",
            "--session-id",
            "run-a",
        ],
    ));
    let summary: Value = serde_json::from_str(&run).unwrap();
    assert_eq!(summary["paper_id"], "ai-iq-15-seed7");
    assert_eq!(summary["status"], "awaiting_grades");
    assert_eq!(summary["answered"], 60);
    assert!(d.join("sessions/run-a.jsonl").exists());

    let session: Value =
        serde_json::from_str(&stdout(&aiq(d, &["session", "show", "run-a"]))).unwrap();
    let pending: Vec<String> = session["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["grade"] == "pending")
        .map(|r| r["question_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(pending.len(), summary["pending"].as_u64().unwrap() as usize);
    for q in &pending {
        stdout(&aiq(d, &["session", "grade", "run-a", q, "incorrect"]));
    }
    let again = aiq(d, &["session", "grade", "run-a", &pending[0], "correct"]);
    assert_eq!(error(&again)["error"]["code"], "grade");
    let regraded: Value = serde_json::from_str(&stdout(&aiq(
        d,
        &[
            "session",
            "grade",
            "run-a",
            &pending[0],
            "correct",
            "--allow-regrade",
        ],
    )))
    .unwrap();
    assert_eq!(regraded["status"], "complete");

    let board = stdout(&aiq(
        d,
        &[
            "report",
            "leaderboard",
            "--cohort",
            "cli",
            "--format",
            "csv",
        ],
    ));
    let row = board.lines().nth(1).unwrap();
    assert!(row.starts_with("1,scripted-demo,fixture,,"), "{row}");
    assert!(row.ends_with(",100.00,"), "{row}");
}

#[test]
fn errors_are_json_on_stderr_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let usage = aiq(dir.path(), &["paper", "sample"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error(&usage)["error"]["code"], "usage");

    let o = aiq(dir.path(), &["session", "show", "missing"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error(&o)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("missing"));

    let o = aiq(dir.path(), &["session", "run", "--subject", "ghost"]);
    assert_eq!(error(&o)["error"]["code"], "not_found");
    let o = aiq(
        dir.path(),
        &[
            "session",
            "run",
            "--subject",
            "scripted-demo",
            "--paper",
            "other-seed1",
        ],
    );
    assert_eq!(error(&o)["error"]["code"], "invalid_paper");
    let o = aiq(dir.path(), &["report", "leaderboard", "--cohort", "nobody"]);
    assert_eq!(error(&o)["error"]["code"], "not_found");

    let help = aiq(dir.path(), &["--help"]);
    assert!(help.status.success());
}
