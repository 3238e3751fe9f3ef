//! The `hrvguard` binary: exit codes, file layout and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hrvguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrvguard"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1767225600")
        .env_remove("HRVGUARD_BACKEND_URL")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn setup(dir: &Path) {
    assert!(hrvguard(&["gen-synthetic", "--out", s(dir)]).status.success());
    let out = hrvguard(&["ingest-kb", "--manifest", s(&dir.join("corpus/manifest.jsonl")), "--out", s(&dir.join("store"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ingest_is_deterministic_and_conserves_chunks() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let again = d.path().join("store2");
    let out = hrvguard(&["ingest-kb", "--manifest", s(&d.path().join("corpus/manifest.jsonl")), "--out", s(&again)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("from 6 documents"));
    for f in ["manifest.json", "vectors.bin", "chunks.jsonl"] {
        assert_eq!(fs::read(d.path().join("store").join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_document_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("m.jsonl"), "{\"path\": \"nope.txt\"}\n").unwrap();
    let out = hrvguard(&["ingest-kb", "--manifest", s(&d.path().join("m.jsonl")), "--out", s(&d.path().join("kb"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn analyze_then_evaluate() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let run = d.path().join("run");
    let out = hrvguard(&["analyze", "--trials", s(&d.path().join("trials.json")), "--store", s(&d.path().join("store")), "--out", s(&run)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(run.join("run.json")).unwrap();
    assert!(manifest.contains("\"created_at\": \"2026-01-01T00:00:00Z\""));
    assert_eq!(fs::read_dir(run.join("trials")).unwrap().count(), 6);

    let out = hrvguard(&["evaluate", s(&run), "--baseline", s(&run)]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("C1 state agreement %") && table.contains("100.0"));
    let first = fs::read(run.join("metrics.json")).unwrap();
    hrvguard(&["evaluate", s(&run), "--baseline", s(&run)]);
    assert_eq!(first, fs::read(run.join("metrics.json")).unwrap());
}

#[test]
fn no_guardrails_is_recorded_in_run_json() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let run = d.path().join("run");
    let out = hrvguard(&[
        "analyze", "--trials", s(&d.path().join("trials.json")), "--store", s(&d.path().join("store")), "--out", s(&run), "--no-guardrails",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("run.json")).unwrap()).unwrap();
    assert_eq!(v["row"], "w/o Guardrails");
    assert_eq!(v["config"]["guardrails"]["enabled"], false);
}

#[test]
fn unreachable_backend_exits_nonzero() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let cfg = d.path().join("fast.toml");
    fs::write(&cfg, "[pipeline.retry]\nmax_retries = 1\nbase_delay_ms = 1\n").unwrap();
    let out = hrvguard(&[
        "analyze", "--trials", s(&d.path().join("trials.json")), "--out", s(&d.path().join("run")), "--no-rag",
        "--backend", "http", "--backend-url", "http://127.0.0.1:9/v1", "--config", s(&cfg),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0/6 trials succeeded"));
    let log = fs::read_to_string(d.path().join("run/run_log.jsonl")).unwrap();
    assert!(log.to_lowercase().contains("transport"), "{log}");
}

#[test]
fn rag_without_store_and_bad_trials_exit_2() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let out = hrvguard(&["analyze", "--trials", s(&d.path().join("trials.json")), "--out", s(&d.path().join("run"))]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(d.path().join("bad.json"), "[{\"subject_id\":\"S\",\"trial_id\":\"T\",\"rr_ms\":[800,-1]}]").unwrap();
    let out = hrvguard(&["analyze", "--trials", s(&d.path().join("bad.json")), "--out", s(&d.path().join("run")), "--no-rag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_reports_mismatched_keys() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.csv"), "subject,trial,gt,pred\nS1,T1,HVHA,HVHA\nS1,T2,LVLA,HVHA\n").unwrap();
    fs::write(d.path().join("g.csv"), "subject,trial,gt\nS1,T1,HVHA\nS1,T3,LVLA\n").unwrap();
    let out = hrvguard(&["evaluate", s(&d.path().join("p.csv")), "--gt", s(&d.path().join("g.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("S1_T2") && err.contains("S1_T3"), "{err}");
}

#[test]
fn features_writes_one_panel_per_trial() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let out = hrvguard(&["features", "--trials", s(&d.path().join("trials.json")), "--out", s(&d.path().join("f.jsonl"))]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(d.path().join("f.jsonl")).unwrap().lines().count(), 6);
}

#[test]
fn ablate_prints_the_comparison_table() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let out = hrvguard(&["ablate", "--trials", s(&d.path().join("trials.json")), "--store", s(&d.path().join("store")), "--out", s(&d.path().join("abl"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    for label in ["Full System", "w/o RAG", "w/o Guardrails", "w/o ΔZ", "Minimal"] {
        assert!(table.contains(label));
    }
    for slug in ["full", "no-rag", "no-guardrails", "no-delta-z", "minimal"] {
        assert!(d.path().join("abl").join(slug).join("run.json").exists());
    }
}
