use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn longicog(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longicog"))
        .args(args)
        .current_dir(dir)
        .env_remove("LONGICOG_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = longicog(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn small_cohort(dir: &Path) {
    ok(
        dir,
        &[
            "synth", "--out", "cohort", "--participants", "8", "--schedule", "8x4", "--modality", "a:6", "--questions", "3",
            "--informative-dims", "3", "--delta", "2",
        ],
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_then_detect_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    ok(dir.path(), &["validate"]);
    let stdout = ok(dir.path(), &["detect", "--mode", "historical", "--learner", "rf", "--trees", "10"]);
    assert!(stdout.contains("| RF |"));
    let report = json(&dir.path().join("cohort/reports/detect-historical-rf.json"));
    assert_eq!(report["schema"], "longicog-report/1");
    assert_eq!(report["config_fingerprint"].as_str().unwrap().len(), 64);
    assert_eq!(report["pooled"]["n"], 32);
}

#[test]
fn compare_equals_two_detect_runs() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    let common = ["--learner", "rf", "--trees", "10", "--folds", "4"];
    let run = |cmd: &[&str], out: &str| {
        let mut args: Vec<&str> = cmd.to_vec();
        args.extend(common);
        args.extend(["--out", out]);
        ok(dir.path(), &args)
    };
    let md = run(&["compare"], "cmp.json");
    run(&["detect", "--mode", "baseline"], "base.json");
    run(&["detect", "--mode", "historical"], "hist.json");
    let cmp = json(&dir.path().join("cmp.json"));
    assert_eq!(cmp["baseline"], json(&dir.path().join("base.json")));
    assert_eq!(cmp["proposed"], json(&dir.path().join("hist.json")));
    assert!(md.contains("F1 Baseline") && md.contains("F1 Proposed") && md.contains("F1 Δ"), "{md}");
}

#[test]
fn unknown_modality_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    let out = longicog(dir.path(), &["detect", "--modality", "nosuch"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown modality"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    fs::write(
        dir.path().join("exp.toml"),
        "learner = \"dt\"\nfolds = 4\nstrategy = \"grouped\"\nmode = \"baseline\"\nout = \"from-file.json\"\n",
    )
    .unwrap();
    ok(dir.path(), &["detect", "--config", "exp.toml"]);
    let report = json(&dir.path().join("from-file.json"));
    assert_eq!(report["context"]["learner"], "DT");
    assert_eq!(report["context"]["folds"], "4 (grouped)");
    assert_eq!(report["folds"].as_array().unwrap().len(), 4);

    ok(dir.path(), &["detect", "--config", "exp.toml", "--folds", "5", "--out", "flag.json"]);
    let report = json(&dir.path().join("flag.json"));
    assert_eq!(report["folds"].as_array().unwrap().len(), 5);
    assert!(report["context"]["method"].as_str().unwrap().contains("baseline"));

    fs::write(dir.path().join("bad.toml"), "lerner = \"dt\"\n").unwrap();
    assert!(!longicog(dir.path(), &["detect", "--config", "bad.toml"]).status.success());
}

#[test]
fn change_exports_pairs() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    ok(
        dir.path(),
        &["change", "--learner", "dt", "--pairs", "concat+diff", "--folds", "3", "--export", "pairs.jsonl", "--markdown", "change.md"],
    );
    let lines = fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 8 * 12);
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["features"].as_array().unwrap().len(), 18);
    assert!(fs::read_to_string(dir.path().join("change.md")).unwrap().contains("no_change"));
}

#[test]
fn ingest_adds_a_modality() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    let mut lines = String::new();
    for p in 1..=8 {
        for s in 1..=4 {
            lines += &format!(
                "{{\"participant\":\"P{p:02}\",\"session\":{s},\"question\":1,\"modality\":\"b\",\"vector\":[{p}.0,{s}.5]}}\n"
            );
        }
    }
    fs::write(dir.path().join("b.jsonl"), &lines).unwrap();
    let missing = longicog(dir.path(), &["ingest", "--features", "b.jsonl", "--modality", "b"]);
    assert!(!missing.status.success());
    let stdout = ok(dir.path(), &["ingest", "--features", "b.jsonl", "--modality", "b", "--dimension", "2"]);
    assert!(stdout.contains("ingested 32 records"), "{stdout}");
    ok(dir.path(), &["validate"]);
    ok(dir.path(), &["detect", "--modality", "a", "--modality", "b", "--learner", "dt", "--folds", "4", "--out", "fused.json"]);
    assert_eq!(json(&dir.path().join("fused.json"))["context"]["modalities"], "a+b");

    fs::write(
        dir.path().join("bad.jsonl"),
        "{\"participant\":\"P99\",\"session\":1,\"question\":2,\"modality\":\"b\",\"vector\":[1.0,2.0]}\n",
    )
    .unwrap();
    let bad = longicog(dir.path(), &["ingest", "--features", "bad.jsonl", "--modality", "b"]);
    assert!(!bad.status.success());
}

#[test]
fn validate_flags_a_broken_cohort() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    let path = dir.path().join("cohort/cohort.json");
    let mut doc = json(&path);
    doc["sessions"][0]["moca"] = Value::from(10);
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    assert!(!longicog(dir.path(), &["validate"]).status.success());
}

#[test]
fn report_renders_saved_json() {
    let dir = tempfile::tempdir().unwrap();
    small_cohort(dir.path());
    ok(dir.path(), &["detect", "--learner", "svm", "--folds", "4", "--out", "r.json"]);
    let md = ok(dir.path(), &["report", "r.json"]);
    assert!(md.contains("| SVM |") && md.contains("### Per fold"));
    let again = ok(dir.path(), &["report", "r.json", "--format", "json"]);
    assert_eq!(again, fs::read_to_string(dir.path().join("r.json")).unwrap());
}

#[test]
fn help_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(dir.path(), &["detect", "--help"]);
    for flag in ["--cohort", "--modality", "--mode", "--learner", "--trees", "--svm-c", "--gamma", "--lr", "--epochs", "--batch-size", "--hidden", "--folds", "--strategy", "--normalize", "--history", "--seed", "--out", "--markdown", "--export", "--config"] {
        assert!(help.contains(flag), "missing {flag}");
    }
    assert!(!longicog(dir.path(), &["detect", "--no-such-flag"]).status.success());
    assert!(!longicog(dir.path(), &["detect", "--cohort", "missing"]).status.success());
    assert!(!longicog(dir.path(), &["synth", "--out", "c", "--p-flip", "2"]).status.success());
    assert!(!longicog(dir.path(), &["detect", "--learner", "knn"]).status.success());
}
