mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use common::fixture;
use kgrel::cli::dispatch;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kgrel"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("kgrel").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn ingest_writes_snapshot_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kb.bin");
    let pmi = dir.path().join("pmi.tsv");
    let (code, _, err) = run(&[
        "ingest",
        "--triples",
        s(&fixture("commonsense_kb.tsv")),
        "--out",
        s(&out),
        "--pmi-out",
        s(&pmi),
    ]);
    assert_eq!(code, 0, "{err}");
    let kg = kgrel::KnowledgeGraph::read_binary(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(kg.num_triples(), 40);
    assert!(pmi.exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("kb.bin.manifest.json")).unwrap())
            .unwrap();
    assert!(manifest.is_object());
    let text = manifest.to_string();
    assert!(text.contains("kb.bin"), "{text}");
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["ingest", "--bogus"]).0, 1);
    assert_eq!(run(&["no-such-command"]).0, 1);
    assert_eq!(run(&["train", "--kb", "x.tsv"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn binary_reports_exit_codes() {
    let status = bin().arg("--definitely-not-a-flag").output().unwrap();
    assert_eq!(status.status.code(), Some(1));
    let status = bin()
        .args(["retrieve", "--kb", "/nonexistent/kb.tsv", "--text", "car"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn training_on_an_empty_graph_is_a_data_error_and_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("empty.tsv");
    fs::write(&kb, "").unwrap();
    let out_dir = dir.path().join("out");
    fs::create_dir(&out_dir).unwrap();
    let (code, _, err) = run(&[
        "train",
        "--kb",
        s(&kb),
        "--kind",
        "direct",
        "--out",
        s(&out_dir.join("model")),
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(files_in(&out_dir).is_empty());
}

#[test]
fn malformed_triples_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("bad.tsv");
    fs::write(&kb, "IsA\tcar\n").unwrap();
    let out = dir.path().join("kb.bin");
    let (code, _, _) = run(&["ingest", "--triples", s(&kb), "--out", s(&out)]);
    assert_eq!(code, 2);
    assert_eq!(files_in(dir.path()), vec![kb]);
}

#[test]
fn failing_gradient_check_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("gc.json");
    let kb = fixture("commonsense_kb.tsv");
    let (code, _, err) = run(&[
        "grad-check",
        "--kb",
        s(&kb),
        "--tolerance",
        "0",
        "--margin",
        "5",
        "--out",
        s(&report),
    ]);
    assert_eq!(code, 3, "{err}");
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert!(v["max_relative_error"].as_f64().unwrap() > 0.0);

    let (code, _, err) = run(&[
        "grad-check",
        "--kb",
        s(&kb),
        "--margin",
        "1",
        "--epsilon",
        "1e-5",
    ]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn same_seed_gives_byte_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let kb = fixture("commonsense_kb.tsv");
    let train = |name: &str, seed: &str, kind: &str| {
        let out = dir.path().join(name);
        let (code, _, err) = run(&[
            "--seed",
            seed,
            "--quiet",
            "train",
            "--kb",
            s(&kb),
            "--kind",
            kind,
            "--out",
            s(&out),
            "--epochs",
            "3",
            "--hidden",
            "4",
            "--word-dim",
            "4",
        ]);
        assert_eq!(code, 0, "{err}");
        let ext = match kind {
            "direct" => "dir",
            "indirect" => "ind",
            _ => "transe",
        };
        fs::read(dir.path().join(format!("{name}.{ext}"))).unwrap()
    };
    for kind in ["direct", "indirect", "transe"] {
        let a = train("a", "4", kind);
        let b = train("b", "4", kind);
        let c = train("c", "5", kind);
        assert_eq!(a, b, "{kind}");
        assert_ne!(a, c, "{kind}");
    }
}

#[test]
fn retrieve_prints_linked_concepts() {
    let (code, out, err) = run(&[
        "retrieve",
        "--kb",
        s(&fixture("commonsense_kb.tsv")),
        "--text",
        "The driver parked the car in the garage.",
    ]);
    assert_eq!(code, 0, "{err}");
    for c in ["driver", "car", "garage"] {
        assert!(out.contains(c), "{out}");
    }
    assert!(!out.lines().any(|l| l.trim() == "the"), "{out}");
}

#[test]
fn evaluation_with_pmi_baseline_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("eval.json");
    let (code, _, err) = run(&[
        "eval",
        "--kb",
        s(&fixture("commonsense_kb.tsv")),
        "--data",
        s(&fixture("commonsense_qa.jsonl")),
        "--baseline",
        "pmi",
        "--alpha",
        "1",
        "--beta-dir",
        "0",
        "--beta-ind",
        "0",
        "--out",
        s(&report),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["accuracy"].as_f64(), Some(0.5));
    assert_eq!(v["total"].as_u64(), Some(12));
    assert!(dir.path().join("eval.json.manifest.json").exists());
}

#[test]
fn all_zero_weights_are_rejected() {
    let (code, _, _) = run(&[
        "eval",
        "--kb",
        s(&fixture("commonsense_kb.tsv")),
        "--data",
        s(&fixture("commonsense_qa.jsonl")),
        "--baseline",
        "pmi",
        "--alpha",
        "0",
        "--beta-dir",
        "0",
        "--beta-ind",
        "0",
    ]);
    assert_eq!(code, 2);
}
