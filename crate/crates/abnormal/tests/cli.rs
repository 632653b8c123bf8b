use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

#[path = "support/fixture.rs"]
mod fixture;

fn abnormal(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_abnormal"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn abnormal");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn setup(paragraphs: usize, qas: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let doc = fixture::squad(paragraphs, qas, 11);
    fs::write(dir.path().join("train.json"), serde_json::to_vec(&doc).unwrap()).unwrap();
    dir
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn full_pipeline_squad() {
    let dir = setup(40, 3);
    let d = dir.path();
    let (code, err) = abnormal(d, &["score", "-i", "train.json", "-o", "out"]);
    assert_eq!(code, 0, "{err}");
    let rec = read_json(&d.join("out/scores.json"));
    assert_eq!(rec["n"], 120);

    let (code, err) = abnormal(d, &["sample", "-o", "out", "--k", "10", "--subset-format", "squad"]);
    assert_eq!(code, 0, "{err}");
    let subset = read_json(&d.join("out/subset.json"));
    let qas: usize = subset["data"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|a| a["paragraphs"].as_array().unwrap())
        .map(|p| p["qas"].as_array().unwrap().len())
        .sum();
    assert_eq!(qas, 30);
    assert_eq!(read_json(&d.join("out/selection.json"))["written"], 30);

    let (code, err) = abnormal(d, &["analyze", "-o", "out", "--orders", "1,2"]);
    assert_eq!(code, 0, "{err}");
    let summary = read_json(&d.join("out/report/summary.json"));
    assert_eq!(summary["selection"]["unselected"], 90);
    assert_eq!(summary["pearson_by_order"].as_array().unwrap().len(), 2);
    let report = fs::read_to_string(d.join("out/report/scores.csv")).unwrap();
    assert!(report.starts_with("ordinal,id,title,char_length,score,category\n"));
    assert_eq!(report.lines().count(), 121);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = setup(30, 2);
    let d = dir.path();
    let run = |out: &str| {
        for args in [
            vec!["score", "-i", "train.json", "-o", out, "--save-features"],
            vec!["sample", "-i", "train.json", "-o", out, "--k", "5", "--bucket-width", "100"],
            vec!["analyze", "-i", "train.json", "-o", out],
        ] {
            let (code, err) = abnormal(d, &args);
            assert_eq!(code, 0, "{err}");
        }
    };
    run("a");
    let snapshot = |root: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for sub in ["", "report"] {
            for e in fs::read_dir(root.join(sub)).unwrap() {
                let p = e.unwrap().path();
                if p.is_file() {
                    files.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
                }
            }
        }
        files.sort();
        files
    };
    let first = snapshot(&d.join("a"));
    run("a");
    assert_eq!(snapshot(&d.join("a")), first);
    assert!(first.iter().any(|(f, _)| f == "features.bin"));
}

#[test]
fn stale_input_refused() {
    let dir = setup(20, 2);
    let d = dir.path();
    assert_eq!(abnormal(d, &["score", "-i", "train.json", "-o", "out"]).0, 0);
    let doc = fixture::squad(20, 2, 12);
    fs::write(d.join("train.json"), serde_json::to_vec(&doc).unwrap()).unwrap();
    let (code, err) = abnormal(d, &["sample", "-o", "out", "--k", "2"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("stale"), "{err}");
    assert!(!d.join("out/selection.csv").exists());
    assert_eq!(abnormal(d, &["analyze", "-o", "out"]).0, 2);
}

#[test]
fn tampered_scores_refused() {
    let dir = setup(20, 2);
    let d = dir.path();
    assert_eq!(abnormal(d, &["score", "-i", "train.json", "-o", "out"]).0, 0);
    let path = d.join("out/scores.csv");
    let text = fs::read_to_string(&path).unwrap().replacen(",q0-0,", ",q0-0x,", 1);
    fs::write(&path, text).unwrap();
    assert_eq!(abnormal(d, &["sample", "-o", "out", "--k", "2"]).0, 2);
}

#[test]
fn missing_input_exits_1_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = abnormal(dir.path(), &["score", "-i", "nope.json", "-o", "out"]);
    assert_eq!(code, 1);
    assert!(err.contains("nope.json"), "{err}");
    assert!(!dir.path().join("out").exists());
    assert_eq!(abnormal(dir.path(), &["sample", "-o", "out"]).0, 1);
    assert_eq!(abnormal(dir.path(), &["score"]).0, 1);
}

#[test]
fn capacity_exits_1() {
    let dir = setup(10, 2);
    let d = dir.path();
    assert_eq!(abnormal(d, &["score", "-i", "train.json", "-o", "out"]).0, 0);
    let (code, err) = abnormal(d, &["sample", "-o", "out", "--k", "7"]);
    assert_eq!(code, 1, "{err}");
    assert!(!d.join("out/subset.jsonl").exists());
    assert_eq!(abnormal(d, &["sample", "-o", "out", "--k", "7", "--overlap"]).0, 0);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{\"data\": [ {\"title\": \"x\", }").unwrap();
    let (code, err) = abnormal(d, &["score", "-i", "bad.json", "-o", "out"]);
    assert_eq!(code, 2);
    assert!(err.contains("byte"), "{err}");
    fs::write(d.join("bad.json"), r#"{"data": [{"title": "x", "paragraphs": [{"qas": []}]}]}"#).unwrap();
    let (code, err) = abnormal(d, &["score", "-i", "bad.json", "-o", "out"]);
    assert_eq!(code, 2);
    assert!(err.contains("$.data[0].paragraphs[0]"), "{err}");
    fs::write(d.join("bad.jsonl"), "{\"context\": \"a b\"}\n{oops\n").unwrap();
    let (code, err) = abnormal(d, &["score", "-i", "bad.jsonl", "-o", "out"]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
    assert!(!d.join("out").exists());
}

#[test]
fn degenerate_corpus_exits_3_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let lines: String = (0..10).map(|_| "{\"context\": \"same words here\"}\n").collect();
    fs::write(d.join("same.jsonl"), lines).unwrap();
    let (code, err) = abnormal(d, &["score", "-i", "same.jsonl", "-o", "out"]);
    assert_eq!(code, 3, "{err}");
    assert!(!d.join("out").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = setup(20, 2);
    let d = dir.path();
    fs::write(
        d.join("run.json"),
        r#"{"input": "train.json", "output_dir": "cfg", "order": 2, "selection": {"k_low": 3, "k_high": 3, "k_mean": 3}}"#,
    )
    .unwrap();
    assert_eq!(abnormal(d, &["score", "--config", "run.json", "--order", "1"]).0, 0);
    assert_eq!(read_json(&d.join("cfg/scores.json"))["features"]["order"], 1);
    assert_eq!(abnormal(d, &["sample", "--config", "run.json", "--k-mean", "1"]).0, 0);
    assert_eq!(read_json(&d.join("cfg/selection.json"))["written"], 7);
    fs::write(d.join("broken.json"), r#"{"ordr": 2}"#).unwrap();
    assert_eq!(abnormal(d, &["score", "--config", "broken.json"]).0, 1);
}

#[test]
fn analyze_ignores_selection_from_other_scores() {
    let dir = setup(20, 2);
    let d = dir.path();
    assert_eq!(abnormal(d, &["score", "-i", "train.json", "-o", "out"]).0, 0);
    assert_eq!(abnormal(d, &["sample", "-o", "out", "--k", "2"]).0, 0);
    assert_eq!(abnormal(d, &["score", "-i", "train.json", "-o", "out", "--order", "2"]).0, 0);
    assert_eq!(abnormal(d, &["analyze", "-o", "out"]).0, 0);
    let summary = read_json(&d.join("out/report/summary.json"));
    assert_eq!(summary["selection"]["unselected"], 40);
}

#[test]
fn synth_then_score() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["synth", "-o", "s.jsonl", "--contexts", "60", "--max-tokens", "30", "--seed", "2"];
    assert_eq!(abnormal(d, &args).0, 0);
    let first = fs::read(d.join("s.jsonl")).unwrap();
    assert_eq!(abnormal(d, &args).0, 0);
    assert_eq!(fs::read(d.join("s.jsonl")).unwrap(), first);
    assert_eq!(abnormal(d, &["score", "-i", "s.jsonl", "-o", "out"]).0, 0);
}
