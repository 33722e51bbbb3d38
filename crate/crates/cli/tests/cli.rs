use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const REGULAR: &str = r#"
pos = "N"
num_lemmas = 60

[[slots]]
feature = "NUM"
values = [{ tag = "SG" }, { tag = "PL", suffix = "lar" }]

[[slots]]
feature = "CASE"
values = [
    { tag = "NOM" },
    { tag = "ACC", suffix = "ik" },
    { tag = "DAT", suffix = "em" },
    { tag = "LOC", suffix = "dan" },
]
"#;

const FOUR_CELL: &str = r#"
num_lemmas = 150
emit_lemma_rows = true

[[slots]]
feature = "T"
values = [
    { tag = "PRS", suffix = "en" },
    { tag = "PST", suffix = "ot" },
    { tag = "PTCP", suffix = "ing" },
    { tag = "FUT", suffix = "uk" },
]
"#;

fn elicit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elicit")).args(args).output().unwrap()
}

fn synth(dir: &Path, config: &str, seed: u64) -> PathBuf {
    let cfg = dir.join("lang.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("syn{seed}.tsv"));
    let o = elicit(&["synth", "--synth-config", cfg.to_str().unwrap(), "--seed", &seed.to_string(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn synth_writes_deterministic_tsv() {
    let dir = TempDir::new().unwrap();
    let a = fs::read_to_string(synth(dir.path(), REGULAR, 3)).unwrap();
    assert_eq!(a.lines().count(), 480);
    let again = dir.path().join("again.tsv");
    let cfg = dir.path().join("lang.toml");
    elicit(&["synth", "--synth-config", cfg.to_str().unwrap(), "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(again).unwrap(), a.as_bytes());
    assert!(a.lines().all(|l| l.split('\t').count() == 3));
}

#[test]
fn synth_rejects_zero_lemmas() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("zero.toml");
    fs::write(&cfg, REGULAR.replace("num_lemmas = 60", "num_lemmas = 0")).unwrap();
    let out = dir.path().join("x.tsv");
    let o = elicit(&["synth", "--synth-config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn run_writes_reports_per_experiment_and_seed() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), REGULAR, 1);
    let out = dir.path().join("out");
    let o = elicit(&[
        "run", "--data", data.to_str().unwrap(), "--exp", "1..4", "--batch", "40", "--seed", "7", "--seed", "8",
        "--language", "syn", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for exp in 1..=4 {
        for seed in [7, 8] {
            let run = out.join("syn").join(format!("exp{exp}")).join(format!("seed{seed}"));
            for f in ["report.json", "cycles.csv", "ledger.csv", "summary.csv"] {
                assert!(run.join(f).is_file(), "{}", run.join(f).display());
            }
            let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
            assert_eq!(report["final_accuracy"], 1.0);
            assert_eq!(report["total_queries"], 200);
            let summary = fs::read_to_string(run.join("summary.csv")).unwrap();
            let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
            let (p1, p2, p3, n) = (
                report["p1"].as_u64().unwrap(),
                report["p2"].as_u64().unwrap(),
                report["p3"].as_u64().unwrap(),
                report["n"].as_u64().unwrap(),
            );
            assert_eq!(row[3].parse::<f64>().unwrap(), 1.0 - (p1 + p2 + p3) as f64 / n as f64);
            assert_eq!(row[3].parse::<f64>().unwrap(), report["nes"].as_f64().unwrap());
        }
    }
    let combined = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(combined.lines().count(), 9);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), FOUR_CELL, 2);
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = elicit(&["run", "--data", data.to_str().unwrap(), "--exp", "4", "--batch", "50", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        reports.push(fs::read(out.join("syn2/exp4/seed5/report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn missing_data_names_the_path() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = elicit(&["run", "--data", "/no/such/eng.tsv", "--exp", "1", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/eng.tsv"));
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn malformed_data_fails_with_line_number() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bad.tsv");
    fs::write(&data, "walk\twalked\tV;PST\nbroken line\n").unwrap();
    let o = elicit(&["run", "--data", data.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn bad_experiment_is_usage_error() {
    let o = elicit(&["run", "--data", "x.tsv", "--exp", "5", "--out", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn heatmap_on_four_cell_language() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), FOUR_CELL, 4);
    let out = dir.path().join("hm");
    let o = elicit(&["heatmap", "--data", data.to_str().unwrap(), "--budget", "400", "--seed", "1", "--out", out.to_str().unwrap(), "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    for (i, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').skip(1).collect();
        assert_eq!(cells.len(), 5);
        for (j, c) in cells.iter().enumerate() {
            if i == j {
                assert!(c.is_empty());
            } else {
                assert_eq!(c.parse::<f64>().unwrap(), 1.0, "{line}");
            }
        }
    }
    assert_eq!(fs::read_to_string(out.join("weights.csv")).unwrap().lines().count(), 6);
    assert!(fs::read_to_string(out.join("heatmap.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn heatmap_budget_errors() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), FOUR_CELL, 4);
    let out = dir.path().join("hm");
    let o = elicit(&["heatmap", "--data", data.to_str().unwrap(), "--budget", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = elicit(&["heatmap", "--data", data.to_str().unwrap(), "--budget", "4000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("1000") && err.contains("150"), "{err}");
    assert!(!out.join("heatmap.csv").exists());
}
