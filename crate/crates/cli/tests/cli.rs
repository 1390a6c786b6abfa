use std::path::Path;
use std::process::{Command, Output};

use hom_cascade::analysis::CorrelationHistogram;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hom-cascade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("stderr has a record");
    serde_json::from_str(line).expect("stderr is JSON")
}

fn field(summary: &str, key: &str) -> f64 {
    summary
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {summary}"))
        .parse()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn simulate_hom_reports_baseline() {
    let dir = TempDir::new().unwrap();
    let o = run(&["simulate-hom", "--out", &p(&dir, "sim")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!((field(&s, "p0_b") - 0.15).abs() < 0.015, "{s}");
    assert!((field(&s, "visibility_x") - 0.54).abs() < 0.03, "{s}");
    for name in ["hom_curves.csv", "hom_summary.csv"] {
        assert!(dir.path().join("sim").join(name).exists());
    }
}

#[test]
fn equal_peaks_give_zero_visibility() {
    let dir = TempDir::new().unwrap();
    let syn = p(&dir, "syn");
    assert!(run(&["synthesize", "--out", &syn, "--n-traj", "200"]).status.success());
    let input = p(&dir, "syn/hom_equal_peaks.csv");
    let o = run(&["analyze-histogram", "--input", &input, "--out", &p(&dir, "an")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "p0=0.5000 visibility=0.0000");
}

#[test]
fn postselect_writes_one_row_per_cut() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "ps");
    let o = run(&["postselect", "--cut-ps", "64,512", "--n-traj", "2000", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("ps/postselection.csv"));
    assert_eq!(rows.len(), 3);
    let col = rows[0].iter().position(|c| c == "visibility").unwrap();
    let v: Vec<f64> = rows[1..].iter().map(|r| r[col].parse().unwrap()).collect();
    assert!(v[0] > v[1], "{v:?}");
}

#[test]
fn usage_errors_exit_with_two() {
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["exit_code"], 2);

    let o = run(&["fit-lifetime"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "bad.json");
    std::fs::write(&cfg, r#"{"lifetimes_ns": [0.2, 0.4]}"#).unwrap();
    let o = run(&["simulate-hom", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert!(rec["message"].as_str().unwrap().contains("lifetimes_ns"), "{rec}");
    assert!(rec["error"].is_string());
}

#[test]
fn flat_histogram_fit_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "flat.csv");
    let h = CorrelationHistogram::uniform(0.0, 4.0, vec![100; 500]).unwrap();
    std::fs::write(&input, h.to_csv()).unwrap();
    let o = run(&["fit-lifetime", "--input", &input, "--out", &p(&dir, "fit")]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert_eq!(error_record(&o)["exit_code"], 1);
}

fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|path| (path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_do_not_depend_on_thread_count_and_carry_provenance() {
    let dir = TempDir::new().unwrap();
    for threads in ["1", "4"] {
        let out = p(&dir, threads);
        let o = run(&["postselect", "--n-traj", "1000", "--seed", "9", "--threads", threads, "--out", &out]);
        assert!(o.status.success());
    }
    let a = snapshot(&dir.path().join("1"));
    assert_eq!(a, snapshot(&dir.path().join("4")));
    assert!(!a.is_empty());
    for (name, bytes) in &a {
        let text = String::from_utf8_lossy(bytes);
        let second = text.lines().nth(1).unwrap_or_default();
        assert!(second.starts_with("# provenance: tool=hom-cascade/"), "{name}");
        assert!(second.ends_with("seed=9"), "{name}");
    }
}
