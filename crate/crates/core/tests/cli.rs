use std::path::Path;
use std::process::Command;

use qcreduce::cli::{documented_columns, emit_json, execute, parse_report, template, Mode, RunConfig};
use serde_json::{json, Value};

fn write_config(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn reduce(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_reduce")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV, skipping the `#` preamble; header first.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn harmonic_reduce_exits_zero_with_reduced_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &template(Mode::Reduce));
    let out = tmp.path().join("out");
    let (code, stdout, _) = reduce(&[cfg.to_str().unwrap(), "--assert-reduced", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("verdict: reduced"));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["result"]["verdict"], "reduced");
    assert_eq!(report["tool"], "qcreduce");
    for key in ["grid", "dt", "truncation"] {
        assert!(!report["provenance"][key].is_null(), "{key}");
    }
    let rows = csv_rows(&out.join("run_0.csv"));
    assert_eq!(rows[0], documented_columns(Mode::Reduce, 1));
    assert!(rows.iter().all(|r| r.len() == rows[0].len()));
}

#[test]
fn assert_reduced_only_matters_with_the_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = template(Mode::Reduce);
    v["problem"]["hamiltonian"] = json!("cubic-perturbed");
    v["problem"]["horizon"] = json!(1.0);
    v["problem"]["epsilon"] = json!(1e-3);
    let cfg = write_config(tmp.path(), "c.json", &v);
    let out = tmp.path().join("out");
    let (code, stdout, _) = reduce(&[cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("verdict: not-reduced"), "{stdout}");
    let (code, _, _) = reduce(&[cfg.to_str().unwrap(), "--assert-reduced", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn comparator_audit_at_ln2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &template(Mode::ComparatorAudit));
    let out = tmp.path().join("out");
    let (code, _, _) = reduce(&[cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let report = read_json(&out.join("report.json"));
    let sc = &report["result"]["scalars"];
    assert!((sc["norm"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!((sc["trace"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(!out.join("coherent.csv").exists());
}

#[test]
fn scale_table_has_two_decreasing_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &template(Mode::Scale));
    let out = tmp.path().join("out");
    let (code, _, err) = reduce(&[cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let rows = csv_rows(&out.join("hepp.csv"));
    assert_eq!(rows[0], ["lambda", "error", "bound"]);
    assert_eq!(rows.len(), 3);
    let e: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(e[1] < e[0]);
    let preamble = std::fs::read_to_string(out.join("hepp.csv")).unwrap();
    let hash = read_json(&out.join("report.json"))["config_hash"].as_str().unwrap().to_string();
    assert!(preamble.starts_with(&format!("# qcreduce {} config_hash={hash}", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn schema_violations_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = template(Mode::Reduce);
    v["problem"]["horizn"] = json!(1.0);
    let cfg = write_config(tmp.path(), "bad.json", &v);
    assert_eq!(reduce(&[cfg.to_str().unwrap()]).0, 2);
    let mut v = template(Mode::Reduce);
    v["problem"]["horizon"] = json!(-1.0);
    let cfg = write_config(tmp.path(), "neg.json", &v);
    assert_eq!(reduce(&[cfg.to_str().unwrap()]).0, 2);
    std::fs::write(tmp.path().join("junk.json"), "{not json").unwrap();
    assert_eq!(reduce(&[tmp.path().join("junk.json").to_str().unwrap()]).0, 2);
    assert_eq!(reduce(&[tmp.path().join("missing.json").to_str().unwrap()]).0, 2);
}

#[test]
fn numerical_failure_exits_three_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = template(Mode::Reduce);
    v["problem"]["hamiltonian"] = json!("free");
    v["problem"]["alpha0"] = json!({"xi": [0.0], "pi": [10.0]});
    v["problem"]["horizon"] = json!(5.0);
    let cfg = write_config(tmp.path(), "c.json", &v);
    let out = tmp.path().join("out");
    let (code, _, err) = reduce(&[cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    let diag = read_json(&out.join("error.json"));
    assert_eq!(diag["kind"], "numerical");
    assert_eq!(diag["mode"], "reduce");
    assert!(diag["error"].as_str().unwrap().contains("boundary mass"));
}

#[test]
fn identical_configs_give_identical_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &template(Mode::Squeeze));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(reduce(&[cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(reduce(&[cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]).0, 0);
    for f in ["report.json", "squeeze.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = template(Mode::Reduce);
    v["problem"]["region"] = json!({"kind": "ball", "center": {"xi": [1.0], "pi": [0.0]}, "radius": 0.5});
    v["problem"]["horizon"] = json!(1.0);
    let cfg = write_config(tmp.path(), "c.json", &v);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let run = |dir: &Path, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_reduce"))
            .args([cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
            .env("REDUCE_THREADS", threads)
            .status()
            .unwrap()
    };
    assert!(run(&a, "1").success());
    assert!(run(&b, "4").success());
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
}

#[test]
fn json_round_trip_and_sorted_keys() {
    for mode in [Mode::Reduce, Mode::ComparatorAudit, Mode::ClassifyClassical, Mode::Ehrenfest] {
        let config = RunConfig::from_json(&template(mode).to_string()).unwrap();
        let outcome = execute(&config).unwrap();
        let text = emit_json(&outcome.report).unwrap();
        assert_eq!(parse_report(&text).unwrap(), outcome.report);
        let value: Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(emit_json(&parse_report(&text).unwrap()).unwrap(), text);
        // the echoed config is itself a valid config with the same hash
        let echo = RunConfig::from_json(&outcome.report.config.to_string()).unwrap();
        assert_eq!(echo.hash().unwrap(), outcome.report.config_hash);
    }
}

#[test]
fn every_csv_matches_its_documented_columns() {
    for mode in [
        Mode::Reduce,
        Mode::ClassifyClassical,
        Mode::ClassifyQuantum,
        Mode::ComparatorAudit,
        Mode::Squeeze,
        Mode::Ehrenfest,
    ] {
        let config = RunConfig::from_json(&template(mode).to_string()).unwrap();
        let outcome = execute(&config).unwrap();
        assert!(!outcome.tables.is_empty(), "{mode:?}");
        let want = documented_columns(mode, 1);
        for t in &outcome.tables {
            let mut lines = t.body.lines();
            let header: Vec<&str> = lines.next().unwrap().split(',').collect();
            assert_eq!(header, want, "{mode:?}");
            assert!(lines.all(|l| l.split(',').count() == want.len()), "{mode:?}");
        }
    }
}

#[test]
fn subcommands() {
    let (code, out, _) = reduce(&["presets"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 5);
    let (code, out, _) = reduce(&["template", "squeeze"]);
    assert_eq!(code, 0);
    assert!(RunConfig::from_json(&out).is_ok());
    let (code, out, _) = reduce(&["audit", "--s", "0.6931471805599453"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["norm"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert_eq!(reduce(&["audit", "--s", "-1"]).0, 2);
    assert_eq!(reduce(&[]).0, 2);
}
