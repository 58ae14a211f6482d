use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mcb"));
    c.env_remove("MCB_SEED");
    c
}

fn diabetes() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/diabetes.csv")
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Toy data with `y = x1` exactly.
fn noiseless_csv(dir: &Path) -> PathBuf {
    let mut text = String::from("x1,x2,y\n");
    for i in 0..40 {
        let x1 = ((i * 7) % 13) as f64 - 6.0;
        let x2 = ((i * 5) % 11) as f64 * 0.5;
        text.push_str(&format!("{x1},{x2},{x1}\n"));
    }
    write(dir, "toy.csv", &text)
}

#[test]
fn noiseless_toy_bounds_collapse_to_true_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = noiseless_csv(dir.path());
    let report = dir.path().join("fit.json");
    let out = run(bin()
        .args(["fit-mcb", "--B", "30", "--alpha", "0.05", "--alpha", "0.5"])
        .arg("--data")
        .arg(&data)
        .arg("--output")
        .arg(&report));
    assert!(out.status.success());
    let doc = read_json(&report);
    for r in doc["reports"].as_array().unwrap() {
        assert_eq!(r["lbm"], serde_json::json!(["x1"]));
        assert_eq!(r["ubm"], serde_json::json!(["x1"]));
        assert_eq!(r["width"], 0);
        assert_eq!(r["cardinality"], 1);
    }
    assert_eq!(doc["config"]["B"], 30);
    assert_eq!(doc["config"]["selector"]["kind"], "adaptive_lasso");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("LBM: {x1}"), "{stdout}");
}

#[test]
fn missing_response_column_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = noiseless_csv(dir.path());
    let out = run(bin().args(["fit-mcb", "--response", "outcome", "--data"]).arg(&data));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outcome"));
}

#[test]
fn malformed_csv_exits_2_naming_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "bad.csv", "a,b,y\n1,2,3\n4,oops,6\n7,8,9\n");
    let out = run(bin().args(["vscs", "--data"]).arg(&data));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3") && err.contains("'b'"), "{err}");
}

#[test]
fn constant_predictor_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "flat.csv", "a,b,y\n1,5,3\n2,5,1\n3,5,4\n4,5,2\n");
    let out = run(bin().args(["vscs", "--data"]).arg(&data));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invalid_level_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = noiseless_csv(dir.path());
    let out = run(bin().args(["fit-mcb", "--alpha", "1.5", "--data"]).arg(&data));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = diabetes();
    let fit = |name: &str, seed_flag: bool| {
        let path = dir.path().join(name);
        let mut cmd = bin();
        cmd.args(["fit-mcb", "--B", "20", "--algorithm", "ranked", "--threads", "2"])
            .arg("--data")
            .arg(&data)
            .arg("--output")
            .arg(&path);
        if seed_flag {
            cmd.args(["--seed", "77"]);
        } else {
            cmd.env("MCB_SEED", "77");
        }
        assert!(run(&mut cmd).status.success());
        std::fs::read_to_string(path).unwrap()
    };
    let a = fit("a.json", true);
    let b = fit("b.json", false);
    let strip = |s: &str| {
        let mut v: Value = serde_json::from_str(s).unwrap();
        v["config"]["threads"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a)["config"]["seed"], 77);
}

#[test]
fn muc_curves_for_three_selectors_end_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let curves = dir.path().join("curves");
    let out = run(bin()
        .args([
            "muc",
            "--B",
            "20",
            "--selector",
            "adaptive-lasso",
            "--selector",
            "lasso",
            "--selector",
            "stepwise-bic",
            "--format",
            "csv",
        ])
        .arg("--data")
        .arg(diabetes())
        .arg("--output")
        .arg(&curves));
    assert!(out.status.success());
    for label in ["adaptive_lasso", "lasso", "stepwise_bic"] {
        let text = std::fs::read_to_string(curves.join(format!("muc_{label}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "w,w_over_p,cr");
        assert_eq!(lines.len(), 12);
        assert_eq!(*lines.last().unwrap(), "10,1,1");
    }
}

#[test]
fn vscs_report_names_predictors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vscs.json");
    let out = run(bin()
        .args(["vscs", "--alpha", "0.05", "--alpha", "0.25", "--data"])
        .arg(diabetes())
        .arg("--output")
        .arg(&path));
    assert!(out.status.success());
    let doc = read_json(&path);
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    let c95 = reports[0]["cardinality"].as_u64().unwrap();
    let c75 = reports[1]["cardinality"].as_u64().unwrap();
    assert!(c95 >= c75 && c75 >= 1);
    let lbm = reports[0]["lbms"][0].as_array().unwrap();
    assert!(lbm.iter().any(|v| v == "bmi"));
}

#[test]
fn simulate_writes_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "campaign.json",
        r#"{"designs": [{"name": "quiet", "n": 50, "p": 5, "p_star": 2, "sigma": 1e-6,
             "B": 10, "reps": 3, "alpha_grid": [0.05, 0.25], "vscs": true}]}"#,
    );
    let table = dir.path().join("table.csv");
    let mucs = dir.path().join("mucs");
    let out = run(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&config)
        .arg("--output")
        .arg(&table)
        .arg("--muc-dir")
        .arg(&mucs));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("quiet: 3/3"));
    let text = std::fs::read_to_string(&table).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r[4] == "MCB").count(), 2);
    assert_eq!(rows.iter().filter(|r| r[4] == "VSCS").count(), 2);
    for r in &rows {
        assert_eq!(r[5], "1.0000", "{r:?}");
    }
    assert!(mucs.join("quiet_muc.csv").exists());
}

#[test]
fn bad_campaign_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", r#"{"designs": [{"p": 3, "p_star": 5}]}"#);
    let out = run(bin().arg("simulate").arg("--config").arg(&config));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_with_duplicate_selector_gives_equal_areas() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "design.json",
        r#"{"name": "dup", "n": 60, "p": 6, "p_star": 3, "B": 15, "reps": 2}"#,
    );
    let path = dir.path().join("cmp.json");
    let out = run(bin()
        .args(["compare", "--selector", "mcp", "--selector", "mcp", "--config"])
        .arg(&config)
        .arg("--output")
        .arg(&path));
    assert!(out.status.success());
    let doc = read_json(&path);
    let curves = doc["comparison"]["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 2);
    assert_eq!(curves[0]["amuc"], curves[1]["amuc"]);
    assert_eq!(curves[0]["label"], "mcp");
    assert_eq!(curves[1]["label"], "mcp_2");
}
