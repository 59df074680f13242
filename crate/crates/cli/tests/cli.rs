use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SCHEMA: &str = r#"
name = "toy"
delimiter = ","

[label]
column = "y"
positive = ["yes"]
negative = ["no"]

[protected]
column = "group"
equals = ["b"]

[[columns]]
name = "x"
kind = "numeric"

[[columns]]
name = "z"
kind = "numeric"

[[columns]]
name = "group"
kind = "categorical"

[[columns]]
name = "y"
kind = "ignore"
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fairshift"));
    c.env_remove("FAIRSHIFT_OUT_DIR").env_remove("FAIRSHIFT_DATA_DIR");
    c
}

fn repo_data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// A small biased dataset: group b needs a larger x to be labeled yes.
fn toy_workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut state: u64 = 12345;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as f64 / (1u64 << 31) as f64
    };
    let mut text = String::new();
    for _ in 0..400 {
        let x = next() * 10.0;
        let z = next() * 4.0;
        let b = next() < 0.4;
        let noise = next() - 0.5;
        let yes = x + 0.5 * z + noise > if b { 7.5 } else { 5.5 };
        text.push_str(&format!(
            "{x:.3},{z:.3},{},{}\n",
            if b { "b" } else { "a" },
            if yes { "yes" } else { "no" }
        ));
    }
    fs::write(dir.path().join("toy.data"), text).unwrap();
    fs::write(dir.path().join("toy.toml"), SCHEMA).unwrap();
    fs::write(
        dir.path().join("exp.toml"),
        r#"
name = "toy"
seed = 7
trials = 3

[dataset]
schema = "toy.toml"
data = ["toy.data"]

[learners]
kinds = ["boost", "logreg"]
boost = { rounds = 10 }
"#,
    )
    .unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    if !out.status.success() {
        eprintln!("stdout: {}", String::from_utf8_lossy(&out.stdout));
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn ok(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(out.status.success(), "command failed: {:?}", out.status);
    String::from_utf8(out.stdout).unwrap()
}

fn config(dir: &TempDir) -> PathBuf {
    dir.path().join("exp.toml")
}

#[test]
fn missing_subcommand_and_bad_flags_exit_2() {
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    let ws = toy_workspace();
    let out = bin()
        .args(["run", "--config"])
        .arg(config(&ws))
        .args(["--epsilon", "abc"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = bin().args(["inspect"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_are_one_json_line() {
    let out = bin()
        .args(["inspect", "--dataset", "census", "--data-dir", "/definitely/not/here"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"], "missing_data");
    assert!(v["message"].as_str().unwrap().contains("adult.data"));

    let ws = toy_workspace();
    let out = bin()
        .args(["run", "--config"])
        .arg(config(&ws))
        .args(["--eta", "0.7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(v["error"], "config");
}

#[test]
fn inspect_reports_counts() {
    let ws = toy_workspace();
    let out = ok(bin().args(["inspect", "--config"]).arg(config(&ws)));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 400);
    assert_eq!(v["features"], 4);
    assert!(v["label_bias"].as_f64().unwrap() > 0.1);
}

#[test]
fn train_then_evaluate_round_trips() {
    let ws = toy_workspace();
    let out_dir = ws.path().join("out");
    ok(bin()
        .args(["train", "--config"])
        .arg(config(&ws))
        .args(["--learner", "logreg", "--method", "sdb", "--out-dir"])
        .arg(&out_dir));
    let model = out_dir.join("toy_logreg_sdb.model.json");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(doc["format_version"], 1);
    assert_eq!(doc["post"]["method"], "sdb");
    assert!(doc["post"]["lambda"].as_f64().unwrap() >= 0.0);
    assert_eq!(doc["feature_names"].as_array().unwrap().len(), 4);
    assert!(out_dir.join("toy_logreg_sdb_manifest.json").exists());

    let out = ok(bin()
        .args(["evaluate", "--config"])
        .arg(config(&ws))
        .arg("--model")
        .arg(&model)
        .arg("--out-dir")
        .arg(&out_dir));
    let json_end = out.rfind('}').unwrap();
    let v: serde_json::Value = serde_json::from_str(&out[..=json_end]).unwrap();
    assert_eq!(v["result"]["n"], 100);
    assert!(out_dir.join("toy_logreg_sdb_eval.json").exists());

    let out = ok(bin()
        .args(["evaluate", "--config"])
        .arg(config(&ws))
        .arg("--model")
        .arg(&model)
        .args(["--on", "all", "--out-dir"])
        .arg(&out_dir));
    let json_end = out.rfind('}').unwrap();
    let v: serde_json::Value = serde_json::from_str(&out[..=json_end]).unwrap();
    assert_eq!(v["result"]["n"], 400);
}

#[test]
fn zero_shift_sweep_matches_the_raw_model() {
    let ws = toy_workspace();
    let out_dir = ws.path().join("out");
    ok(bin()
        .args(["sweep", "--config"])
        .arg(config(&ws))
        .args(["--learner", "boost", "--lambdas", "0", "--out-dir"])
        .arg(&out_dir));
    let curve = fs::read_to_string(out_dir.join("toy_sweep_boost.csv")).unwrap();
    let rows: Vec<&str> = curve.lines().collect();
    assert_eq!(rows.len(), 2, "{curve}");
    let f: Vec<f64> = rows[1].split(',').map(|x| x.parse().unwrap()).collect();

    ok(bin()
        .args(["train", "--config"])
        .arg(config(&ws))
        .args(["--learner", "boost", "--out-dir"])
        .arg(&out_dir));
    let out = ok(bin()
        .args(["evaluate", "--config"])
        .arg(config(&ws))
        .arg("--model")
        .arg(out_dir.join("toy_boost_none.model.json"))
        .arg("--out-dir")
        .arg(&out_dir));
    let json_end = out.rfind('}').unwrap();
    let v: serde_json::Value = serde_json::from_str(&out[..=json_end]).unwrap();
    assert_eq!(f[0], 0.0);
    assert_eq!(f[1], v["result"]["bias"].as_f64().unwrap());
    assert_eq!(f[2], v["result"]["error"].as_f64().unwrap());
}

#[test]
fn run_is_independent_of_worker_count_and_leaves_data_alone() {
    let ws = toy_workspace();
    let before = fs::read(ws.path().join("toy.data")).unwrap();
    let serial = ws.path().join("serial");
    let parallel = ws.path().join("parallel");
    ok(bin()
        .args(["run", "--config"])
        .arg(config(&ws))
        .args(["--workers", "1", "--out-dir"])
        .arg(&serial));
    ok(bin()
        .args(["run", "--config"])
        .arg(config(&ws))
        .args(["--workers", "3", "--out-dir"])
        .arg(&parallel));
    for name in ["toy_table.csv", "toy_histogram.csv", "toy_curve_boost.csv", "toy_manifest.json"] {
        assert_eq!(
            fs::read_to_string(serial.join(name)).unwrap(),
            fs::read_to_string(parallel.join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(fs::read(ws.path().join("toy.data")).unwrap(), before);

    let table = fs::read_to_string(serial.join("toy_table.csv")).unwrap();
    let header = table.lines().next().unwrap();
    assert_eq!(header, "learner,method,metric,mean,stddev,trial_1,trial_2,trial_3");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(serial.join("toy_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["trial_seeds"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["mode"], "run");
}

#[test]
fn out_dir_comes_from_the_environment() {
    let ws = toy_workspace();
    let env_out = ws.path().join("from_env");
    ok(bin()
        .env("FAIRSHIFT_OUT_DIR", &env_out)
        .args(["rrb", "--config"])
        .arg(config(&ws))
        .args(["--trials", "1", "--learners", "logreg", "--methods", "none,sdb"]));
    let table = fs::read_to_string(env_out.join("toy_table.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("logreg,sdb,rrb,")), "{table}");
}

#[test]
fn census_inspect_matches_published_counts() {
    let data = repo_data();
    if !data.join("adult.data").exists() {
        eprintln!("census data not present, skipping");
        return;
    }
    let out = ok(bin().args(["inspect", "--dataset", "census", "--data-dir"]).arg(&data));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 48842);
    assert_eq!(v["protected"], 16192);
    assert!((v["protected_fraction"].as_f64().unwrap() - 0.33).abs() < 0.005);
    assert!((v["label_bias"].as_f64().unwrap() - 0.1945).abs() <= 0.0005);
}

#[test]
fn german_reproduction_is_byte_identical() {
    let data = repo_data();
    if !data.join("german.data").exists() {
        eprintln!("german data not present, skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}"));
        ok(bin()
            .args(["reproduce", "german", "--trials", "3", "--seed", "99", "--data-dir"])
            .arg(&data)
            .arg("--out-dir")
            .arg(&out));
        outputs.push(out);
    }
    for name in ["german_table.csv", "german_comparison.csv", "german_histogram.csv", "german_manifest.json"] {
        assert_eq!(
            fs::read_to_string(outputs[0].join(name)).unwrap(),
            fs::read_to_string(outputs[1].join(name)).unwrap(),
            "{name}"
        );
    }
}
