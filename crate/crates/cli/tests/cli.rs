use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn jointgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jointgc"))
        .args(args)
        .env_remove("JOINTGC_THREADS")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tiny_spec() -> Value {
    json!({ "n_a": 2, "n_b": 3, "frames": 60, "n_trials": 2, "delay_s": 0.1 })
}

fn write_config(dir: &Path, pairs: usize, extra: Value) -> std::path::PathBuf {
    let pairs: Vec<Value> = (1..=pairs)
        .map(|i| json!({ "name": format!("pair{i:02}"), "kind": "synthetic", "spec": tiny_spec() }))
        .collect();
    let mut config = json!({
        "pairs": pairs,
        "train": { "max_lag": 6, "hidden_units": 4, "iterations": 20 },
        "out_dir": "out",
    });
    for (k, v) in extra.as_object().unwrap() {
        config[k] = v.clone();
    }
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

#[test]
fn cohort_writes_reports_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 2, json!({}));
    let out = jointgc(&["cohort", "--config", arg(&config)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("out");
    assert!(root.join("cohort_report.json").is_file());
    assert!(root.join("cohort_summary.txt").is_file());
    for f in [
        "ngc_matrix.csv",
        "ngc_tensor.json",
        "lag_matrix.csv",
        "causal_graph.dot",
        "report.json",
    ] {
        assert!(root.join("pair02").join(f).is_file(), "{f}");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("pp"));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 2, json!({}));
    let a = dir.path().join("one");
    let b = dir.path().join("many");
    assert!(
        jointgc(&["--threads", "1", "cohort", "--config", arg(&config), "--out", arg(&a)])
            .status
            .success()
    );
    assert!(
        jointgc(&["--threads", "4", "cohort", "--config", arg(&config), "--out", arg(&b)])
            .status
            .success()
    );
    let read = |root: &Path, f: &str| std::fs::read_to_string(root.join(f)).unwrap();
    assert_eq!(read(&a, "pair01/ngc_matrix.csv"), read(&b, "pair01/ngc_matrix.csv"));
    // reports embed out_dir, so compare everything else
    let strip = |s: String| {
        let mut v: Value = serde_json::from_str(&s).unwrap();
        v["config"]["out_dir"] = Value::Null;
        for p in v["pairs"].as_array_mut().into_iter().flatten() {
            p["config"]["out_dir"] = Value::Null;
        }
        v
    };
    assert_eq!(
        strip(read(&a, "cohort_report.json")),
        strip(read(&b, "cohort_report.json"))
    );
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 1, json!({}));
    let a = dir.path().join("s0");
    let b = dir.path().join("s1");
    assert!(jointgc(&["train", "--config", arg(&config), "--out", arg(&a)])
        .status
        .success());
    assert!(
        jointgc(&["train", "--config", arg(&config), "--out", arg(&b), "--seed", "1"])
            .status
            .success()
    );
    let m = |root: &Path| std::fs::read_to_string(root.join("pair01/ngc_matrix.csv")).unwrap();
    assert_ne!(m(&a), m(&b));
    assert!(a.join("pair01/bank.json").is_file());
}

#[test]
fn extract_reproduces_the_run_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 1, json!({}));
    let run = dir.path().join("run");
    assert!(jointgc(&["train", "--config", arg(&config), "--out", arg(&run)])
        .status
        .success());
    let ex = dir.path().join("ex");
    let out = jointgc(&[
        "extract",
        "--bank",
        arg(&run.join("pair01/bank.json")),
        "--out",
        arg(&ex),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(
        read(&run.join("pair01/ngc_matrix.csv")),
        read(&ex.join("ngc_matrix.csv"))
    );
    assert_eq!(
        read(&run.join("pair01/lag_matrix.csv")),
        read(&ex.join("lag_matrix.csv"))
    );
    let indexes: Value = serde_json::from_str(&read(&ex.join("indexes.json"))).unwrap();
    let report: Value = serde_json::from_str(&read(&run.join("pair01/report.json"))).unwrap();
    assert_eq!(indexes["indexes"], report["indexes"]);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 1, json!({}));
    let out = jointgc(&[
        "sweep",
        "--config",
        arg(&config),
        "--axis",
        "hidden_units",
        "--values",
        "2,4,x",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep_hidden_units.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().last().unwrap().contains("error"));
}

#[test]
fn unknown_sweep_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 1, json!({}));
    let out = jointgc(&["sweep", "--config", arg(&config), "--axis", "gamma", "--values", "1"]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
}

#[test]
fn synth_then_oracle_then_graph() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, tiny_spec().to_string()).unwrap();
    let data = dir.path().join("data");
    let out = jointgc(&["synth", "--spec", arg(&spec), "--seed", "3", "--out", arg(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let truth: Value = serde_json::from_str(&std::fs::read_to_string(data.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["labels"].as_array().unwrap().len(), 5);
    assert_eq!(truth["spec"]["seed"], 3);
    assert_eq!(std::fs::read_dir(&data).unwrap().count(), 2 + 2);

    let oracle = dir.path().join("oracle.json");
    let out = jointgc(&[
        "oracle",
        "--manifest",
        arg(&data.join("manifest.json")),
        "--max-lag",
        "6",
        "--out",
        arg(&oracle),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o: Value = serde_json::from_str(&std::fs::read_to_string(&oracle).unwrap()).unwrap();
    assert!(o["p_values"][0][0].is_null());
    assert!(o["p_values"][0][1].is_number());
    assert_eq!(o["conditional"], false);
    let out = jointgc(&[
        "oracle",
        "--manifest",
        arg(&data.join("manifest.json")),
        "--max-lag",
        "6",
        "--conditional",
        "--out",
        arg(&oracle),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let c: Value = serde_json::from_str(&std::fs::read_to_string(&oracle).unwrap()).unwrap();
    assert_eq!(c["conditional"], true);
    assert_ne!(c["p_values"], o["p_values"]);

    let matrix = dir.path().join("m.csv");
    std::fs::write(&matrix, "target\\source,a_x,a_y,b_z\na_x,0,0,0\na_y,0,0,0\nb_z,2,0,0\n").unwrap();
    let dot = dir.path().join("g.dot");
    let out = jointgc(&[
        "graph",
        "--matrix",
        arg(&matrix),
        "--threshold",
        "1",
        "--out",
        arg(&dot),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&dot).unwrap();
    assert_eq!(text.matches("->").count(), 1);
    assert!(text.contains("\"a_x\" -> \"b_z\""), "{text}");
}

#[test]
fn var_synth_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = jointgc(&["synth", "--kind", "var", "--out", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let truth: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap()).unwrap();
    let edges: usize = truth["adjacency"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().filter(|v| v.as_bool().unwrap()).count())
        .sum();
    assert_eq!(edges, 18);
}

#[test]
fn missing_reference_channel_exits_nonzero_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(jointgc(&[
        "synth",
        "--spec",
        arg(&{
            let p = dir.path().join("spec.json");
            std::fs::write(&p, tiny_spec().to_string()).unwrap();
            p
        }),
        "--out",
        arg(&data)
    ])
    .status
    .success());
    let config = write_config(
        dir.path(),
        1,
        json!({ "preprocess": { "reference_channel": "pitcher_back_knee", "window": { "pre_s": 0.2, "post_s": 0.1 } } }),
    );
    // point the pair at the simulated files instead of the generator
    let mut c: Value = serde_json::from_str(&std::fs::read_to_string(&config).unwrap()).unwrap();
    c["pairs"][0] = json!({ "name": "pair01", "kind": "manifest", "path": "data/manifest.json" });
    std::fs::write(&config, c.to_string()).unwrap();

    let out = jointgc(&["train", "--config", arg(&config)]);
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "input");
    assert!(err["error"]["message"].as_str().unwrap().contains("pitcher_back_knee"));

    let pre = jointgc(&[
        "preprocess",
        "--manifest",
        arg(&data.join("manifest.json")),
        "--config",
        arg(&config),
        "--out",
        arg(&dir.path().join("pre")),
    ]);
    assert!(!pre.status.success());
    assert!(stderr_json(&pre)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("pitcher_back_knee"));
}

#[test]
fn preprocess_round_trips_a_normalized_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(jointgc(&["synth", "--out", arg(&data)]).status.success());
    let pre = dir.path().join("pre");
    let out = jointgc(&[
        "preprocess",
        "--manifest",
        arg(&data.join("manifest.json")),
        "--out",
        arg(&pre),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("10 trials x 125 frames x 27 channels"));
}

#[test]
fn bad_config_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = jointgc(&["cohort", "--config", arg(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "json");
    let out = jointgc(&["cohort", "--config", arg(&dir.path().join("absent.json"))]);
    assert_eq!(stderr_json(&out)["error"]["kind"], "io");
}

#[test]
fn zero_threads_rejected() {
    let out = jointgc(&["--threads", "0", "graph", "--matrix", "x", "--out", "y"]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
}
