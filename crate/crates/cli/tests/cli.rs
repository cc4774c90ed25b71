use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ntangled_core::analysis::halfchain_purity_average;
use ntangled_core::datasets::{export_states, load_labeled_set, read_states, StateFormat};
use ntangled_core::StateVector;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ntangled"));
    c.env_remove("NTANGLED_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_generator(dir: &Path, name: &str, target: &str, seed: &str) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "train-generator",
        "--ansatz",
        "hwe",
        "--qubits",
        "3",
        "--layers",
        "2",
        "--target-ce",
        target,
        "--epochs",
        "60",
        "--restarts",
        "3",
        "--test-count",
        "50",
        "--seed",
        seed,
        "--out",
        p(&out),
    ]);
    out.join("model.json")
}

#[test]
fn invalid_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let cases: [&[&str]; 5] = [
        &["train-generator", "--ansatz", "nope", "--qubits", "3", "--target-ce", "0.2", "--out", p(&out)],
        &["train-generator", "--ansatz", "hwe", "--qubits", "3", "--target-ce", "0.9", "--out", p(&out)],
        &["depth-dataset", "--qubits", "4", "--zeros", "1", "--ones", "1", "--out", p(&out)],
        &["--threads", "0", "measure", "--state", "whatever.bin"],
        &["no-such-command"],
    ];
    for args in cases {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
    assert!(!out.exists());
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = run(&["eval-generator", "--model", p(&missing), "--out", p(&dir.path().join("e"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_with_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn trained_three_qubit_generator_reaches_the_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    ok(&[
        "train-generator",
        "--ansatz",
        "hwe",
        "--qubits",
        "3",
        "--layers",
        "2",
        "--target-ce",
        "0.25",
        "--seed",
        "11",
        "--out",
        p(&out),
    ]);
    let report = json(out.join("report.json"));
    let rate = report["test"]["success_rate"].as_f64().unwrap();
    assert!(rate >= 0.8, "success rate {rate}");
    assert_eq!(report["loss_history"].as_array().unwrap().len(), 301);
    let manifest = json(out.join("manifest.json"));
    let names: Vec<&str> =
        manifest["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["config.json", "model.json", "report.json"]);
}

#[test]
fn same_seed_gives_identical_models_at_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| -> Vec<String> {
        [
            "train-generator",
            "--ansatz",
            "sea",
            "--qubits",
            "4",
            "--layers",
            "1",
            "--target-ce",
            "0.3",
            "--epochs",
            "20",
            "--restarts",
            "4",
            "--seed",
            "9",
            "--out",
            p(out),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(bin().args(args(&a)).arg("--threads").arg("1").status().unwrap().success());
    assert!(bin().args(args(&b)).env("NTANGLED_THREADS", "3").status().unwrap().success());
    assert_eq!(fs::read(a.join("model.json")).unwrap(), fs::read(b.join("model.json")).unwrap());
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
}

#[test]
fn measure_ghz_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ghz.bin");
    export_states(&[StateVector::ghz(3).unwrap()], &file, StateFormat::Binary).unwrap();
    let out = ok(&["measure", "--state", p(&file)]);
    let line = String::from_utf8(out.stdout).unwrap();
    let rec: Value = serde_json::from_str(line.trim()).unwrap();
    assert!((rec["ce"].as_f64().unwrap() - 0.375).abs() < 1e-12);
    assert!(rec["ntangle"].is_null());
    assert!(rec["halfpurity"].is_null());
    // GHZ pair marginals are separable mixtures
    assert!(rec["concurrence"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn measure_even_state_reports_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ghz.csv");
    export_states(&[StateVector::ghz(4).unwrap(), StateVector::zero(4).unwrap()], &file, StateFormat::Csv).unwrap();
    let out = ok(&["measure", "--state", p(&file), "--out", p(&dir.path().join("m"))]);
    let lines: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert!((lines[0]["ce"].as_f64().unwrap() - (0.5 - 1.0 / 16.0)).abs() < 1e-12);
    assert!((lines[0]["ntangle"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((lines[0]["halfpurity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(lines[1]["ce"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(json(dir.path().join("m/measure.json")).as_array().unwrap().len(), 2);
    assert_eq!(run(&["measure", "--state", p(&file), "--index", "5"]).status.code(), Some(2));
}

#[test]
fn depth_dataset_files_match_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    ok(&[
        "depth-dataset",
        "--qubits",
        "4",
        "--zeros",
        "1",
        "--ones",
        "6",
        "--count",
        "25",
        "--seed",
        "2",
        "--out",
        p(&out),
    ]);
    for d in [1, 6] {
        let len = fs::metadata(out.join(format!("depth_{d}.bin"))).unwrap().len();
        assert_eq!(len, 8 + 25 * 16 * 16);
    }
    let set = load_labeled_set(out.join("dataset.json")).unwrap();
    assert_eq!(set.class_counts(), [25, 25]);
    let depth1 = read_states(out.join("depth_1.bin"), StateFormat::Binary).unwrap();
    assert_eq!(depth1[0], set.items[0].state);
}

#[test]
fn analyze_half_chain_purity_of_deep_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&[
        "depth-dataset",
        "--qubits",
        "4",
        "--zeros",
        "10",
        "--count",
        "300",
        "--resample",
        "--seed",
        "4",
        "--out",
        p(&data),
    ]);
    let out = dir.path().join("a");
    ok(&["analyze", "--input", p(&data.join("depth_10.bin")), "--out", p(&out)]);
    let summary = json(out.join("summary.json"));
    let got = summary["halfchain_purity"].as_f64().unwrap();
    let states = read_states(data.join("depth_10.bin"), StateFormat::Binary).unwrap();
    assert!((got - halfchain_purity_average(&states).unwrap()).abs() < 1e-12);
    // Haar value for a 2|2 cut
    assert!((got - 8.0 / 17.0).abs() < 0.04, "half-chain purity {got}");
    for f in ["ce_histogram.csv", "purity.csv", "concurrence.csv", "summary.json", "config.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let hist = fs::read_to_string(out.join("ce_histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 51);
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_generator(dir.path(), "g", "0.2", "1");
    let first = dir.path().join("ds");
    ok(&[
        "gen-dataset",
        "--model",
        p(&model),
        "--count",
        "30",
        "--label",
        "1",
        "--format",
        "csv",
        "--seed",
        "8",
        "--out",
        p(&first),
    ]);
    let second = dir.path().join("again");
    ok(&["replay", "--config", p(&first.join("config.json")), "--out", p(&second)]);
    for f in ["states.csv", "ce.csv", "summary.json", "dataset.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    // config.json records the output path, so only its size may differ
    let strip = |mut m: Value| {
        for a in m["artifacts"].as_array_mut().unwrap() {
            if a["path"] == "config.json" {
                a["bytes"] = Value::Null;
            }
        }
        m
    };
    assert_eq!(strip(json(first.join("manifest.json"))), strip(json(second.join("manifest.json"))));
    let mut cfg = json(first.join("config.json"));
    cfg["out"] = json(second.join("config.json"))["out"].clone();
    assert_eq!(cfg, json(second.join("config.json")));
}

#[test]
fn replay_rejects_foreign_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{\"command\": \"launch\"}").unwrap();
    assert_eq!(run(&["replay", "--config", p(&cfg)]).status.code(), Some(2));
}

#[test]
fn generate_then_classify_without_touching_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let low = small_generator(dir.path(), "low", "0.05", "2");
    let high = small_generator(dir.path(), "high", "0.25", "3");
    let model_bytes = fs::read(&low).unwrap();

    let eval = dir.path().join("eval");
    ok(&["eval-generator", "--model", p(&low), "--count", "40", "--out", p(&eval)]);
    let report = json(eval.join("report.json"));
    assert_eq!(report["count"], 40);
    assert!((report["target_ce"].as_f64().unwrap() - 0.05).abs() < 1e-15);

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["gen-dataset", "--model", p(&low), "--count", "40", "--label", "0", "--seed", "5", "--out", p(&a)]);
    ok(&["gen-dataset", "--model", p(&high), "--count", "40", "--label", "1", "--seed", "6", "--out", p(&b)]);
    let data_bytes = fs::read(a.join("dataset.json")).unwrap();

    let clf = dir.path().join("clf");
    ok(&[
        "train-classifier",
        "--data",
        p(&a.join("dataset.json")),
        p(&b.join("dataset.json")),
        "--epochs",
        "5",
        "--restarts",
        "2",
        "--seed",
        "7",
        "--out",
        p(&clf),
    ]);
    let report = json(clf.join("report.json"));
    assert_eq!(report["train_size"], 56);
    assert_eq!(report["test_size"], 24);
    let acc = report["test_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let history = fs::read_to_string(clf.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 6);

    assert_eq!(fs::read(&low).unwrap(), model_bytes);
    assert_eq!(fs::read(a.join("dataset.json")).unwrap(), data_bytes);
}

#[test]
fn classifier_needs_both_labels() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_generator(dir.path(), "g", "0.2", "4");
    let a = dir.path().join("a");
    ok(&["gen-dataset", "--model", p(&model), "--count", "10", "--label", "0", "--out", p(&a)]);
    let out = run(&["train-classifier", "--data", p(&a.join("dataset.json")), "--out", p(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(2));
}
