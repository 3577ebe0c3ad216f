//! End-to-end runs of the `tfkan` commands on a small synthetic series.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tfkan::cli::run;
use tfkan::data::read_table;
use tfkan::model::load_checkpoint;
use tfkan::Error;

const SMALL: &[&str] = &[
    "--synthetic", "--channels", "2", "--length", "400", "--lookback", "16", "--horizon", "4",
    "--embed-dim", "4", "--hidden", "8", "--epochs", "3", "--batch", "16",
];

fn args<'a>(head: &[&'a str], out: &'a str, tail: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["tfkan"];
    v.extend_from_slice(head);
    v.extend_from_slice(&["--out", out]);
    v.extend_from_slice(tail);
    v
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn train_small(out: &str, extra: &[&str]) {
    let mut tail = SMALL.to_vec();
    tail.extend_from_slice(extra);
    assert_eq!(run(args(&["train"], out, &tail)), 0);
}

#[test]
fn train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    train_small(out, &[]);
    let manifest = dir.path().join("model.manifest");
    let metrics = json(&dir.path().join("metrics.json"));
    assert!(metrics["epochs"].as_array().unwrap().len() <= 3);

    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let epoch_rows = report
        .lines()
        .skip_while(|l| !l.trim_start().starts_with("epoch"))
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .count();
    assert!((1..=3).contains(&epoch_rows), "{report}");

    // Eval restores the data settings from the checkpoint and reproduces the test metrics.
    let eval_dir = dir.path().join("eval");
    let m = manifest.to_str().unwrap();
    assert_eq!(run(args(&["eval"], eval_dir.to_str().unwrap(), &["--checkpoint", m])), 0);
    let ev = json(&eval_dir.join("eval_metrics.json"));
    assert_eq!(ev["test"], metrics["test"]);

    // Predict from the tail of a CSV written by the loader's writer.
    let spec = tfkan::data::SyntheticSpec { channels: 2, length: 400, ..Default::default() };
    let table = tfkan::data::gen_synthetic(&spec).unwrap();
    let input = dir.path().join("input.csv");
    tfkan::data::write_csv(&input, &table.names, &table.values, None).unwrap();
    let pred_dir = dir.path().join("pred");
    let code = run(args(&["predict"], pred_dir.to_str().unwrap(), &["--checkpoint", m, "--input", input.to_str().unwrap()]));
    assert_eq!(code, 0);
    let forecast = read_table(&pred_dir.join("forecast.csv")).unwrap();
    assert_eq!(forecast.values.shape(), &[4, 2]);
    assert_eq!(forecast.names, table.names);
    assert!(forecast.values.is_finite());

    // A horizon that disagrees with the checkpoint is a configuration error.
    let code = run(args(&["eval"], eval_dir.to_str().unwrap(), &["--checkpoint", m, "--horizon", "8"]));
    assert_eq!(code, 2);

    // A truncated blob is caught on load.
    let blob = dir.path().join("model.bin");
    let bytes = fs::read(&blob).unwrap();
    fs::write(&blob, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(load_checkpoint(&manifest), Err(Error::Integrity(_))));
    assert_eq!(run(args(&["eval"], eval_dir.to_str().unwrap(), &["--checkpoint", m])), 1);
}

#[test]
fn equal_seeds_give_identical_metrics() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    train_small(a.path().to_str().unwrap(), &["--seed", "7"]);
    train_small(b.path().to_str().unwrap(), &["--seed", "7"]);
    train_small(c.path().to_str().unwrap(), &["--seed", "8"]);
    // Everything but the output directory itself must match.
    let read = |d: &tempfile::TempDir| {
        let mut v = json(&d.path().join("metrics.json"));
        v["config"].as_object_mut().unwrap().remove("out");
        v
    };
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(fs::read(a.path().join("model.bin")).unwrap(), fs::read(b.path().join("model.bin")).unwrap());
}

#[test]
fn config_file_sits_below_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nepochs = 1\nembed-dim = 4\nseed = 3\n").unwrap();
    let out = dir.path().join("o");
    let mut tail = SMALL.to_vec();
    tail.retain(|a| *a != "--epochs" && *a != "3");
    tail.extend_from_slice(&["--config", cfg.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(run(args(&["train"], out.to_str().unwrap(), &tail)), 0);
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["config"]["epochs"], "1");
    assert_eq!(m["config"]["seed"], "4");
    assert_eq!(m["epochs"].as_array().unwrap().len(), 1);
}

#[test]
fn toy_outputs_reload() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(args(&["toy"], out, &["--train-points", "32", "--test-points", "16", "--steps", "20", "--kan-hidden", "4"]));
    assert_eq!(code, 0);
    let t = read_table(&dir.path().join("toy.csv")).unwrap();
    assert_eq!(t.values.shape()[0], 4);
    for i in 1..=4 {
        let curve = read_table(&dir.path().join(format!("toy_curve_F{i}.csv"))).unwrap();
        assert_eq!(curve.names, ["x", "truth", "kan", "mlp"]);
        assert_eq!(curve.values.shape()[0], 16);
    }
}

#[test]
fn ablate_and_sweep_outputs_reload() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let small = ["--length", "400", "--lookback", "16", "--horizon", "4", "--embed-dim", "4", "--hidden", "8", "--epochs", "1"];
    let mut tail = small.to_vec();
    tail.extend_from_slice(&["--variants", "full,only_time"]);
    assert_eq!(run(args(&["ablate"], out, &tail)), 0);
    let t = read_table(&dir.path().join("ablation.csv")).unwrap();
    assert!(t.dropped_label);
    assert_eq!(t.values.shape()[0], 2);

    let mut tail = small.to_vec();
    tail.extend_from_slice(&["--lookbacks", "8,16", "--embed-dims", "4"]);
    assert_eq!(run(args(&["sweep"], out, &tail)), 0);
    let t = read_table(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(t.values.shape()[0], 3);
    assert_eq!(run(args(&["sweep"], out, &["--data", "x.csv"])), 2);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_tfkan");
    let status = |a: &[&str]| Command::new(exe).args(a).output().unwrap().status.code();
    assert_eq!(status(&["train", "--nope"]), Some(2));
    assert_eq!(status(&["nonsense"]), Some(2));
    assert_eq!(status(&["--help"]), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.manifest");
    assert_eq!(status(&["eval", "--checkpoint", missing.to_str().unwrap()]), Some(1));
}
