use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointprune"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ckpt = dir.path().join("base.json");
    ok(&["gen-data", "--seed", "3", "--out", s(&data), "--points", "64", "--train", "16", "--test", "8", "--score", "8"]);
    for split in ["train", "test", "score"] {
        assert!(data.join(format!("{split}.json")).exists());
        assert!(data.join(format!("{split}.bin")).exists());
    }
    ok(&["train", "--dataset", s(&data), "--out", s(&ckpt), "--epochs", "1"]);
    let curve = std::fs::read_to_string(ckpt.with_extension("curve.csv")).unwrap();
    assert!(curve.starts_with("epoch,loss,accuracy\n0,"));

    let stem = dir.path().join("scores");
    let v = ok(&["score", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--pruner", "rank", "--plugin", "kr", "--out", s(&stem)]);
    assert_eq!(v["report"]["pruner"], "rank");
    assert!(stem.with_extension("csv").exists());

    let pruned = dir.path().join("pruned");
    let v = ok(&["prune", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--report", s(&stem.with_extension("json")), "--rate", "0.5", "--out", s(&pruned)]);
    assert!(v["flop_reduction_pct"].as_f64().unwrap() > 50.0);
    let compression = std::fs::read_to_string(pruned.join("compression.csv")).unwrap();
    assert!(compression.lines().last().unwrap().starts_with("total,"));

    let tuned = dir.path().join("tuned.json");
    ok(&["finetune", "--checkpoint", s(&pruned.join("pruned.json")), "--dataset", s(&data), "--out", s(&tuned), "--epochs", "1"]);
    let m = ok(&["eval", "--checkpoint", s(&tuned), "--dataset", s(&data)]);
    let oa = m["oa"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&oa));

    let rates = dir.path().join("rates");
    let v = ok(&["study", "layer-rates", "--plan", s(&pruned.join("plan.json")), "--out", s(&rates)]);
    assert_eq!(v["layers"].as_array().unwrap().len(), 6);
    let csv = std::fs::read_to_string(rates.join("layer_rates.csv")).unwrap();
    assert!(csv.starts_with("layer,channels,kept,pruned_fraction\nsa0.mlp0,32,16,0.5\n"), "{csv}");
}

#[test]
fn failures_emit_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = run(&["eval", "--checkpoint", s(&missing), "--dataset", s(dir.path())]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "missing_file");

    let out = run(&["score", "--checkpoint", s(&missing), "--dataset", s(dir.path()), "--pruner", "magic", "--out", "x"]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["error"]["kind"].is_string());

    let out = run(&["study", "ordering", "--rate", "1.5", "--out", s(dir.path())]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "config");

    let out = run(&["frobnicate"]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "usage");
}
