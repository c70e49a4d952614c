mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::sample_path;

const CONFIG: &str = "\
property_names = mu, gap
hidden_dim = 8
d_model = 8
n_heads = 2
ffn_dim = 8
latent_free_dims = 2
batch_size = 8
stage1_epochs = 2
stage2_epochs = 2
seed = 3
";

fn molgen(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_molgen")).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn ok(args: &[&str]) {
    let (success, _, err) = molgen(args);
    assert!(success, "molgen {args:?} failed: {err}");
}

fn pipeline(dir: &Path) -> Vec<Vec<u8>> {
    let s = |name: &str| dir.join(name).to_string_lossy().into_owned();
    fs::write(dir.join("run.cfg"), CONFIG).unwrap();
    ok(&["ingest", "--in", &sample_path().to_string_lossy(), "--out", &s("data.csv"), "--limit", "40"]);
    ok(&["train", "--dataset", &s("data.csv"), "--config", &s("run.cfg"), "--out", &s("model.mgg")]);
    ok(&["generate", "--ckpt", &s("model.mgg"), "--n", "20", "--seed", "9", "--out", &s("gen.smi")]);
    ok(&["evaluate", "--generated", &s("gen.smi"), "--train-set", &s("data.csv"), "--report", &s("report.csv")]);
    ok(&["traverse", "--ckpt", &s("model.mgg"), "--property", "gap", "--lo", "-2", "--hi", "2", "--steps", "5", "--out", &s("trav.csv")]);
    ok(&["scatter", "--ckpt", &s("model.mgg"), "--dataset", &s("data.csv"), "--property", "mu", "--free-dim", "1", "--out", &s("scatter.csv")]);
    ["data.csv", "model.mgg", "gen.smi", "report.csv", "trav.csv", "scatter.csv"]
        .iter()
        .map(|f| fs::read(dir.join(f)).unwrap())
        .collect()
}

#[test]
fn end_to_end_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    assert_eq!(first, pipeline(b.path()));

    let data = String::from_utf8(first[0].clone()).unwrap();
    assert_eq!(data.lines().count(), 41);
    assert_eq!(String::from_utf8(first[2].clone()).unwrap().lines().count(), 20);
    let report = String::from_utf8(first[3].clone()).unwrap();
    assert!(report.starts_with("metric,measured,reference_full_qm9\n"));
    assert!(report.contains(",74.6\n") && report.contains(",15.8\n"));
    let trav = String::from_utf8(first[4].clone()).unwrap();
    let zs: Vec<&str> = trav.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(zs, ["-2", "-1", "0", "1", "2"]);
    assert_eq!(String::from_utf8(first[5].clone()).unwrap().lines().count(), 41);
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.mgg");
    let (success, _, err) = molgen(&["generate", "--ckpt", &missing.to_string_lossy(), "--n", "3", "--out", "x"]);
    assert!(!success);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "hidden_dim = 8\nwidth = 3\n").unwrap();
    let (success, _, err) = molgen(&[
        "train",
        "--dataset",
        &sample_path().to_string_lossy(),
        "--config",
        &cfg.to_string_lossy(),
        "--out",
        &dir.path().join("m").to_string_lossy(),
    ]);
    assert!(!success);
    assert!(err.contains("width"), "{err}");
}
