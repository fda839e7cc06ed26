use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TOY: &str = r#"
objects = 800
dims = [16, 8]
clusters = 8
spread = 0.3
queries = 32
query_noise = 0.1
seed = 4
"#;

fn mstm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mstm"))
        .current_dir(dir)
        .env("MSTM_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = mstm(dir, args);
    assert!(
        out.status.success(),
        "mstm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn pipeline(dir: &Path) {
    fs::write(dir.join("toy.toml"), TOY).unwrap();
    ok(dir, &["gen", "--spec", "toy.toml", "--out", "d"]);
    ok(dir, &["gt", "--manifest", "d/manifest.toml", "--squared-weights", "0.6,0.4"]);
    ok(dir, &["--seed", "2", "train-weights", "--manifest", "d/manifest.toml", "--out", "w.json", "--log", "loss.csv", "--iterations", "5"]);
    ok(dir, &["--seed", "2", "build", "--manifest", "d/manifest.toml", "--squared-weights", "0.6,0.4", "--threads", "2", "--out", "idx.bin"]);
    ok(dir, &["search", "--index", "idx.bin", "--manifest", "d/manifest.toml", "--l", "800", "--out", "res.csv"]);
}

#[test]
fn end_to_end_pipeline_reports_recall() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    for f in ["d/manifest.toml", "d/truth.ivecs", "w.json", "loss.csv", "idx.bin", "res.csv"] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    let res = fs::read_to_string(d.join("res.csv")).unwrap();
    assert_eq!(res.lines().count(), 1 + 32 * 10);

    // l = n with the truth's own weights is exhaustive, so recall is 1.
    let out = ok(d, &["search", "--index", "idx.bin", "--manifest", "d/manifest.toml", "--l", "800", "--out", "res.csv"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Recall@10(10): 1.0000"));

    let out = ok(
        d,
        &["bench", "--manifest", "d/manifest.toml", "--index", "idx.bin", "--frameworks", "must,mr,je,must-exact", "--l-sweep", "20,50", "--trials", "1", "--out", "bench.csv"],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("must-exact"));
    let csv = fs::read_to_string(d.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 2 + 2 + 1);
}

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["gen", "gt", "train-weights", "build", "search", "bench"] {
        let out = ok(dir.path(), &[sub, "--help"]);
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub}");
    }
    ok(dir.path(), &["--help"]);
}

#[test]
fn weight_modality_mismatch_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    fs::write(d.join("w3.json"), r#"{"0": 0.5, "1": 0.3, "2": 0.2}"#).unwrap();
    let out = mstm(d, &["search", "--index", "idx.bin", "--manifest", "d/manifest.toml", "--weights", "w3.json"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("3 modalities") && err.contains("2"), "{err}");

    let out = mstm(d, &["build", "--manifest", "d/manifest.toml", "--weights", "w3.json", "--out", "x.bin"]);
    assert!(!out.status.success());
}

#[test]
fn bad_input_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = mstm(dir.path(), &["gt", "--manifest", "missing.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));
    assert!(!mstm(dir.path(), &["search", "--bogus"]).status.success());
}

#[test]
fn outputs_are_idempotent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    for f in ["d/base_0.fvecs", "d/query_1.fvecs", "d/manifest.toml", "d/truth.ivecs", "w.json", "loss.csv", "idx.bin", "res.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}
