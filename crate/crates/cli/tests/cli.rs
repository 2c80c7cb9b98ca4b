use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use eegpipe::detector::{checkpoint, NetworkSpec, Weights};
use eegpipe::features::{FeatureConfig, FeatureTensor};
use tempfile::TempDir;

const SPEC: &str = "kernels = 4\ndense_units = 8\nlstm_hidden = 6\nsegment_epochs = 30\n";
const SYNTH: &str = "burst.rate_per_hour = 90\nduration = 180\nrecordings = 2\n";

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eegpipe"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args, &[]);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Synthetic recordings, their features and a spec file under `dir`.
fn dataset(dir: &Path, seed: &str) {
    fs::write(dir.join("synth.txt"), SYNTH).unwrap();
    fs::write(dir.join("spec.txt"), SPEC).unwrap();
    let (data, feats) = (dir.join("data"), dir.join("feat"));
    ok(&["synth", "--config", p(&dir.join("synth.txt")), "--out", p(&data), "--seed", seed]);
    ok(&["features", "--in", p(&data), "--out", p(&feats), "--preset", "ch4"]);
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn scoring_a_directory_against_itself_is_perfect() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    fs::write(tmp.path().join("synth.txt"), SYNTH).unwrap();
    ok(&["synth", "--config", p(&tmp.path().join("synth.txt")), "--out", p(&data)]);
    ok(&["score", "--ref", p(&data), "--hyp", p(&data), "--out", p(&tmp.path().join("s"))]);
    let rep = json(&tmp.path().join("s/report.json"));
    assert!(rep["ref_events"].as_u64().unwrap() > 0);
    assert_eq!(rep["sensitivity"], 100.0);
    assert_eq!(rep["fa_per_24h"], 0.0);
    assert_eq!(rep["specificity"], 100.0);
}

#[test]
fn train_infer_score_round_trip() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    dataset(d, "3");
    let ckpt = d.join("m.ckpt");
    ok(&[
        "train", "--features", p(&d.join("feat")), "--labels", p(&d.join("data")), "--out", p(&ckpt),
        "--spec", p(&d.join("spec.txt")), "--passes", "2",
    ]);
    for f in ["m.ckpt.loss.csv", "m.ckpt.passes.csv", "m.ckpt.manifest.json"] {
        assert!(d.join(f).is_file(), "{f}");
    }
    let passes = fs::read_to_string(d.join("m.ckpt.passes.csv")).unwrap();
    assert_eq!(passes.lines().count(), 1 + 3);

    let hyp = d.join("hyp");
    ok(&["infer", "--ckpt", p(&ckpt), "--features", p(&d.join("feat")), "--out", p(&hyp), "--spec", p(&d.join("spec.txt"))]);
    assert!(hyp.join("rec_000.post.csv").is_file() && hyp.join("rec_001.csv").is_file());

    let grid = d.join("grid.csv");
    fs::write(&grid, "threshold\n0.9\n0.5\n0.1\n").unwrap();
    ok(&["score", "--ref", p(&d.join("data")), "--hyp", p(&hyp), "--roc", p(&grid)]);
    let roc = fs::read_to_string(hyp.join("score/roc.csv")).unwrap();
    assert!(roc.starts_with("threshold,fpr,tpr"));
    assert_eq!(roc.lines().count(), 4);
    assert!(fs::read_to_string(hyp.join("score/roc.svg")).unwrap().contains("<svg"));
}

#[test]
fn infer_rejects_a_different_spec() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    dataset(d, "4");
    let ckpt = d.join("m.ckpt");
    ok(&[
        "train", "--features", p(&d.join("feat")), "--labels", p(&d.join("data")), "--out", p(&ckpt),
        "--spec", p(&d.join("spec.txt")), "--passes", "1",
    ]);
    let other = d.join("other.txt");
    fs::write(&other, SPEC.replace("kernels = 4", "kernels = 5")).unwrap();
    let out = run(&["infer", "--ckpt", p(&ckpt), "--features", p(&d.join("feat")), "--out", p(&d.join("h")), "--spec", p(&other)], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spec hash mismatch"));
    assert!(!d.join("h").exists());
}

#[test]
fn training_is_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    dataset(d, "5");
    let mut ckpts = Vec::new();
    for threads in ["1", "3"] {
        let ckpt = d.join(format!("m{threads}.ckpt"));
        let out = run(
            &["--threads", threads, "train", "--features", p(&d.join("feat")), "--labels", p(&d.join("data")), "--out", p(&ckpt), "--passes", "2"],
            &[("EEGPIPE_SPEC", p(&d.join("spec.txt"))), ("EEGPIPE_SEED", "9")],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        ckpts.push(fs::read(&ckpt).unwrap());
    }
    assert_eq!(ckpts[0], ckpts[1]);
    let m = json(&d.join("m1.ckpt.manifest.json"));
    assert_eq!(m["args"]["model"]["seed"], 9);
    assert_eq!(m["config"]["spec"]["kernels"], 4);
}

#[test]
fn grid_summary_has_table_columns() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("synth.txt"), SYNTH).unwrap();
    fs::write(d.join("spec.txt"), SPEC).unwrap();
    ok(&["synth", "--config", p(&d.join("synth.txt")), "--out", p(&d.join("train")), "--seed", "6"]);
    ok(&["synth", "--config", p(&d.join("synth.txt")), "--out", p(&d.join("test")), "--seed", "7", "--recordings", "1"]);
    let out = ok(&[
        "grid", "--train", p(&d.join("train")), "--test", p(&d.join("test")), "--out", p(&d.join("grid")),
        "--presets", "ch22,ch4,ch2", "--spec", p(&d.join("spec.txt")), "--passes", "1",
    ]);
    let md = fs::read_to_string(d.join("grid/summary.md")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), md);
    assert!(md.starts_with("| Ch. | 2D CNN Layers | Sensitivity (%) | Specificity (%) | FA/24 Hours |"));

    let csv = fs::read_to_string(d.join("grid/summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let shape: Vec<(&str, &str, &str)> = rows.iter().map(|r| (r[0], r[1], r[6])).collect();
    assert_eq!(
        shape,
        [
            ("22", "3", "preserve_dims"),
            ("4", "3", "preserve_dims"),
            ("4", "1", "drop_layers"),
            ("2", "3", "preserve_dims"),
        ]
    );
    assert!(d.join("grid/ch4_drop_layers/model.ckpt").is_file());
    assert!(d.join("grid/ch22_preserve_dims/roc.svg").is_file());
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(run(&["--help"], &[]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(run(&["synth"], &[]).status.code(), Some(1));
    assert_eq!(run(&["features", "--in", p(&d.join("nope")), "--out", p(d)], &[]).status.code(), Some(1));

    let bad = d.join("bad");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("x.edf"), b"0       not an edf").unwrap();
    let out = run(&["features", "--in", p(&bad), "--out", p(&d.join("f"))], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x.edf"));

    // NaN features surface as a numeric failure.
    let cfg = FeatureConfig::default();
    let feats = d.join("nan");
    let mut t = FeatureTensor::zeros(4, 10, vec!["A-B".into(), "C-D".into()], 26);
    t.config_hash = cfg.hash();
    t.values[5] = f32::NAN;
    fs::create_dir(&feats).unwrap();
    fs::write(feats.join("r.feat"), t.to_bytes()).unwrap();
    let mut w = Weights::init(&NetworkSpec::parse(SPEC).unwrap(), 2, 10, 26, 1).unwrap();
    w.feature_hash = cfg.hash();
    w.channel_labels = t.channel_labels.clone();
    fs::write(d.join("w.ckpt"), checkpoint::save(&w)).unwrap();
    let out = run(&["infer", "--ckpt", p(&d.join("w.ckpt")), "--features", p(&feats), "--out", p(&d.join("o"))], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("conv layer 1"));
}
