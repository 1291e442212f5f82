use std::path::Path;
use std::process::{Command, Output};

use quantumdraw::autograd::Checkpoint;
use quantumdraw::harness::ExperimentRecord;
use quantumdraw::models::HybridModel;
use quantumdraw::sketchdata::read_dataset;

fn qd(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quantumdraw"))
        .arg("--out")
        .arg(out)
        .arg("-q")
        .args(args)
        .env_remove("QUANTUMDRAW_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn toy_data(out: &Path) {
    let o = qd(out, &["data", "--synthetic", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn data_split_counts_and_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = qd(a.path(), &["data", "--synthetic", "10"]);
    let ob = qd(b.path(), &["data", "--synthetic", "10"]);
    assert!(oa.status.success() && ob.status.success());
    let text = stdout(&oa);
    for cat in ["calculator", "camera", "cellphone"] {
        let line = text.lines().find(|l| l.trim_start().starts_with(cat)).unwrap();
        let nums: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(nums, [cat, "train", "8", "val", "2"]);
    }
    let da = std::fs::read(a.path().join("dataset.qds")).unwrap();
    let db = std::fs::read(b.path().join("dataset.qds")).unwrap();
    assert_eq!(da, db);
    let ds = read_dataset(&a.path().join("dataset.qds")).unwrap();
    assert_eq!(ds.samples.len(), 30);

    // cap wins over a larger synthetic count
    let c = tempfile::tempdir().unwrap();
    let oc = qd(c.path(), &["data", "--synthetic", "50", "--cap", "5", "--categories", "camera,cellphone"]);
    assert!(oc.status.success(), "{}", stderr(&oc));
    let ds = read_dataset(&c.path().join("dataset.qds")).unwrap();
    assert_eq!(ds.class_names, ["camera", "cellphone"]);
    assert_eq!(ds.samples.len(), 10);
}

#[test]
fn train_writes_one_record_and_frozen_theta_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    toy_data(dir.path());
    let o = qd(dir.path(), &["train", "--model", "qd", "--epochs", "2", "--seeds", "1", "--hidden-size", "16"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("QD "));
    let rec: ExperimentRecord =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("qd/seed-0/record.json")).unwrap()).unwrap();
    assert_eq!(rec.epochs(), 2);
    assert!(!dir.path().join("qd/seed-1").exists());

    let o = qd(
        dir.path(),
        &["--seed", "3", "train", "--model", "qd-frozen", "--epochs", "2", "--seeds", "1", "--hidden-size", "16"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let ck = Checkpoint::load(&dir.path().join("qd-frozen/seed-3/model.ckpt")).unwrap();
    let trained = HybridModel::from_checkpoint(&ck).unwrap();
    let fresh = HybridModel::new(trained.config.clone()).unwrap();
    assert_eq!(trained.theta(), fresh.theta());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = qd(dir.path(), &["train", "--model", "qd-big"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qd-big"));
    let o = qd(dir.path(), &["gradcheck", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qd(dir.path(), &["data", "--synthetic", "3", "--local-dir", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_dataset_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = qd(dir.path(), &["train", "--epochs", "1", "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("quantumdraw data"));
    assert!(!dir.path().join("qd").exists());
}

#[test]
fn report_orders_rows_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    toy_data(dir.path());
    let train = |kind: &str, seeds: &str| {
        let o = qd(dir.path(), &["train", "--model", kind, "--epochs", "1", "--seeds", seeds, "--hidden-size", "8", "--no-svg"]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    train("qd", "0,1");
    let rep = tempfile::tempdir().unwrap();
    let src = dir.path().to_str().unwrap();
    let o = qd(rep.path(), &["report", src]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(rep.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("QD,2,"));

    train("baseline", "0,");
    train("qd-sep", "0,");
    let o = qd(rep.path(), &["report", src]);
    assert!(o.status.success());
    let first = std::fs::read(rep.path().join("summary.csv")).unwrap();
    let labels: Vec<String> = String::from_utf8(first.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(labels, ["QD", "QD-Sep", "baseline"]);
    let o2 = qd(rep.path(), &["report", src]);
    assert_eq!(stdout(&o), stdout(&o2));
    assert_eq!(first, std::fs::read(rep.path().join("summary.csv")).unwrap());

    let empty = tempfile::tempdir().unwrap();
    let o = qd(rep.path(), &["report", empty.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gradcheck_passes_and_flags_a_corrupted_slot() {
    let dir = tempfile::tempdir().unwrap();
    for scope in ["qsim", "model", "autograd"] {
        let o = qd(dir.path(), &["--seed", "7", "gradcheck", scope]);
        assert!(o.status.success(), "{scope}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("PASS"));
    }
    let o = qd(dir.path(), &["--seed", "7", "gradcheck", "qsim", "--corrupt-slot", "train:4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(stderr(&o).contains("train 4"), "{}", stderr(&o));
}

#[test]
fn config_file_and_manifest_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "seed = 2\n[data]\nsynthetic = 4\nsplit = 0.5\n").unwrap();
    let out1 = dir.path().join("one");
    let o = qd(&out1, &["--config", cfg.to_str().unwrap(), "data", "--split", "0.75"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = out1.join("dataset.qds.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], "2");
    assert_eq!(m["config"]["data.split"], "0.75");
    assert_eq!(m["train_counts"], serde_json::json!([3, 3, 3]));

    let out2 = dir.path().join("two");
    let o = qd(&out2, &["--config", manifest.to_str().unwrap(), "data"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(out1.join("dataset.qds")).unwrap(),
        std::fs::read(out2.join("dataset.qds")).unwrap()
    );

    std::fs::write(&cfg, "train.epoch = 3\n").unwrap();
    let o = qd(&out1, &["--config", cfg.to_str().unwrap(), "data"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("train.epoch"));
}
