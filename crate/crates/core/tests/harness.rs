use std::path::Path;

use quantumdraw::harness::{
    collect_records, evaluate, metrics_csv, run_dir, run_suite, summarize, train, train_on, HarnessError,
    TrainConfig,
};
use quantumdraw::models::{HybridModel, ModelConfig, ModelKind};
use quantumdraw::par::Execution;
use quantumdraw::sketchdata::{
    encode_dataset, synthetic, write_dataset, EncodeConfig, EncodedDataset, EncodedSample, Split,
    SUPPORTED_CATEGORIES,
};

fn toy(per_class: usize, seed: u64) -> EncodedDataset {
    let cats: Vec<String> = SUPPORTED_CATEGORIES.iter().map(|s| s.to_string()).collect();
    let cfg = EncodeConfig {
        seed,
        max_segments: 24,
        ..EncodeConfig::default()
    };
    encode_dataset(&synthetic::corpus(per_class, seed), &cats, &cfg, Execution::Sequential).unwrap()
}

fn small_cfg(kind: ModelKind, dir: &Path) -> TrainConfig {
    TrainConfig {
        model: ModelConfig {
            kind,
            hidden_size: 16,
            ..ModelConfig::default()
        },
        epochs: 2,
        batch_size: 4,
        lr: 1e-2,
        seeds: vec![1],
        dataset: dir.join("toy.qds"),
        out_dir: dir.join("runs"),
        workers: Some(2),
        svg: true,
        exec: Execution::Parallel,
    }
}

#[test]
fn two_epochs_on_toy_set() {
    let dir = tempfile::tempdir().unwrap();
    // 4 per class, split 0.8 → 3 train + 1 val per class
    write_dataset(&toy(4, 0), &dir.path().join("toy.qds")).unwrap();
    let cfg = small_cfg(ModelKind::Qd, dir.path());
    let rec = train(&cfg, 1).unwrap();
    assert_eq!(rec.epochs(), 2);
    for v in [&rec.train_loss, &rec.val_loss, &rec.train_acc, &rec.val_acc] {
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0));
    }
    assert!(rec.train_acc.iter().chain(&rec.val_acc).all(|a| *a <= 1.0));
    let run = run_dir(&cfg.out_dir, ModelKind::Qd, 1);
    for f in ["metrics.csv", "record.json", "model.ckpt", "curves.svg", "manifest.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(csv, metrics_csv(&rec));
    assert_eq!(csv.lines().next().unwrap(), "epoch,train_loss,val_loss,train_acc,val_acc");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["artifacts"]["metrics.csv"].as_str().unwrap().len(), 64);
}

#[test]
fn untrained_loss_is_near_ln3() {
    let ds = toy(20, 4);
    let val: Vec<&EncodedSample> = ds.split(Split::Validation).collect();
    for kind in ModelKind::ALL {
        for seed in 0..3 {
            let model = HybridModel::new(ModelConfig {
                kind,
                seed,
                ..ModelConfig::default()
            })
            .unwrap();
            let (loss, acc) = evaluate(&model, &val, Execution::Parallel).unwrap();
            assert!((loss - 3f64.ln()).abs() < 0.2, "{kind} seed {seed}: {loss}");
            assert!((0.0..=1.0).contains(&acc));
        }
    }
}

#[test]
fn same_config_and_seed_are_bit_identical() {
    let ds = toy(4, 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(ModelKind::QdSep, dir.path());
    let a = train_on(&cfg, &ds, 5).unwrap();
    let b = train_on(&cfg, &ds, 5).unwrap();
    let seq = TrainConfig {
        exec: Execution::Sequential,
        ..cfg.clone()
    };
    let c = train_on(&seq, &ds, 5).unwrap();
    assert_eq!(metrics_csv(&a.record), metrics_csv(&b.record));
    assert_eq!(metrics_csv(&a.record), metrics_csv(&c.record));
    assert_eq!(a.model, c.model);
    let other = train_on(&cfg, &ds, 6).unwrap();
    assert_ne!(metrics_csv(&a.record), metrics_csv(&other.record));
}

#[test]
fn frozen_theta_survives_training() {
    let ds = toy(4, 3);
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(ModelKind::QdFrozen, dir.path());
    let init = HybridModel::new(ModelConfig { seed: 9, ..cfg.model.clone() }).unwrap();
    let out = train_on(&cfg, &ds, 9).unwrap();
    let bits = |m: &HybridModel| m.theta().unwrap().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&out.model), bits(&init));
    let id = init.store.find("fc_out.w").unwrap();
    assert_ne!(out.model.store.value(id), init.store.value(id));
}

fn fixed_class_model(class: usize) -> HybridModel {
    let mut m = HybridModel::new(ModelConfig {
        kind: ModelKind::Baseline,
        hidden_size: 8,
        ..ModelConfig::default()
    })
    .unwrap();
    let w = m.store.find("out.w").unwrap();
    m.store.value_mut(w).data_mut().fill(0.0);
    let b = m.store.find("out.b").unwrap();
    let bias = m.store.value_mut(b).data_mut();
    bias.fill(0.0);
    bias[class] = 5.0;
    m
}

#[test]
fn evaluate_counts_and_is_pure() {
    let ds = toy(6, 1);
    let all: Vec<&EncodedSample> = ds.samples.iter().collect();
    let m = fixed_class_model(0);
    let (l1, a1) = evaluate(&m, &all, Execution::Parallel).unwrap();
    assert!((a1 - 1.0 / 3.0).abs() < 1e-12);
    let (l2, a2) = evaluate(&m, &all, Execution::Sequential).unwrap();
    assert_eq!((l1.to_bits(), a1), (l2.to_bits(), a2));

    // the "perfect predictor" gets every sample of its own class right
    let class0: Vec<&EncodedSample> = ds.samples.iter().filter(|s| s.label == 0).collect();
    assert_eq!(evaluate(&m, &class0, Execution::Parallel).unwrap().1, 1.0);
    assert_eq!(evaluate(&m, &[], Execution::Parallel), Err(HarnessError::EmptySplit("evaluation")));
}

#[test]
fn suite_summary_matches_persisted_records() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&toy(4, 0), &dir.path().join("toy.qds")).unwrap();
    let cfg = TrainConfig {
        seeds: vec![3, 1, 2],
        svg: false,
        ..small_cfg(ModelKind::Baseline, dir.path())
    };
    let summary = run_suite(&cfg).unwrap();
    let row = summary.row(ModelKind::Baseline).unwrap();
    assert_eq!(row.seeds, vec![1, 2, 3]);
    assert!(row.val_acc.min <= row.val_acc.mean && row.val_acc.mean <= row.val_acc.max);
    let records = collect_records(&cfg.out_dir).unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(summarize(&records), summary);
    let csv = std::fs::read_to_string(cfg.out_dir.join("baseline/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn failing_suite_writes_no_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut ds = toy(4, 0);
    for s in ds.samples.iter_mut().filter(|s| s.split == Split::Train) {
        s.matrix.data_mut()[0] = f64::NAN;
    }
    write_dataset(&ds, &dir.path().join("toy.qds")).unwrap();
    let cfg = TrainConfig {
        seeds: vec![0, 1],
        ..small_cfg(ModelKind::Baseline, dir.path())
    };
    match run_suite(&cfg) {
        Err(HarnessError::Partial { total, failed }) => {
            assert_eq!(total, 2);
            assert_eq!(failed.len(), 2);
            assert!(failed[0].1.contains("epoch 1, batch 0"), "{}", failed[0].1);
        }
        other => panic!("expected a partial suite, got {other:?}"),
    }
    assert!(!cfg.out_dir.join("baseline/summary.csv").exists());
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let base = small_cfg(ModelKind::Qd, dir.path());
    for cfg in [
        TrainConfig { epochs: 0, ..base.clone() },
        TrainConfig { seeds: vec![], ..base.clone() },
        TrainConfig { seeds: vec![2, 2], ..base.clone() },
    ] {
        assert!(matches!(cfg.validate(), Err(HarnessError::InvalidConfig(_))));
    }
    assert!(matches!(train(&base, 1), Err(HarnessError::Io(_))));
}
