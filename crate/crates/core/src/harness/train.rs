use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::summary::{summarize, write_summary, Summary};
use super::svg::learning_curves_svg;
use super::{io_err, HarnessError, Result};
use crate::autograd::{AdamConfig, AdamState};
use crate::models::{argmax, HybridModel, ModelConfig, ModelKind};
use crate::par::{self, Execution};
use crate::sketchdata::{dataset_from_bytes, EncodedDataset, EncodedSample, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seeds: Vec<u64>,
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    /// Thread count for the data-parallel loops; `None` uses every core.
    pub workers: Option<usize>,
    /// Also write `curves.svg` next to each run's metrics.
    pub svg: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            epochs: 100,
            batch_size: 32,
            lr: 1e-3,
            seeds: (0..10).collect(),
            dataset: PathBuf::from("dataset.qds"),
            out_dir: PathBuf::from("runs"),
            workers: None,
            svg: true,
            exec: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        self.model.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: ModelKind,
    pub seed: u64,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub val_acc: Vec<f64>,
    pub wall_clock_secs: f64,
}

impl ExperimentRecord {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    fn last(v: &[f64]) -> f64 {
        v.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_train_loss(&self) -> f64 {
        Self::last(&self.train_loss)
    }

    pub fn final_val_loss(&self) -> f64 {
        Self::last(&self.val_loss)
    }

    pub fn final_train_acc(&self) -> f64 {
        Self::last(&self.train_acc)
    }

    pub fn final_val_acc(&self) -> f64 {
        Self::last(&self.val_acc)
    }
}

pub struct RunOutput {
    pub record: ExperimentRecord,
    pub model: HybridModel,
}

/// Mean cross-entropy and accuracy over `samples`. Per-sample passes may
/// run in parallel; the sums are taken in input order.
pub fn evaluate(model: &HybridModel, samples: &[&EncodedSample], exec: Execution) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(HarnessError::EmptySplit("evaluation"));
    }
    let per = par::map(exec, samples, |s| model.loss(&s.matrix, s.label));
    let (mut loss, mut correct) = (0.0, 0usize);
    for (r, s) in per.into_iter().zip(samples) {
        let (l, logits) = r?;
        loss += l;
        if argmax(&logits) == s.label {
            correct += 1;
        }
    }
    let n = samples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains one seed in memory. The dataset decides the number of classes.
pub fn train_on(cfg: &TrainConfig, dataset: &EncodedDataset, seed: u64) -> Result<RunOutput> {
    cfg.validate()?;
    let train: Vec<&EncodedSample> = dataset.split(Split::Train).collect();
    let val: Vec<&EncodedSample> = dataset.split(Split::Validation).collect();
    if train.is_empty() {
        return Err(HarnessError::EmptySplit("training"));
    }
    if val.is_empty() {
        return Err(HarnessError::EmptySplit("validation"));
    }
    let started = Instant::now();
    let mut model = HybridModel::new(ModelConfig {
        seed,
        n_classes: dataset.class_names.len(),
        ..cfg.model.clone()
    })?;
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &model.store,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rec = ExperimentRecord {
        kind: cfg.model.kind,
        seed,
        train_loss: Vec::with_capacity(cfg.epochs),
        val_loss: Vec::with_capacity(cfg.epochs),
        train_acc: Vec::with_capacity(cfg.epochs),
        val_acc: Vec::with_capacity(cfg.epochs),
        wall_clock_secs: 0.0,
    };

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<_> = chunk.iter().map(|&i| (&train[i].matrix, train[i].label)).collect();
            let (loss, grads) = model.batch_loss_and_grads(&batch, cfg.exec)?;
            if !loss.is_finite() {
                return Err(HarnessError::NonFinite { what: "loss", epoch, batch: b });
            }
            if !grads.all_finite() {
                return Err(HarnessError::NonFinite { what: "gradient", epoch, batch: b });
            }
            model.store.set_grads(grads)?;
            adam.step(&mut model.store)?;
        }
        let (tl, ta) = evaluate(&model, &train, cfg.exec)?;
        let (vl, va) = evaluate(&model, &val, cfg.exec)?;
        if !(tl.is_finite() && vl.is_finite()) {
            return Err(HarnessError::NonFinite { what: "epoch loss", epoch, batch: 0 });
        }
        debug!(
            "{} seed {seed} epoch {epoch}: train {tl:.4}/{ta:.3} val {vl:.4}/{va:.3}",
            cfg.model.kind
        );
        rec.train_loss.push(tl);
        rec.val_loss.push(vl);
        rec.train_acc.push(ta);
        rec.val_acc.push(va);
    }
    rec.wall_clock_secs = started.elapsed().as_secs_f64();
    info!(
        "{} seed {seed}: final val acc {:.3} after {} epochs ({:.1}s)",
        rec.kind,
        rec.final_val_acc(),
        cfg.epochs,
        rec.wall_clock_secs
    );
    Ok(RunOutput { record: rec, model })
}

pub fn metrics_csv(rec: &ExperimentRecord) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,train_acc,val_acc\n");
    for e in 0..rec.epochs() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e + 1,
            rec.train_loss[e],
            rec.val_loss[e],
            rec.train_acc[e],
            rec.val_acc[e]
        );
    }
    out
}

pub fn run_dir(out_dir: &Path, kind: ModelKind, seed: u64) -> PathBuf {
    out_dir.join(kind.slug()).join(format!("seed-{seed}"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn persist(cfg: &TrainConfig, out: &RunOutput, dataset_hash: &str) -> Result<PathBuf> {
    let rec = &out.record;
    let dir = run_dir(&cfg.out_dir, rec.kind, rec.seed);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let mut artifacts = BTreeMap::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        write(&dir.join(name), &bytes)?;
        artifacts.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    };
    emit("metrics.csv", metrics_csv(rec).into_bytes())?;
    let json = serde_json::to_vec_pretty(rec).map_err(|e| HarnessError::Io(e.to_string()))?;
    emit("record.json", json)?;
    emit("model.ckpt", out.model.to_checkpoint().to_text().into_bytes())?;
    if cfg.svg {
        emit("curves.svg", learning_curves_svg(std::slice::from_ref(rec)).into_bytes())?;
    }

    let manifest = serde_json::json!({
        "config": cfg,
        "effective_model": out.model.config,
        "seed": rec.seed,
        "dataset": cfg.dataset,
        "dataset_sha256": dataset_hash,
        "artifacts": artifacts,
    });
    let text = serde_json::to_vec_pretty(&manifest).map_err(|e| HarnessError::Io(e.to_string()))?;
    write(&dir.join("manifest.json"), &text)?;
    Ok(dir)
}

fn load_dataset(path: &Path) -> Result<(EncodedDataset, String)> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let ds = dataset_from_bytes(&bytes)?;
    Ok((ds, sha256_hex(&bytes)))
}

/// Trains one seed on `cfg.dataset` and persists its artifacts under
/// `cfg.out_dir`.
pub fn train(cfg: &TrainConfig, seed: u64) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let (ds, hash) = load_dataset(&cfg.dataset)?;
    let out = par::with_workers(cfg.workers, || train_on(cfg, &ds, seed))?;
    persist(cfg, &out, &hash)?;
    Ok(out.record)
}

/// Trains every seed of `cfg` (concurrently when parallel), persists each
/// run and writes the kind's summary. If any seed fails no summary is
/// written and the failures are reported together.
pub fn run_suite(cfg: &TrainConfig) -> Result<Summary> {
    cfg.validate()?;
    let (ds, hash) = load_dataset(&cfg.dataset)?;
    let results = par::with_workers(cfg.workers, || {
        par::map(cfg.exec, &cfg.seeds, |&seed| {
            train_on(cfg, &ds, seed).and_then(|out| persist(cfg, &out, &hash).map(|_| out.record))
        })
    });
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (seed, r) in cfg.seeds.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failed.push((*seed, e.to_string())),
        }
    }
    if !failed.is_empty() {
        return Err(HarnessError::Partial {
            total: cfg.seeds.len(),
            failed,
        });
    }
    let summary = summarize(&records);
    write_summary(&summary, &cfg.out_dir.join(cfg.model.kind.slug()))?;
    Ok(summary)
}
