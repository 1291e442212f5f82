//! Training loop, evaluation, multi-seed suites and their reports.
//!
//! A run is fully determined by its [`TrainConfig`] and seed: the seed
//! initializes the model and drives the per-epoch shuffles, and batch
//! gradients are merged in a fixed order even when computed in parallel.
//!
//! On-disk layout under the output directory:
//!
//! ```text
//! <out>/<kind>/seed-<s>/metrics.csv    epoch,train_loss,val_loss,train_acc,val_acc
//! <out>/<kind>/seed-<s>/record.json
//! <out>/<kind>/seed-<s>/model.ckpt
//! <out>/<kind>/seed-<s>/curves.svg     (optional)
//! <out>/<kind>/seed-<s>/manifest.json  config echo, seed and sha256 of each artifact
//! <out>/<kind>/summary.csv, summary.txt
//! ```

mod summary;
mod svg;
mod train;

pub use summary::{
    collect_records, render_summary_csv, render_summary_table, summarize, write_summary, Stat,
    Summary, SummaryRow,
};
pub use svg::learning_curves_svg;
pub use train::{
    evaluate, metrics_csv, run_dir, run_suite, sha256_hex, train, train_on, ExperimentRecord, RunOutput,
    TrainConfig,
};

use thiserror::Error;

use crate::autograd::AutogradError;
use crate::models::ModelError;
use crate::sketchdata::SketchError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] SketchError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autograd(#[from] AutogradError),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("cannot evaluate on an empty {0} split")]
    EmptySplit(&'static str),
    #[error("non-finite {what} at epoch {epoch}, batch {batch}")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("bad record {path}: {msg}")]
    BadRecord { path: String, msg: String },
    #[error("no experiment records under {0}")]
    NoRecords(String),
    #[error("suite incomplete: {} of {total} seed(s) failed ({})", failed.len(), describe(failed))]
    Partial {
        total: usize,
        failed: Vec<(u64, String)>,
    },
}

fn describe(failed: &[(u64, String)]) -> String {
    failed
        .iter()
        .map(|(s, e)| format!("seed {s}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}
