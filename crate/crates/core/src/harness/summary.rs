use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::ExperimentRecord;
use super::{io_err, HarnessError, Result};
use crate::models::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    /// Aggregates `values` in the given order (callers pass seed order so
    /// the floating-point sum is reproducible).
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        Stat {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: ModelKind,
    pub seeds: Vec<u64>,
    pub train_acc: Stat,
    pub val_acc: Stat,
    pub train_loss: Stat,
    pub val_loss: Stat,
}

/// Final-epoch metrics per model kind, in report row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn row(&self, kind: ModelKind) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }
}

pub fn summarize(records: &[ExperimentRecord]) -> Summary {
    let mut rows = Vec::new();
    for kind in ModelKind::ALL {
        let mut recs: Vec<&ExperimentRecord> = records.iter().filter(|r| r.kind == kind).collect();
        if recs.is_empty() {
            continue;
        }
        recs.sort_by_key(|r| r.seed);
        let stat = |f: fn(&ExperimentRecord) -> f64| Stat::of(&recs.iter().map(|r| f(r)).collect::<Vec<_>>());
        rows.push(SummaryRow {
            kind,
            seeds: recs.iter().map(|r| r.seed).collect(),
            train_acc: stat(ExperimentRecord::final_train_acc),
            val_acc: stat(ExperimentRecord::final_val_acc),
            train_loss: stat(ExperimentRecord::final_train_loss),
            val_loss: stat(ExperimentRecord::final_val_loss),
        });
    }
    Summary { rows }
}

/// Every `record.json` below `dir`, sorted by kind and seed.
pub fn collect_records(dir: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    visit(dir, &mut out)?;
    if out.is_empty() {
        return Err(HarnessError::NoRecords(dir.display().to_string()));
    }
    out.sort_by_key(|r: &ExperimentRecord| (r.kind, r.seed));
    Ok(out)
}

fn visit(dir: &Path, out: &mut Vec<ExperimentRecord>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut paths: Vec<_> = entries
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(|e| io_err(dir, e))?;
    paths.sort();
    for p in paths {
        if p.is_dir() {
            visit(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "record.json") {
            let text = std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
            let rec = serde_json::from_str(&text).map_err(|e| HarnessError::BadRecord {
                path: p.display().to_string(),
                msg: e.to_string(),
            })?;
            out.push(rec);
        }
    }
    Ok(())
}

pub fn render_summary_csv(summary: &Summary) -> String {
    let mut out = String::from("model,seeds");
    for m in ["train_acc", "val_acc", "train_loss", "val_loss"] {
        let _ = write!(out, ",{m}_mean,{m}_min,{m}_max");
    }
    out.push('\n');
    for r in &summary.rows {
        let _ = write!(out, "{},{}", r.kind.label(), r.seeds.len());
        for s in [r.train_acc, r.val_acc, r.train_loss, r.val_loss] {
            let _ = write!(out, ",{},{},{}", s.mean, s.min, s.max);
        }
        out.push('\n');
    }
    out
}

/// Fixed-width text table, one row per kind with `mean (min, max)` cells.
pub fn render_summary_table(summary: &Summary) -> String {
    let cell = |s: Stat| format!("{:.3} ({:.3}, {:.3})", s.mean, s.min, s.max);
    let mut out = format!(
        "{:<10} {:>5}  {:<22} {:<22} {:<22} {:<22}\n",
        "model", "seeds", "train acc", "val acc", "train loss", "val loss"
    );
    for r in &summary.rows {
        let _ = writeln!(
            out,
            "{:<10} {:>5}  {:<22} {:<22} {:<22} {:<22}",
            r.kind.label(),
            r.seeds.len(),
            cell(r.train_acc),
            cell(r.val_acc),
            cell(r.train_loss),
            cell(r.val_loss)
        );
    }
    out
}

/// Writes `summary.csv` and `summary.txt` into `dir`.
pub fn write_summary(summary: &Summary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (name, text) in [
        ("summary.csv", render_summary_csv(summary)),
        ("summary.txt", render_summary_table(summary)),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(kind: ModelKind, seed: u64, val_acc: f64) -> ExperimentRecord {
        ExperimentRecord {
            kind,
            seed,
            train_loss: vec![1.0, 0.5],
            val_loss: vec![1.1, 0.6 + val_acc],
            train_acc: vec![0.4, 0.9],
            val_acc: vec![0.3, val_acc],
            wall_clock_secs: 1.0,
        }
    }

    #[test]
    fn table_one_aggregate() {
        let recs = [rec(ModelKind::Qd, 0, 0.61), rec(ModelKind::Qd, 1, 0.85), rec(ModelKind::Qd, 2, 0.96)];
        let s = summarize(&recs);
        let v = s.row(ModelKind::Qd).unwrap().val_acc;
        assert_eq!((v.min, v.max), (0.61, 0.96));
        assert!((v.mean - 0.8067).abs() < 1e-4);
    }

    #[test]
    fn single_seed_is_degenerate() {
        let s = summarize(&[rec(ModelKind::Baseline, 4, 0.7)]);
        let v = s.rows[0].val_acc;
        assert!(v.min == v.mean && v.mean == v.max);
    }

    #[test]
    fn order_invariant_and_fixed_rows() {
        let mut recs = vec![
            rec(ModelKind::Baseline, 0, 0.7),
            rec(ModelKind::Qd, 3, 0.3),
            rec(ModelKind::Qd, 1, 0.1),
            rec(ModelKind::QdSep, 0, 0.2),
            rec(ModelKind::Qd, 2, 0.7),
        ];
        let a = summarize(&recs);
        recs.reverse();
        assert_eq!(summarize(&recs), a);
        let kinds: Vec<_> = a.rows.iter().map(|r| r.kind).collect();
        assert_eq!(kinds, [ModelKind::Qd, ModelKind::QdSep, ModelKind::Baseline]);
        let table = render_summary_table(&a);
        assert_eq!(table.lines().count(), 4);
        assert!(table.lines().nth(1).unwrap().starts_with("QD "));
        assert!(render_summary_csv(&a).starts_with("model,seeds,train_acc_mean"));
    }
}
