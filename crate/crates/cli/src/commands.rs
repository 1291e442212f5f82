use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use log::{info, warn};
use quantumdraw::gradcheck::{self, GradcheckOptions, Scope};
use quantumdraw::harness::{
    collect_records, render_summary_table, run_suite, sha256_hex, summarize, write_summary, HarnessError,
    TrainConfig,
};
use quantumdraw::models::{ModelConfig, ModelKind};
use quantumdraw::par::{self, Execution};
use quantumdraw::qsim::ParamSlot;
use quantumdraw::sketchdata::{
    category_file, class_map, dataset_to_bytes, default_cache_dir, encode_dataset, fetch_category,
    read_category_file, synthetic, EncodeConfig, Split, SUPPORTED_CATEGORIES,
};
use serde_json::json;

use crate::config::{ConfigFile, Resolver};
use crate::{Cli, Command, DataArgs, GradcheckArgs, ReportArgs, TrainArgs};

pub enum CliError {
    /// Bad arguments or configuration (exit 2).
    Usage(String),
    /// The command ran and failed (exit 1).
    Failure(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Which seeds a training command runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    /// `n` consecutive seeds starting at the base seed.
    Count(usize),
    List(Vec<u64>),
    /// Half-open range.
    Range(u64, u64),
}

impl SeedSpec {
    pub fn seeds(&self, base: u64) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n as u64).map(|i| base + i).collect(),
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range(a, b) => (*a..*b).collect(),
        }
    }
}

impl FromStr for SeedSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad seed `{t}`"));
        if let Some((a, b)) = s.split_once("..") {
            return Ok(SeedSpec::Range(num(a)?, num(b)?));
        }
        if s.contains(',') {
            return s
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(num)
                .collect::<std::result::Result<_, _>>()
                .map(SeedSpec::List);
        }
        Ok(SeedSpec::Count(num(s)? as usize))
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Count(n) => write!(f, "{n}"),
            SeedSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{},", parts.join(","))
            }
            SeedSpec::Range(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

/// Settings shared by every command.
struct Global {
    out: PathBuf,
    workers: Option<usize>,
    seed: u64,
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

fn write_manifest(path: &Path, command: &str, effective: &BTreeMap<String, String>, extra: serde_json::Value) -> anyhow::Result<()> {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": effective,
        "replay": format!("quantumdraw --config {} {command}", path.display()),
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (m.as_object_mut(), extra) {
        obj.extend(more);
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p).map_err(usage)?,
        None => ConfigFile::default(),
    };
    let mut r = Resolver::new(&file);
    let global = Global {
        out: r.get("out", cli.out.clone().map(|p| p.display().to_string()), "runs".into()).map_err(usage).map(PathBuf::from)?,
        workers: r.get_opt("workers", cli.workers).map_err(usage)?,
        seed: r.get("seed", cli.seed, 0).map_err(usage)?,
    };
    if global.workers == Some(0) {
        return Err(usage("--workers must be at least 1"));
    }
    let workers = global.workers;
    let command = cli.command;
    par::with_workers(workers, move || match command {
        Command::Data(a) => cmd_data(&global, r, a),
        Command::Train(a) => cmd_train(&global, r, a),
        Command::Report(a) => cmd_report(&global, r, a),
        Command::Gradcheck(a) => cmd_gradcheck(&global, r, a),
    })
}

fn cmd_data(g: &Global, mut r: Resolver<'_>, a: DataArgs) -> Result<()> {
    let cats_raw: String = r
        .get("data.categories", a.categories, SUPPORTED_CATEGORIES.join(","))
        .map_err(usage)?;
    let categories: Vec<String> = cats_raw
        .split(',')
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    if categories.is_empty() {
        return Err(usage("at least one category is required"));
    }
    let cache_dir: Option<String> = r.get_opt("data.cache_dir", a.cache_dir.map(|p| p.display().to_string())).map_err(usage)?;
    let local_dir: Option<String> = r.get_opt("data.local_dir", a.local_dir.map(|p| p.display().to_string())).map_err(usage)?;
    let synthetic_n: Option<usize> = r.get_opt("data.synthetic", a.synthetic).map_err(usage)?;
    let cfg = EncodeConfig {
        tol: r.get("data.tol", a.tol, EncodeConfig::default().tol).map_err(usage)?,
        split: r.get("data.split", a.split, EncodeConfig::default().split).map_err(usage)?,
        seed: g.seed,
        max_segments: r.get("data.max_segments", a.max_segments, EncodeConfig::default().max_segments).map_err(usage)?,
    };
    let cap: usize = r.get("data.cap", a.cap, 500).map_err(usage)?;
    let output: String = r.get("data.output", a.output, "dataset.qds".into()).map_err(usage)?;
    if local_dir.is_some() && synthetic_n.is_some() {
        return Err(usage("--local-dir and --synthetic are mutually exclusive"));
    }

    let mut sources = BTreeMap::new();
    let mut drawings = Vec::new();
    if let Some(n) = synthetic_n {
        for c in &categories {
            if !SUPPORTED_CATEGORIES.contains(&c.as_str()) {
                return Err(usage(format!("no synthetic generator for `{c}`")));
            }
        }
        let per_class = n.min(cap);
        drawings = synthetic::corpus(per_class, g.seed)
            .into_iter()
            .filter(|d| categories.contains(&d.category))
            .collect();
        sources.insert("synthetic".to_string(), format!("{per_class} per class, seed {}", g.seed));
    } else {
        for c in &categories {
            let path = match &local_dir {
                Some(dir) => category_file(Path::new(dir), c),
                None => {
                    let cache = cache_dir.as_ref().map(PathBuf::from).unwrap_or_else(default_cache_dir);
                    fetch_category(c, &cache).map_err(|e| anyhow!(e)).with_context(|| format!("fetching `{c}`"))?
                }
            };
            let mut got = read_category_file(&path, cap).map_err(|e| anyhow!(e))?;
            for d in &mut got {
                // files keep their own `word` field; the file decides the class
                d.category = c.clone();
            }
            info!("{c}: {} drawings from {}", got.len(), path.display());
            sources.insert(c.clone(), sha256_file(&path)?);
            drawings.extend(got);
        }
    }

    let exec = Execution::Parallel;
    let ds = encode_dataset(&drawings, &categories, &cfg, exec).map_err(|e| anyhow!(e))?;
    std::fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    let path = g.out.join(&output);
    let bytes = dataset_to_bytes(&ds);
    std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;

    let names = class_map(&categories);
    let train = ds.class_counts(Some(Split::Train));
    let val = ds.class_counts(Some(Split::Validation));
    println!("dataset: {}", path.display());
    println!("samples: {}  rows per sample (N): {}  dropped: {}", ds.samples.len(), ds.n_rows, ds.dropped);
    for (i, name) in names.iter().enumerate() {
        println!("  {name:<12} train {:>5}  val {:>5}", train[i], val[i]);
    }
    let manifest = g.out.join(format!("{output}.manifest.json"));
    write_manifest(
        &manifest,
        "data",
        &r.effective,
        json!({
            "classes": names,
            "samples": ds.samples.len(),
            "n_rows": ds.n_rows,
            "dropped": ds.dropped,
            "train_counts": train,
            "val_counts": val,
            "sources": sources,
            "artifacts": { output.clone(): sha256_hex(&bytes) },
        }),
    )?;
    Ok(())
}

fn cmd_train(g: &Global, mut r: Resolver<'_>, a: TrainArgs) -> Result<()> {
    let kind: ModelKind = r.get("train.model", a.model, ModelKind::Qd).map_err(usage)?;
    let defaults = ModelConfig::default();
    let seeds_spec: SeedSpec = r.get("train.seeds", a.seeds, SeedSpec::Count(10)).map_err(usage)?;
    let dataset: String = r
        .get("train.dataset", a.dataset.map(|p| p.display().to_string()), g.out.join("dataset.qds").display().to_string())
        .map_err(usage)?;
    let sequential: bool = r.get("train.sequential", a.sequential.then_some(true), false).map_err(usage)?;
    let cfg = TrainConfig {
        model: ModelConfig {
            kind,
            hidden_size: r.get("train.hidden_size", a.hidden_size, defaults.hidden_size).map_err(usage)?,
            n_qubits: r.get("train.n_qubits", a.n_qubits, defaults.n_qubits).map_err(usage)?,
            angle_squash: r.get("train.angle_squash", a.no_squash.then_some(false), true).map_err(usage)?,
            hea_layers: r.get("train.hea_layers", a.hea_layers, 1).map_err(usage)?,
            ..defaults
        },
        epochs: r.get("train.epochs", a.epochs, 100).map_err(usage)?,
        batch_size: r.get("train.batch_size", a.batch_size, 32).map_err(usage)?,
        lr: r.get("train.lr", a.lr, 1e-3).map_err(usage)?,
        seeds: seeds_spec.seeds(g.seed),
        dataset: PathBuf::from(dataset),
        out_dir: g.out.clone(),
        workers: g.workers,
        svg: r.get("train.svg", a.no_svg.then_some(false), true).map_err(usage)?,
        exec: if sequential { Execution::Sequential } else { Execution::Parallel },
    };
    cfg.validate().map_err(usage)?;
    if !cfg.dataset.exists() {
        return Err(CliError::Failure(anyhow!(
            "dataset {} not found (run `quantumdraw data` first)",
            cfg.dataset.display()
        )));
    }
    info!("training {kind} on {} for {} epoch(s), seeds {:?}", cfg.dataset.display(), cfg.epochs, cfg.seeds);

    let kind_dir = g.out.join(kind.slug());
    let partial = kind_dir.join("PARTIAL");
    let manifest = kind_dir.join("train.manifest.json");
    match run_suite(&cfg) {
        Ok(summary) => {
            let _ = std::fs::remove_file(&partial);
            print!("{}", render_summary_table(&summary));
            write_manifest(&manifest, "train", &r.effective, json!({ "seeds": cfg.seeds, "status": "complete" }))?;
            Ok(())
        }
        Err(HarnessError::Partial { total, failed }) => {
            let lines: Vec<String> = failed.iter().map(|(s, e)| format!("seed {s}: {e}")).collect();
            std::fs::create_dir_all(&kind_dir).map_err(|e| anyhow!(e))?;
            std::fs::write(&partial, lines.join("\n") + "\n").map_err(|e| anyhow!(e))?;
            write_manifest(&manifest, "train", &r.effective, json!({ "seeds": cfg.seeds, "status": "partial", "failed": lines }))?;
            for l in &lines {
                warn!("{l}");
            }
            Err(CliError::Failure(anyhow!("{} of {total} seed(s) failed; outputs under {} are partial", failed.len(), kind_dir.display())))
        }
        Err(e) => Err(CliError::Failure(anyhow!(e))),
    }
}

fn cmd_report(g: &Global, mut r: Resolver<'_>, a: ReportArgs) -> Result<()> {
    let dir: String = r
        .get("report.dir", a.dir.map(|p| p.display().to_string()), g.out.display().to_string())
        .map_err(usage)?;
    let records = collect_records(Path::new(&dir)).map_err(|e| anyhow!(e))?;
    let summary = summarize(&records);
    write_summary(&summary, &g.out).map_err(|e| anyhow!(e))?;
    print!("{}", render_summary_table(&summary));
    write_manifest(
        &g.out.join("report.manifest.json"),
        "report",
        &r.effective,
        json!({ "records": records.len() }),
    )?;
    Ok(())
}

fn parse_slot(s: &str) -> std::result::Result<ParamSlot, String> {
    let (kind, idx) = s
        .split_once([':', ' '])
        .ok_or_else(|| format!("bad slot `{s}` (expected embed:N or train:N)"))?;
    let i: usize = idx.trim().parse().map_err(|_| format!("bad slot index in `{s}`"))?;
    match kind.trim() {
        "embed" => Ok(ParamSlot::Embed(i)),
        "train" => Ok(ParamSlot::Train(i)),
        _ => Err(format!("bad slot kind in `{s}`")),
    }
}

fn cmd_gradcheck(g: &Global, mut r: Resolver<'_>, a: GradcheckArgs) -> Result<()> {
    let scope_name: String = r
        .get_opt("gradcheck.scope", a.scope)
        .map_err(usage)?
        .ok_or_else(|| usage("a scope is required: qsim, autograd or model"))?;
    let scope: Scope = scope_name.parse().map_err(usage)?;
    let opts = GradcheckOptions {
        seed: g.seed,
        instances: r.get("gradcheck.instances", a.instances, 20).map_err(usage)?,
        corrupt: match a.corrupt_slot {
            Some(s) => Some((parse_slot(&s).map_err(usage)?, a.corrupt_shift)),
            None => None,
        },
    };
    let rep = gradcheck::run(scope, &opts).map_err(|e| anyhow!(e))?;
    let metric = match rep.metric {
        gradcheck::Metric::Absolute => "absolute",
        gradcheck::Metric::Relative => "relative",
    };
    println!("scope: {scope}  seed: {}  checks: {}", g.seed, rep.checks.len());
    println!("max {metric} deviation: {:.3e} (tolerance {:.0e})", rep.max_deviation(), rep.tolerance);
    if let Some(w) = rep.worst() {
        println!("worst: {} (analytic {:.12e}, numeric {:.12e})", w.id, w.analytic, w.numeric);
    }
    let passed = rep.passed();
    write_manifest(
        &g.out.join(format!("gradcheck-{scope}.manifest.json")),
        "gradcheck",
        &r.effective,
        json!({
            "passed": passed,
            "checks": rep.checks.len(),
            "max_deviation": rep.max_deviation(),
            "tolerance": rep.tolerance,
            "worst": rep.worst().map(|w| w.id.clone()),
        }),
    )?;
    if passed {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        let worst = rep.worst().map(|w| w.id.clone()).unwrap_or_default();
        Err(CliError::Failure(anyhow!("gradient check failed; worst offender: {worst}")))
    }
}
