//! Finite-difference audits of the three gradient paths.
//!
//! * `qsim`: parameter-shift Jacobians of random five-qubit ansatz
//!   instances against central differences of the simulator (absolute
//!   deviation, tolerance 1e-6);
//! * `autograd`: tape gradients of composite expressions, an unrolled LSTM
//!   and the cross-entropy head against central differences (relative,
//!   1e-4);
//! * `model`: the full QD and baseline pipelines on a small synthetic
//!   dataset (relative, 1e-4).
//!
//! Relative deviation is `|a − n| / max(|a|, |n|, 1e-4)`, so gradients
//! that are essentially zero are compared absolutely.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autograd::{lstm_cell, AutogradError, Gradients, Graph, LstmLayer, ParamId, ParamStore, Tensor, Value};
use crate::models::{HybridModel, ModelConfig, ModelError, ModelKind};
use crate::par::Execution;
use crate::qsim::{build_hea, param_shift_grad_with, run_circuit, ParamSlot, QsimError, ShiftRecipe};
use crate::sketchdata::{encode_dataset, synthetic, EncodeConfig, SketchError, SUPPORTED_CATEGORIES};

pub const QSIM_TOLERANCE: f64 = 1e-6;
pub const RELATIVE_TOLERANCE: f64 = 1e-4;
const RELATIVE_FLOOR: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradcheckError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Autograd(#[from] AutogradError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] SketchError),
    #[error("unknown gradcheck scope `{0}` (expected qsim, autograd or model)")]
    UnknownScope(String),
}

pub type Result<T> = std::result::Result<T, GradcheckError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Qsim,
    Autograd,
    Model,
}

impl Scope {
    pub const ALL: [Scope; 3] = [Scope::Qsim, Scope::Autograd, Scope::Model];

    pub fn name(self) -> &'static str {
        match self {
            Scope::Qsim => "qsim",
            Scope::Autograd => "autograd",
            Scope::Model => "model",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scope {
    type Err = GradcheckError;

    fn from_str(s: &str) -> Result<Self> {
        Scope::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| GradcheckError::UnknownScope(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckOptions {
    pub seed: u64,
    /// Number of random instances (circuits, expressions or samples).
    pub instances: usize,
    /// Test hook: perturb the shift of one circuit slot.
    pub corrupt: Option<(ParamSlot, f64)>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 20,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub analytic: f64,
    pub numeric: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub scope: Scope,
    pub metric: Metric,
    pub tolerance: f64,
    pub checks: Vec<Check>,
}

impl GradcheckReport {
    fn new(scope: Scope, metric: Metric, tolerance: f64) -> Self {
        Self {
            scope,
            metric,
            tolerance,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, id: String, analytic: f64, numeric: f64) {
        let deviation = match self.metric {
            Metric::Absolute => (analytic - numeric).abs(),
            Metric::Relative => relative_deviation(analytic, numeric),
        };
        self.checks.push(Check {
            id,
            analytic,
            numeric,
            deviation,
        });
    }

    /// Largest deviation; NaN deviations count as infinite.
    pub fn worst(&self) -> Option<&Check> {
        let key = |c: &Check| if c.deviation.is_nan() { f64::INFINITY } else { c.deviation };
        self.checks.iter().max_by(|a, b| key(a).total_cmp(&key(b)))
    }

    pub fn max_deviation(&self) -> f64 {
        self.worst().map_or(0.0, |c| if c.deviation.is_nan() { f64::INFINITY } else { c.deviation })
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.max_deviation() < self.tolerance
    }
}

pub fn relative_deviation(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// `(f(x + h) − f(x − h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn run(scope: Scope, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    match scope {
        Scope::Qsim => check_qsim(opts),
        Scope::Autograd => check_autograd(opts),
        Scope::Model => check_model(opts),
    }
}

fn check_qsim(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rep = GradcheckReport::new(Scope::Qsim, Metric::Absolute, QSIM_TOLERANCE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let recipe = ShiftRecipe {
        corrupt: opts.corrupt,
        ..ShiftRecipe::default()
    };
    let h = 1e-5;
    for inst in 0..opts.instances {
        let layout = build_hea(5, inst % 4 != 3)?;
        let embed: Vec<f64> = (0..layout.n_embed()).map(|_| rng.random_range(-3.2..3.2)).collect();
        let theta: Vec<f64> = (0..layout.n_train()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let jac = param_shift_grad_with(&layout, &embed, &theta, &recipe)?;
        for i in 0..embed.len() {
            let (mut p, mut m) = (embed.clone(), embed.clone());
            p[i] += h;
            m[i] -= h;
            let (fp, fm) = (run_circuit(&layout, &p, &theta)?, run_circuit(&layout, &m, &theta)?);
            for q in 0..layout.n_qubits() {
                let numeric = (fp[q] - fm[q]) / (2.0 * h);
                rep.push(format!("instance {inst} {} qubit {q}", ParamSlot::Embed(i)), jac.d_embed(q, i), numeric);
            }
        }
        for j in 0..theta.len() {
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[j] += h;
            m[j] -= h;
            let (fp, fm) = (run_circuit(&layout, &embed, &p)?, run_circuit(&layout, &embed, &m)?);
            for q in 0..layout.n_qubits() {
                let numeric = (fp[q] - fm[q]) / (2.0 * h);
                let analytic = jac.d_theta(q, j).unwrap_or(f64::NAN);
                rep.push(format!("instance {inst} {} qubit {q}", ParamSlot::Train(j)), analytic, numeric);
            }
        }
    }
    Ok(rep)
}

/// Compares tape gradients of `loss(store)` with central differences for
/// every scalar of every trainable parameter.
fn check_store(
    rep: &mut GradcheckReport,
    label: &str,
    store: &ParamStore,
    loss: impl Fn(&ParamStore) -> Result<(f64, Gradients)>,
) -> Result<()> {
    let (_, grads) = loss(store)?;
    let h = 1e-6;
    for id in store.ids() {
        let p = store.get(id);
        if !p.trainable {
            continue;
        }
        for k in 0..p.value.len() {
            let mut probe = store.clone();
            let numeric = central_difference(
                |x| {
                    probe.value_mut(id).data_mut()[k] = x;
                    loss(&probe).map_or(f64::NAN, |(l, _)| l)
                },
                p.value.data()[k],
                h,
            );
            rep.push(format!("{label} {}[{k}]", p.name), grads.0[id.index()][k], numeric);
        }
    }
    Ok(())
}

fn run_graph(store: &ParamStore, build: impl for<'a> Fn(&mut Graph<'a>, &dyn Fn(ParamId) -> Value) -> std::result::Result<Value, AutogradError>) -> Result<(f64, Gradients)> {
    let mut g = Graph::new();
    let bound = store.bind(&mut g);
    let root = build(&mut g, &|id| bound.get(id))?;
    let value = g.data(root).item();
    g.backward(root)?;
    Ok((value, store.collect_grads(&g, &bound)))
}

fn check_autograd(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rep = GradcheckReport::new(Scope::Autograd, Metric::Relative, RELATIVE_TOLERANCE);
    let n = opts.instances.max(10);
    for inst in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(1000).wrapping_add(inst as u64));

        // tanh/sigmoid/concat/slice/mul/max-pool/scale/sum/cross-entropy
        let mut store = ParamStore::new();
        let x = store.add_uniform("x", &[6], 1.0, &mut rng);
        let w = store.add_uniform("w", &[4, 6], 0.8, &mut rng);
        let b = store.add_uniform("b", &[4], 0.5, &mut rng);
        let v = store.add_uniform("v", &[4], 1.0, &mut rng);
        let label = rng.random_range(0..3);
        check_store(&mut rep, &format!("composite {inst}"), &store, |s| {
            run_graph(s, |g, p| {
                let wx = g.matmul(p(w), p(x))?;
                let pre = g.add(wx, p(b))?;
                let y = g.tanh(pre);
                let head = g.slice(p(x), 0, 2)?;
                let cat = g.concat(&[y, head])?;
                let z = g.sigmoid(cat);
                let zx = g.mul(z, p(x))?;
                let pooled = g.max_pool_1d(zx)?;
                let logits = g.scale(pooled, 0.7);
                let ce = g.softmax_cross_entropy(logits, label)?;
                let yv = g.mul(y, p(v))?;
                let s = g.sum(yv);
                g.add(ce, s)
            })
        })?;

        // two unrolled LSTM steps feeding a cross-entropy head
        let mut store = ParamStore::new();
        let cell = LstmLayer::init(&mut store, "lstm", 3, 4, &mut rng);
        let x1 = Tensor::vector((0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
        let x2 = Tensor::vector((0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
        let label = rng.random_range(0..4);
        check_store(&mut rep, &format!("lstm {inst}"), &store, |s| {
            let mut g = Graph::new();
            let bound = s.bind(&mut g);
            let lp = cell.bind(&bound);
            let h0 = g.constant(Tensor::zeros(&[4]));
            let c0 = g.constant(Tensor::zeros(&[4]));
            let a = g.constant(x1.clone());
            let (h1, c1) = lstm_cell(&mut g, a, h0, c0, &lp)?;
            let bb = g.constant(x2.clone());
            let (h2, c2) = lstm_cell(&mut g, bb, h1, c1, &lp)?;
            let ce = g.softmax_cross_entropy(h2, label)?;
            let sc = g.sum(c2);
            let root = g.add(ce, sc)?;
            let value = g.data(root).item();
            g.backward(root)?;
            Ok((value, s.collect_grads(&g, &bound)))
        })?;

        // cross-entropy on its own
        let mut store = ParamStore::new();
        let logits = store.add_uniform("logits", &[5], 3.0, &mut rng);
        let label = rng.random_range(0..5);
        check_store(&mut rep, &format!("cross-entropy {inst}"), &store, |s| {
            run_graph(s, |g, p| g.softmax_cross_entropy(p(logits), label))
        })?;
    }
    Ok(rep)
}

/// Small synthetic samples for the model scope.
fn toy_samples(seed: u64, count: usize) -> Result<Vec<(Tensor, usize)>> {
    let drawings = synthetic::corpus(count.div_ceil(3).max(1), seed);
    let cats: Vec<String> = SUPPORTED_CATEGORIES.iter().map(|s| s.to_string()).collect();
    let cfg = EncodeConfig {
        seed,
        max_segments: 24,
        ..EncodeConfig::default()
    };
    let ds = encode_dataset(&drawings, &cats, &cfg, Execution::Sequential)?;
    Ok(ds
        .samples
        .into_iter()
        .take(count)
        .map(|s| (s.matrix, s.label))
        .collect())
}

fn check_model(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rep = GradcheckReport::new(Scope::Model, Metric::Relative, RELATIVE_TOLERANCE);
    let samples = toy_samples(opts.seed, 3)?;
    let batch: Vec<(&Tensor, usize)> = samples.iter().map(|(t, l)| (t, *l)).collect();
    for kind in [ModelKind::Qd, ModelKind::Baseline] {
        let model = HybridModel::new(ModelConfig {
            kind,
            seed: opts.seed,
            ..ModelConfig::default()
        })?;
        let (_, grads) = model.batch_loss_and_grads(&batch, Execution::Sequential)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
        let h = 1e-5;
        for id in model.store.ids() {
            let p = model.store.get(id);
            if !p.trainable {
                continue;
            }
            // a couple of random scalars from every parameter tensor
            for _ in 0..2 {
                let k = rng.random_range(0..p.value.len());
                let mut probe = model.clone();
                let numeric = central_difference(
                    |x| {
                        probe.store.value_mut(id).data_mut()[k] = x;
                        probe
                            .batch_loss_and_grads(&batch, Execution::Sequential)
                            .map_or(f64::NAN, |(l, _)| l)
                    },
                    p.value.data()[k],
                    h,
                );
                rep.push(format!("{} {}[{k}]", kind.label(), p.name), grads.0[id.index()][k], numeric);
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scope_names() {
        for s in Scope::ALL {
            assert_eq!(s.name().parse::<Scope>().unwrap(), s);
        }
        assert!("circuit".parse::<Scope>().is_err());
    }

    #[test]
    fn relative_floor() {
        assert_eq!(relative_deviation(2.0, 1.0), 0.5);
        assert!((relative_deviation(1e-9, 0.0) - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn worst_prefers_nan() {
        let mut r = GradcheckReport::new(Scope::Qsim, Metric::Absolute, 1e-6);
        r.push("a".into(), 1.0, 1.0);
        r.push("b".into(), f64::NAN, 1.0);
        assert_eq!(r.worst().unwrap().id, "b");
        assert!(!r.passed());
    }

    #[test]
    fn qsim_scope_passes_and_catches_corruption() {
        let opts = GradcheckOptions {
            seed: 7,
            instances: 2,
            corrupt: None,
        };
        let rep = run(Scope::Qsim, &opts).unwrap();
        assert!(rep.passed(), "{:?}", rep.worst());
        let bad = GradcheckOptions {
            corrupt: Some((ParamSlot::Train(4), 1.2)),
            ..opts
        };
        let rep = run(Scope::Qsim, &bad).unwrap();
        assert!(!rep.passed());
        assert!(rep.worst().unwrap().id.contains("train 4"));
    }
}
