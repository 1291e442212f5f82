use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, ModelKind};
use super::{ModelError, Result};
use crate::autograd::{
    lstm_cell, softmax, Bound, Checkpoint, Gradients, Graph, LstmLayer, ParamId, ParamStore,
    Tensor, Value,
};
use crate::par::{self, Execution};
use crate::qsim::{build_hea_layers, param_shift_grad_with, run_circuit, CircuitLayout, ShiftRecipe};
use crate::sketchdata::ROW_WIDTH;

/// `y = W x + b` with `W` uniform in ±1/√in and `b` uniform in ±1/√in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub w: ParamId,
    pub b: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Affine {
    pub fn init<R: Rng>(store: &mut ParamStore, name: &str, in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let a = 1.0 / (in_dim as f64).sqrt();
        let w = store.add_uniform(format!("{name}.w"), &[out_dim, in_dim], a, rng);
        let b = store.add_uniform(format!("{name}.b"), &[out_dim], a, rng);
        Self { w, b, in_dim, out_dim }
    }

    pub fn apply(&self, g: &mut Graph<'_>, bound: &Bound, x: Value) -> Result<Value> {
        let wx = g.matmul(bound.get(self.w), x)?;
        Ok(g.add(wx, bound.get(self.b))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumHead {
    pub fc1: Affine,
    pub fc2: Affine,
    pub fc_embed: Affine,
    pub fc_out: Affine,
    pub theta: ParamId,
    pub layout: CircuitLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Linear(Affine),
    Quantum(QuantumHead),
}

/// Whether a forward pass should prepare the circuit Jacobians.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMode {
    Inference,
    Gradient,
}

/// Handles produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct Trace {
    pub logits: Value,
    pub angles: Option<Value>,
    pub expvals: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub lstm1: LstmLayer,
    pub lstm2: LstmLayer,
    pub head: Head,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl HybridModel {
    /// Builds and initializes a model from `config.seed`. The quantum
    /// variants draw their parameters in the same order, so equal seeds give
    /// equal initial weights across them.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let h = config.hidden_size;
        let lstm1 = LstmLayer::init(&mut store, "lstm1", ROW_WIDTH, h, &mut rng);
        let lstm2 = LstmLayer::init(&mut store, "lstm2", h, h, &mut rng);
        let head = if config.kind.is_quantum() {
            let pooled = h / 2;
            let fc1 = Affine::init(&mut store, "fc1", pooled, pooled, &mut rng);
            let fc2 = Affine::init(&mut store, "fc2", pooled, pooled, &mut rng);
            let fc_embed = Affine::init(&mut store, "fc_embed", pooled, config.n_qubits, &mut rng);
            let fc_out = Affine::init(&mut store, "fc_out", config.n_qubits, config.n_classes, &mut rng);
            let layout = build_hea_layers(config.n_qubits, config.kind.entangling(), config.hea_layers)?;
            let theta_init = (0..layout.n_train()).map(|_| rng.random_range(0.0..TAU)).collect();
            let theta = store.add("theta", Tensor::vector(theta_init), config.kind.theta_trainable());
            Head::Quantum(QuantumHead {
                fc1,
                fc2,
                fc_embed,
                fc_out,
                theta,
                layout,
            })
        } else {
            Head::Linear(Affine::init(&mut store, "out", h, config.n_classes, &mut rng))
        };
        Ok(Self {
            config,
            store,
            lstm1,
            lstm2,
            head,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn layout(&self) -> Option<&CircuitLayout> {
        match &self.head {
            Head::Quantum(q) => Some(&q.layout),
            Head::Linear(_) => None,
        }
    }

    pub fn theta(&self) -> Option<&[f64]> {
        match &self.head {
            Head::Quantum(q) => Some(self.store.value(q.theta).data()),
            Head::Linear(_) => None,
        }
    }

    fn check_sample(sample: &Tensor) -> Result<Vec<usize>> {
        if sample.rank() != 2 || sample.shape()[1] != ROW_WIDTH {
            return Err(ModelError::Width {
                expected: ROW_WIDTH,
                got: sample.shape().to_vec(),
            });
        }
        let valid: Vec<usize> = (0..sample.shape()[0])
            .filter(|&i| sample.row(i)[ROW_WIDTH - 1] != 0.0)
            .collect();
        if valid.is_empty() {
            return Err(ModelError::NoValidRows);
        }
        Ok(valid)
    }

    /// Records the forward pass of one `N × 10` sample on `g`. Rows whose
    /// valid flag is zero are skipped.
    pub fn forward<'a>(&'a self, g: &mut Graph<'a>, bound: &Bound, sample: &Tensor, mode: GradMode) -> Result<Trace> {
        let rows = Self::check_sample(sample)?;
        let hs = self.config.hidden_size;
        let zeros = Tensor::zeros(&[hs]);
        let (mut h1, mut c1) = (g.constant(zeros.clone()), g.constant(zeros.clone()));
        let (mut h2, mut c2) = (g.constant(zeros.clone()), g.constant(zeros));
        let l1 = self.lstm1.bind(bound);
        let l2 = self.lstm2.bind(bound);
        for i in rows {
            let x = g.constant(Tensor::vector(sample.row(i).to_vec()));
            (h1, c1) = lstm_cell(g, x, h1, c1, &l1)?;
            (h2, c2) = lstm_cell(g, h1, h2, c2, &l2)?;
        }
        match &self.head {
            Head::Linear(out) => Ok(Trace {
                logits: out.apply(g, bound, h2)?,
                angles: None,
                expvals: None,
            }),
            Head::Quantum(q) => {
                let pooled = g.max_pool_1d(h2)?;
                let a1 = q.fc1.apply(g, bound, pooled)?;
                let a1 = g.relu(a1);
                let a2 = q.fc2.apply(g, bound, a1)?;
                let a2 = g.relu(a2);
                let z = q.fc_embed.apply(g, bound, a2)?;
                let angles = if self.config.angle_squash {
                    let t = g.tanh(z);
                    g.scale(t, PI)
                } else {
                    z
                };
                let theta_v = bound.get(q.theta);
                let embed = g.data(angles).data().to_vec();
                let theta = self.store.value(q.theta).data();
                let out = Tensor::vector(run_circuit(&q.layout, &embed, theta)?);
                let expvals = match mode {
                    GradMode::Inference => g.constant(out),
                    GradMode::Gradient => {
                        let trainable = self.store.get(q.theta).trainable;
                        let recipe = ShiftRecipe {
                            include_theta: trainable,
                            ..ShiftRecipe::default()
                        };
                        let jac = param_shift_grad_with(&q.layout, &embed, theta, &recipe)?;
                        let nq = q.layout.n_qubits();
                        let d_embed = Tensor::matrix(nq, jac.n_embed, jac.embed);
                        let d_theta = match jac.theta {
                            Some(t) => Tensor::matrix(nq, jac.n_train, t),
                            None => Tensor::zeros(&[nq, jac.n_train]),
                        };
                        g.external(&[angles, theta_v], out, vec![d_embed, d_theta])?
                    }
                };
                Ok(Trace {
                    logits: q.fc_out.apply(g, bound, expvals)?,
                    angles: Some(angles),
                    expvals: Some(expvals),
                })
            }
        }
    }

    pub fn logits(&self, sample: &Tensor) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let bound = self.store.bind(&mut g);
        let t = self.forward(&mut g, &bound, sample, GradMode::Inference)?;
        Ok(g.data(t.logits).data().to_vec())
    }

    /// Embedding angles and per-wire expectations of a quantum variant.
    pub fn quantum_features(&self, sample: &Tensor) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let mut g = Graph::new();
        let bound = self.store.bind(&mut g);
        let t = self.forward(&mut g, &bound, sample, GradMode::Inference)?;
        Ok(match (t.angles, t.expvals) {
            (Some(a), Some(e)) => Some((g.data(a).data().to_vec(), g.data(e).data().to_vec())),
            _ => None,
        })
    }

    pub fn probabilities(&self, sample: &Tensor) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(sample)?))
    }

    pub fn predict(&self, sample: &Tensor) -> Result<usize> {
        Ok(argmax(&self.logits(sample)?))
    }

    /// Cross-entropy loss and logits of one sample without gradients.
    pub fn loss(&self, sample: &Tensor, label: usize) -> Result<(f64, Vec<f64>)> {
        let mut g = Graph::new();
        let bound = self.store.bind(&mut g);
        let t = self.forward(&mut g, &bound, sample, GradMode::Inference)?;
        let loss = g.softmax_cross_entropy(t.logits, label)?;
        Ok((g.data(loss).item(), g.data(t.logits).data().to_vec()))
    }

    /// Back-propagates `loss` (a node of `g`, which must hold this model's
    /// forward pass) and returns the parameter gradients.
    pub fn backward(&self, g: &mut Graph<'_>, bound: &Bound, loss: Value) -> Result<Gradients> {
        if loss.index() >= g.len() || g.len() <= self.store.len() {
            return Err(ModelError::BackwardWithoutForward);
        }
        g.backward(loss)?;
        Ok(self.store.collect_grads(g, bound))
    }

    pub fn loss_and_grads(&self, sample: &Tensor, label: usize) -> Result<(f64, Gradients)> {
        let mut g = Graph::new();
        let bound = self.store.bind(&mut g);
        let t = self.forward(&mut g, &bound, sample, GradMode::Gradient)?;
        let loss = g.softmax_cross_entropy(t.logits, label)?;
        let value = g.data(loss).item();
        Ok((value, self.backward(&mut g, &bound, loss)?))
    }

    /// Mean loss and mean gradient over a batch. Per-sample gradients may be
    /// computed in parallel; they are summed in batch order so the result
    /// does not depend on scheduling.
    pub fn batch_loss_and_grads(&self, batch: &[(&Tensor, usize)], exec: Execution) -> Result<(f64, Gradients)> {
        let per: Vec<Result<(f64, Gradients)>> =
            par::map(exec, batch, |&(x, y)| self.loss_and_grads(x, y));
        let mut total = Gradients::zeros_like(&self.store);
        let mut loss = 0.0;
        for r in per {
            let (l, gr) = r?;
            loss += l;
            total.add_assign(&gr);
        }
        let n = batch.len().max(1) as f64;
        total.scale(1.0 / n);
        Ok((loss / n, total))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.config;
        let mut meta = vec![
            ("kind".to_string(), c.kind.slug().to_string()),
            ("hidden_size".to_string(), c.hidden_size.to_string()),
            ("n_qubits".to_string(), c.n_qubits.to_string()),
            ("n_classes".to_string(), c.n_classes.to_string()),
            ("angle_squash".to_string(), c.angle_squash.to_string()),
            ("hea_layers".to_string(), c.hea_layers.to_string()),
            ("seed".to_string(), c.seed.to_string()),
        ];
        if let Some(layout) = self.layout() {
            let dump: Vec<String> = layout.to_string().lines().map(str::to_string).collect();
            meta.push(("layout".to_string(), dump.join("; ")));
        }
        Checkpoint {
            meta,
            tensors: self.store.snapshot(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        fn field<T: std::str::FromStr>(ck: &Checkpoint, key: &str) -> Result<T> {
            ck.meta(key)
                .ok_or_else(|| ModelError::Checkpoint(format!("missing meta `{key}`")))?
                .parse()
                .map_err(|_| ModelError::Checkpoint(format!("bad meta `{key}`")))
        }
        let config = ModelConfig {
            kind: field(ck, "kind")?,
            hidden_size: field(ck, "hidden_size")?,
            n_qubits: field(ck, "n_qubits")?,
            n_classes: field(ck, "n_classes")?,
            angle_squash: field(ck, "angle_squash")?,
            hea_layers: field(ck, "hea_layers")?,
            seed: field(ck, "seed")?,
        };
        let mut model = Self::new(config)?;
        model.store.load_snapshot(&ck.tensors)?;
        Ok(model)
    }
}
