use std::borrow::Cow;

use super::tensor::Tensor;
use super::{AutogradError, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Value(usize);

impl Value {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Value, Value),
    Mul(Value, Value),
    Scale(Value, f64),
    MatMul(Value, Value),
    Tanh(Value),
    Sigmoid(Value),
    Relu(Value),
    Concat(Vec<Value>),
    Slice { input: Value, offset: usize },
    Sum(Value),
    MaxPool { input: Value, argmax: Vec<usize> },
    SoftmaxXent { logits: Value, label: usize, probs: Vec<f64> },
    External { inputs: Vec<Value>, jacobians: Vec<Tensor> },
}

/// Append-only tape of tensor operations.
///
/// Nodes are created in evaluation order, so node indices are already a
/// topological order and [`Graph::backward`] simply walks them in reverse.
/// Leaves may borrow their data, which lets a model bind its parameters
/// without copying.
#[derive(Debug, Default)]
pub struct Graph<'a> {
    values: Vec<Cow<'a, Tensor>>,
    grads: Vec<Option<Vec<f64>>>,
    ops: Vec<Op>,
    requires: Vec<bool>,
}

fn shape_err(op: &'static str, left: &Tensor, right: &Tensor) -> AutogradError {
    AutogradError::ShapeMismatch {
        op,
        left: left.shape().to_vec(),
        right: right.shape().to_vec(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires: bool) -> Value {
        self.push_cow(Cow::Owned(value), op, requires)
    }

    fn push_cow(&mut self, value: Cow<'a, Tensor>, op: Op, requires: bool) -> Value {
        self.values.push(value);
        self.grads.push(None);
        self.ops.push(op);
        self.requires.push(requires);
        Value(self.values.len() - 1)
    }

    /// Leaf node that receives gradients.
    pub fn param(&mut self, t: Tensor) -> Value {
        self.push(t, Op::Leaf, true)
    }

    /// Leaf node that is not differentiated.
    pub fn constant(&mut self, t: Tensor) -> Value {
        self.push(t, Op::Leaf, false)
    }

    /// Leaf over borrowed data.
    pub fn leaf_ref(&mut self, t: &'a Tensor, requires_grad: bool) -> Value {
        self.push_cow(Cow::Borrowed(t), Op::Leaf, requires_grad)
    }

    pub fn data(&self, v: Value) -> &Tensor {
        &self.values[v.0]
    }

    pub fn requires_grad(&self, v: Value) -> bool {
        self.requires[v.0]
    }

    /// Accumulated gradient, zeros if nothing has flowed into `v`.
    pub fn grad(&self, v: Value) -> Tensor {
        let shape = self.values[v.0].shape().to_vec();
        match &self.grads[v.0] {
            Some(g) => Tensor::new(shape, g.clone()),
            None => Tensor::zeros(&shape),
        }
    }

    pub(crate) fn grad_slice(&self, v: Value) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
    }

    fn req(&self, vs: &[Value]) -> bool {
        vs.iter().any(|v| self.requires[v.0])
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value> {
        let (x, y) = (self.data(a), self.data(b));
        if x.shape() != y.shape() {
            return Err(shape_err("add", x, y));
        }
        let out: Vec<f64> = x.data().iter().zip(y.data()).map(|(p, q)| p + q).collect();
        let out = Tensor::new(x.shape().to_vec(), out);
        let r = self.req(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), r))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Value, b: Value) -> Result<Value> {
        let (x, y) = (self.data(a), self.data(b));
        if x.shape() != y.shape() {
            return Err(shape_err("mul", x, y));
        }
        let out: Vec<f64> = x.data().iter().zip(y.data()).map(|(p, q)| p * q).collect();
        let out = Tensor::new(x.shape().to_vec(), out);
        let r = self.req(&[a, b]);
        Ok(self.push(out, Op::Mul(a, b), r))
    }

    pub fn scale(&mut self, a: Value, c: f64) -> Value {
        let x = self.data(a);
        let out = Tensor::new(x.shape().to_vec(), x.data().iter().map(|p| p * c).collect());
        let r = self.req(&[a]);
        self.push(out, Op::Scale(a, c), r)
    }

    /// `(m×k)·(k) → (m)` or `(m×k)·(k×n) → (m×n)`.
    pub fn matmul(&mut self, a: Value, b: Value) -> Result<Value> {
        let (x, y) = (self.data(a), self.data(b));
        if x.rank() != 2 || !(y.rank() == 1 || y.rank() == 2) || x.shape()[1] != y.shape()[0] {
            return Err(shape_err("matmul", x, y));
        }
        let (m, k) = (x.shape()[0], x.shape()[1]);
        let out = if y.rank() == 1 {
            let v = y.data();
            let data = (0..m)
                .map(|i| dot(&x.data()[i * k..(i + 1) * k], v))
                .collect();
            Tensor::vector(data)
        } else {
            let n = y.shape()[1];
            let mut data = vec![0.0; m * n];
            for i in 0..m {
                let out_row = &mut data[i * n..(i + 1) * n];
                for p in 0..k {
                    let s = x.data()[i * k + p];
                    if s == 0.0 {
                        continue;
                    }
                    axpy(s, &y.data()[p * n..(p + 1) * n], out_row);
                }
            }
            Tensor::matrix(m, n, data)
        };
        let r = self.req(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), r))
    }

    fn unary(&mut self, a: Value, f: impl Fn(f64) -> f64, op: Op) -> Value {
        let x = self.data(a);
        let out = Tensor::new(x.shape().to_vec(), x.data().iter().map(|&p| f(p)).collect());
        let r = self.req(&[a]);
        self.push(out, op, r)
    }

    pub fn tanh(&mut self, a: Value) -> Value {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Value) -> Value {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Value) -> Value {
        self.unary(a, |p| p.max(0.0), Op::Relu(a))
    }

    /// Concatenation along the leading axis.
    pub fn concat(&mut self, parts: &[Value]) -> Result<Value> {
        let first = self.data(*parts.first().ok_or(AutogradError::EmptyInput("concat"))?);
        if first.rank() == 0 {
            return Err(shape_err("concat", first, first));
        }
        let tail = first.shape()[1..].to_vec();
        let mut lead = 0;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.data(p);
            if t.rank() == 0 || t.shape()[1..] != tail[..] {
                return Err(shape_err("concat", first, t));
            }
            lead += t.shape()[0];
            data.extend_from_slice(t.data());
        }
        let mut shape = vec![lead];
        shape.extend_from_slice(&tail);
        let r = self.req(parts);
        Ok(self.push(Tensor::new(shape, data), Op::Concat(parts.to_vec()), r))
    }

    /// Rows `start..start + len` along the leading axis.
    pub fn slice(&mut self, a: Value, start: usize, len: usize) -> Result<Value> {
        let x = self.data(a);
        if x.rank() == 0 || start + len > x.shape()[0] {
            return Err(AutogradError::SliceOutOfRange {
                start,
                len,
                shape: x.shape().to_vec(),
            });
        }
        let row: usize = x.shape()[1..].iter().product();
        let mut shape = x.shape().to_vec();
        shape[0] = len;
        let offset = start * row;
        let out = Tensor::new(shape, x.data()[offset..offset + len * row].to_vec());
        let r = self.req(&[a]);
        Ok(self.push(out, Op::Slice { input: a, offset }, r))
    }

    pub fn sum(&mut self, a: Value) -> Value {
        let s = self.data(a).data().iter().sum();
        let r = self.req(&[a]);
        self.push(Tensor::scalar(s), Op::Sum(a), r)
    }

    /// Window-2, stride-2 max-pool over a vector; an odd trailing element
    /// passes through. Ties go to the first index.
    pub fn max_pool_1d(&mut self, a: Value) -> Result<Value> {
        let x = self.data(a);
        if x.rank() != 1 {
            return Err(AutogradError::ShapeMismatch {
                op: "max_pool_1d",
                left: x.shape().to_vec(),
                right: vec![],
            });
        }
        if x.is_empty() {
            return Err(AutogradError::EmptyInput("max_pool_1d"));
        }
        let d = x.data();
        let argmax: Vec<usize> = (0..d.len().div_ceil(2))
            .map(|j| {
                let i = 2 * j;
                if i + 1 < d.len() && d[i + 1] > d[i] {
                    i + 1
                } else {
                    i
                }
            })
            .collect();
        let out = Tensor::vector(argmax.iter().map(|&i| d[i]).collect());
        let r = self.req(&[a]);
        Ok(self.push(out, Op::MaxPool { input: a, argmax }, r))
    }

    /// `−log softmax(logits)[label]` via log-sum-exp.
    pub fn softmax_cross_entropy(&mut self, logits: Value, label: usize) -> Result<Value> {
        let x = self.data(logits);
        if x.rank() != 1 || x.is_empty() {
            return Err(AutogradError::ShapeMismatch {
                op: "softmax_cross_entropy",
                left: x.shape().to_vec(),
                right: vec![],
            });
        }
        if label >= x.len() {
            return Err(AutogradError::LabelOutOfRange {
                label,
                n_classes: x.len(),
            });
        }
        let probs = softmax(x.data());
        let m = x.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + x.data().iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let loss = lse - x.data()[label];
        let r = self.req(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxXent {
                logits,
                label,
                probs,
            },
            r,
        ))
    }

    /// Node computed outside the tape. `output` is its forward value and
    /// `jacobians[k]` is `∂output/∂inputs[k]` as an `out_len × in_len`
    /// matrix; backward applies the vector-Jacobian product.
    pub fn external(
        &mut self,
        inputs: &[Value],
        output: Tensor,
        jacobians: Vec<Tensor>,
    ) -> Result<Value> {
        if jacobians.len() != inputs.len() {
            return Err(AutogradError::JacobianCount {
                inputs: inputs.len(),
                jacobians: jacobians.len(),
            });
        }
        for (&v, j) in inputs.iter().zip(&jacobians) {
            let x = self.data(v);
            if j.shape() != [output.len(), x.len()] {
                return Err(shape_err("external", j, x));
            }
        }
        let r = self.req(inputs);
        Ok(self.push(
            output,
            Op::External {
                inputs: inputs.to_vec(),
                jacobians,
            },
            r,
        ))
    }

    /// Back-propagates from a scalar node with seed 1.
    pub fn backward(&mut self, root: Value) -> Result<()> {
        let t = self.data(root);
        if t.len() != 1 {
            return Err(AutogradError::NotScalar(t.shape().to_vec()));
        }
        self.backward_with_seed(root, &[1.0])
    }

    /// Back-propagates `seed` (same shape as `root`) into every ancestor.
    /// Gradients accumulate across calls until [`Graph::zero_grad`].
    pub fn backward_with_seed(&mut self, root: Value, seed: &[f64]) -> Result<()> {
        if seed.len() != self.values[root.0].len() {
            return Err(AutogradError::ShapeMismatch {
                op: "backward",
                left: self.values[root.0].shape().to_vec(),
                right: vec![seed.len()],
            });
        }
        if !self.requires[root.0] {
            return Ok(());
        }
        let Graph {
            values,
            grads,
            ops,
            requires,
        } = self;
        accumulate(grads, requires, values, root, |g| {
            g.iter_mut().zip(seed).for_each(|(a, b)| *a += b)
        });

        for i in (0..=root.0).rev() {
            if !requires[i] {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            match &ops[i] {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        accumulate(grads, requires, values, v, |d| add_into(d, &g));
                    }
                }
                Op::Mul(a, b) => {
                    let (xa, xb) = (values[a.0].data(), values[b.0].data());
                    accumulate(grads, requires, values, *a, |d| {
                        for ((d, g), y) in d.iter_mut().zip(&g).zip(xb) {
                            *d += g * y;
                        }
                    });
                    accumulate(grads, requires, values, *b, |d| {
                        for ((d, g), x) in d.iter_mut().zip(&g).zip(xa) {
                            *d += g * x;
                        }
                    });
                }
                Op::Scale(a, c) => {
                    accumulate(grads, requires, values, *a, |d| axpy(*c, &g, d));
                }
                Op::MatMul(a, b) => {
                    let (x, y) = (&values[a.0], &values[b.0]);
                    let (m, k) = (x.shape()[0], x.shape()[1]);
                    if y.rank() == 1 {
                        accumulate(grads, requires, values, *a, |d| {
                            for i in 0..m {
                                axpy(g[i], y.data(), &mut d[i * k..(i + 1) * k]);
                            }
                        });
                        accumulate(grads, requires, values, *b, |d| {
                            for i in 0..m {
                                axpy(g[i], &x.data()[i * k..(i + 1) * k], d);
                            }
                        });
                    } else {
                        let n = y.shape()[1];
                        // dA = G·Bᵀ
                        accumulate(grads, requires, values, *a, |d| {
                            for i in 0..m {
                                let grow = &g[i * n..(i + 1) * n];
                                for p in 0..k {
                                    d[i * k + p] += dot(grow, &y.data()[p * n..(p + 1) * n]);
                                }
                            }
                        });
                        // dB = Aᵀ·G
                        accumulate(grads, requires, values, *b, |d| {
                            for i in 0..m {
                                let grow = &g[i * n..(i + 1) * n];
                                for p in 0..k {
                                    axpy(x.data()[i * k + p], grow, &mut d[p * n..(p + 1) * n]);
                                }
                            }
                        });
                    }
                }
                Op::Tanh(a) => {
                    let out = values[i].data();
                    accumulate(grads, requires, values, *a, |d| {
                        for ((d, g), y) in d.iter_mut().zip(&g).zip(out) {
                            *d += g * (1.0 - y * y);
                        }
                    });
                }
                Op::Sigmoid(a) => {
                    let out = values[i].data();
                    accumulate(grads, requires, values, *a, |d| {
                        for ((d, g), y) in d.iter_mut().zip(&g).zip(out) {
                            *d += g * y * (1.0 - y);
                        }
                    });
                }
                Op::Relu(a) => {
                    let x = values[a.0].data();
                    accumulate(grads, requires, values, *a, |d| {
                        for ((d, g), x) in d.iter_mut().zip(&g).zip(x) {
                            if *x > 0.0 {
                                *d += g;
                            }
                        }
                    });
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = values[p.0].len();
                        accumulate(grads, requires, values, p, |d| {
                            add_into(d, &g[offset..offset + n])
                        });
                        offset += n;
                    }
                }
                Op::Slice { input, offset } => {
                    accumulate(grads, requires, values, *input, |d| {
                        add_into(&mut d[*offset..offset + g.len()], &g)
                    });
                }
                Op::Sum(a) => {
                    accumulate(grads, requires, values, *a, |d| {
                        d.iter_mut().for_each(|d| *d += g[0])
                    });
                }
                Op::MaxPool { input, argmax } => {
                    accumulate(grads, requires, values, *input, |d| {
                        for (j, &src) in argmax.iter().enumerate() {
                            d[src] += g[j];
                        }
                    });
                }
                Op::SoftmaxXent {
                    logits,
                    label,
                    probs,
                } => {
                    accumulate(grads, requires, values, *logits, |d| {
                        for (c, (d, p)) in d.iter_mut().zip(probs).enumerate() {
                            let onehot = if c == *label { 1.0 } else { 0.0 };
                            *d += g[0] * (p - onehot);
                        }
                    });
                }
                Op::External { inputs, jacobians } => {
                    for (&v, jac) in inputs.iter().zip(jacobians) {
                        let cols = jac.shape()[1];
                        accumulate(grads, requires, values, v, |d| {
                            for (r, gr) in g.iter().enumerate() {
                                axpy(*gr, &jac.data()[r * cols..(r + 1) * cols], d);
                            }
                        });
                    }
                }
            }
            grads[i] = Some(g);
        }
        Ok(())
    }
}

fn accumulate(
    grads: &mut [Option<Vec<f64>>],
    requires: &[bool],
    values: &[Cow<'_, Tensor>],
    v: Value,
    f: impl FnOnce(&mut [f64]),
) {
    if !requires[v.0] {
        return;
    }
    let g = grads[v.0].get_or_insert_with(|| vec![0.0; values[v.0].len()]);
    f(g);
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_matmul_product_rule() {
        let mut g = Graph::new();
        let a = g.param(Tensor::matrix(1, 1, vec![2.0]));
        let b = g.param(Tensor::vector(vec![3.0]));
        let y = g.matmul(a, b).unwrap();
        assert_eq!(g.data(y).data(), &[6.0]);
        g.backward_with_seed(y, &[1.0]).unwrap();
        assert_eq!(g.grad(a).data(), &[3.0]);
        assert_eq!(g.grad(b).data(), &[2.0]);
    }

    #[test]
    fn tanh_at_zero() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![0.0]));
        let y = g.tanh(x);
        assert_eq!(g.data(y).data(), &[0.0]);
        g.backward_with_seed(y, &[1.0]).unwrap();
        assert_eq!(g.grad(x).data(), &[1.0]);
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let mut g = Graph::new();
        let a = g.param(Tensor::vector(vec![1.0, 2.0]));
        let b = g.param(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let err = g.add(a, b).unwrap_err();
        assert_eq!(
            err,
            AutogradError::ShapeMismatch {
                op: "add",
                left: vec![2],
                right: vec![3]
            }
        );
        assert!(err.to_string().contains("[2]") && err.to_string().contains("[3]"));
        let m = g.param(Tensor::matrix(2, 2, vec![0.0; 4]));
        assert!(g.matmul(m, b).is_err());
        assert!(g.slice(a, 1, 2).is_err());
    }

    #[test]
    fn sum_gradient_is_all_ones() {
        let mut g = Graph::new();
        let x = g.param(Tensor::matrix(2, 3, vec![0.3, -1.0, 2.0, 5.0, 0.0, 1e9]));
        let s = g.sum(x);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).data(), &[1.0; 6]);
    }

    #[test]
    fn max_pool_examples() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0]));
        let y = g.max_pool_1d(x).unwrap();
        assert_eq!(g.data(y).data(), &[3.0, 4.0, 9.0]);
        let lone = g.param(Tensor::vector(vec![7.0]));
        let y1 = g.max_pool_1d(lone).unwrap();
        assert_eq!(g.data(y1).data(), &[7.0]);
        let odd = g.param(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let yo = g.max_pool_1d(odd).unwrap();
        assert_eq!(g.data(yo).data(), &[2.0, 3.0]);

        let tie = g.param(Tensor::vector(vec![2.0, 2.0]));
        let yt = g.max_pool_1d(tie).unwrap();
        g.backward_with_seed(yt, &[1.0]).unwrap();
        assert_eq!(g.grad(tie).data(), &[1.0, 0.0]);
    }

    #[test]
    fn cross_entropy_examples() {
        let mut g = Graph::new();
        let z = g.param(Tensor::vector(vec![0.0, 0.0, 0.0]));
        for label in 0..3 {
            let l = g.softmax_cross_entropy(z, label).unwrap();
            assert!((g.data(l).item() - 3f64.ln()).abs() < 1e-15);
        }
        let big = g.param(Tensor::vector(vec![100.0, 0.0, 0.0]));
        let l = g.softmax_cross_entropy(big, 0).unwrap();
        assert!(g.data(l).item() < 1e-10);
        assert_eq!(
            g.softmax_cross_entropy(big, 3).unwrap_err(),
            AutogradError::LabelOutOfRange {
                label: 3,
                n_classes: 3
            }
        );
        g.backward(l).unwrap();
        let p = softmax(&[100.0, 0.0, 0.0]);
        let grad = g.grad(big);
        assert!((grad.data()[0] - (p[0] - 1.0)).abs() < 1e-15);
        assert!((grad.data()[1] - p[1]).abs() < 1e-15);
    }

    #[test]
    fn fan_out_sums() {
        // y = x*x + 3x → dy/dx = 2x + 3
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.5]));
        let sq = g.mul(x, x).unwrap();
        let lin = g.scale(x, 3.0);
        let y = g.add(sq, lin).unwrap();
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).data(), &[6.0]);
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let c = g.constant(Tensor::vector(vec![1.0, 2.0]));
        let p = g.param(Tensor::vector(vec![3.0, 4.0]));
        let y = g.mul(c, p).unwrap();
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert!(g.grad_slice(c).is_none());
        assert_eq!(g.grad(p).data(), &[1.0, 2.0]);
        assert!(matches!(g.backward(y), Err(AutogradError::NotScalar(_))));
    }

    #[test]
    fn external_node_applies_vjp() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0]));
        // f(x) = (x0 + 2 x1, 3 x0)
        let jac = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 0.0]);
        let y = g
            .external(&[x], Tensor::vector(vec![5.0, 3.0]), vec![jac])
            .unwrap();
        g.backward_with_seed(y, &[1.0, 10.0]).unwrap();
        assert_eq!(g.grad(x).data(), &[31.0, 2.0]);
        assert!(g
            .external(&[x], Tensor::vector(vec![0.0]), vec![Tensor::zeros(&[2, 2])])
            .is_err());
    }
}
