use rand::Rng;

use super::graph::{Graph, Value};
use super::params::{Bound, ParamId, ParamStore};
use super::tensor::Tensor;
use super::{AutogradError, Result};

/// Stored weights of one LSTM cell. Gate rows are stacked in the order
/// input, forget, candidate, output: `w` is `4H × input`, `u` is `4H × H`,
/// `b` has length `4H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmLayer {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
}

impl LstmLayer {
    /// Weights uniform in ±1/√fan_in, biases zero except the forget gate (1).
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut R,
    ) -> Self {
        let h4 = 4 * hidden_size;
        let w = store.add_uniform(
            format!("{name}.w"),
            &[h4, input_size],
            1.0 / (input_size as f64).sqrt(),
            rng,
        );
        let u = store.add_uniform(
            format!("{name}.u"),
            &[h4, hidden_size],
            1.0 / (hidden_size as f64).sqrt(),
            rng,
        );
        let mut bias = vec![0.0; h4];
        bias[hidden_size..2 * hidden_size].fill(1.0);
        let b = store.add(format!("{name}.b"), Tensor::vector(bias), true);
        Self {
            input_size,
            hidden_size,
            w,
            u,
            b,
        }
    }

    pub fn bind(&self, bound: &Bound) -> LstmParams {
        LstmParams {
            input_size: self.input_size,
            hidden_size: self.hidden_size,
            w: bound.get(self.w),
            u: bound.get(self.u),
            b: bound.get(self.b),
        }
    }
}

/// LSTM weights as graph values.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w: Value,
    pub u: Value,
    pub b: Value,
}

/// One LSTM step:
///
/// ```text
/// z  = W x + U h + b
/// i, f, o = σ(z_i), σ(z_f), σ(z_o);   g = tanh(z_g)
/// c' = f ⊙ c + i ⊙ g
/// h' = o ⊙ tanh(c')
/// ```
pub fn lstm_cell(
    g: &mut Graph<'_>,
    x: Value,
    h: Value,
    c: Value,
    p: &LstmParams,
) -> Result<(Value, Value)> {
    let hs = p.hidden_size;
    for (v, n, what) in [(x, p.input_size, "x"), (h, hs, "h"), (c, hs, "c")] {
        if g.data(v).shape() != [n] {
            return Err(AutogradError::ShapeMismatch {
                op: match what {
                    "x" => "lstm_cell(x)",
                    "h" => "lstm_cell(h)",
                    _ => "lstm_cell(c)",
                },
                left: g.data(v).shape().to_vec(),
                right: vec![n],
            });
        }
    }
    let wx = g.matmul(p.w, x)?;
    let uh = g.matmul(p.u, h)?;
    let z = g.add(wx, uh)?;
    let z = g.add(z, p.b)?;
    let zi = g.slice(z, 0, hs)?;
    let zf = g.slice(z, hs, hs)?;
    let zg = g.slice(z, 2 * hs, hs)?;
    let zo = g.slice(z, 3 * hs, hs)?;
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_next = g.add(keep, write)?;
    let squashed = g.tanh(c_next);
    let h_next = g.mul(o, squashed)?;
    Ok((h_next, c_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_layer(store: &mut ParamStore, input: usize, hidden: usize, forget: f64) -> LstmLayer {
        let w = store.add("w", Tensor::zeros(&[4 * hidden, input]), true);
        let u = store.add("u", Tensor::zeros(&[4 * hidden, hidden]), true);
        let mut b = vec![0.0; 4 * hidden];
        b[hidden..2 * hidden].fill(forget);
        let b = store.add("b", Tensor::vector(b), true);
        LstmLayer {
            input_size: input,
            hidden_size: hidden,
            w,
            u,
            b,
        }
    }

    #[test]
    fn zero_weights_zero_state() {
        let mut store = ParamStore::new();
        let layer = zero_layer(&mut store, 3, 4, 0.0);
        let mut g = Graph::new();
        let bound = store.bind(&mut g);
        let p = layer.bind(&bound);
        let x = g.constant(Tensor::vector(vec![0.5, -1.0, 2.0]));
        let h = g.constant(Tensor::zeros(&[4]));
        let c = g.constant(Tensor::zeros(&[4]));
        let (h1, c1) = lstm_cell(&mut g, x, h, c, &p).unwrap();
        assert_eq!(g.data(h1).data(), &[0.0; 4]);
        assert_eq!(g.data(c1).data(), &[0.0; 4]);
    }

    #[test]
    fn large_forget_bias_retains_memory() {
        let mut store = ParamStore::new();
        let layer = zero_layer(&mut store, 2, 3, 10.0);
        let mut g = Graph::new();
        let bound = store.bind(&mut g);
        let p = layer.bind(&bound);
        let v = [0.7, -0.3, 1.2];
        let x = g.constant(Tensor::vector(vec![1.0, 1.0]));
        let h = g.constant(Tensor::zeros(&[3]));
        let c = g.constant(Tensor::vector(v.to_vec()));
        let (_, c1) = lstm_cell(&mut g, x, h, c, &p).unwrap();
        for (a, b) in g.data(c1).data().iter().zip(v) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn init_sets_forget_bias() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = LstmLayer::init(&mut store, "l", 10, 8, &mut rng);
        let b = store.value(layer.b).data();
        assert!(b[..8].iter().all(|&x| x == 0.0));
        assert!(b[8..16].iter().all(|&x| x == 1.0));
        assert!(b[16..].iter().all(|&x| x == 0.0));
        let a = 1.0 / 10f64.sqrt();
        assert!(store.value(layer.w).data().iter().all(|x| x.abs() < a));
        assert_eq!(store.value(layer.u).shape(), &[32, 8]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut store = ParamStore::new();
        let layer = zero_layer(&mut store, 2, 3, 0.0);
        let mut g = Graph::new();
        let bound = store.bind(&mut g);
        let p = layer.bind(&bound);
        let x = g.constant(Tensor::zeros(&[5]));
        let h = g.constant(Tensor::zeros(&[3]));
        let err = lstm_cell(&mut g, x, h, h, &p).unwrap_err();
        assert!(matches!(err, AutogradError::ShapeMismatch { op: "lstm_cell(x)", .. }));
    }
}
