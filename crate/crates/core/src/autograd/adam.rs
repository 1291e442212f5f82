use super::params::ParamStore;
use super::{AutogradError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with per-parameter first and second moments.
/// Parameters marked non-trainable are never touched.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store
            .params()
            .iter()
            .map(|p| vec![0.0; p.value.len()])
            .collect();
        Self {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update from the store's gradients, then zeroes them.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        if !store.grads_ready() {
            return Err(AutogradError::MissingGradients);
        }
        if self.m.len() != store.len() {
            return Err(AutogradError::GradientLayout);
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        {
            let (grads, params) = store.grads_and_params_mut();
            for (k, p) in params.iter_mut().enumerate() {
                if !p.trainable {
                    continue;
                }
                let (m, v) = (&mut self.m[k], &mut self.v[k]);
                for (((x, g), m), v) in p
                    .value
                    .data_mut()
                    .iter_mut()
                    .zip(&grads[k])
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *x -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        store.zero_grads();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::{Gradients, Tensor};

    fn store_with(x: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("p", Tensor::vector(vec![x, -x]), true);
        s
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut store = store_with(1.0);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        store.set_grads(Gradients(vec![vec![0.37, -2.5]])).unwrap();
        adam.step(&mut store).unwrap();
        let lr = 1e-3;
        let d = store.params()[0].value.data();
        assert!((d[0] - (1.0 - lr)).abs() < lr * 1e-6);
        assert!((d[1] - (-1.0 + lr)).abs() < lr * 1e-6);
        assert_eq!(adam.steps(), 1);
        assert!(!store.grads_ready());
        assert_eq!(store.grad(store.find("p").unwrap()), &[0.0, 0.0]);
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut store = store_with(0.25);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        for _ in 0..5 {
            store.set_grads(Gradients(vec![vec![0.0, 0.0]])).unwrap();
            adam.step(&mut store).unwrap();
        }
        assert_eq!(store.params()[0].value.data(), &[0.25, -0.25]);
    }

    #[test]
    fn constant_gradient_step_bound() {
        let mut store = store_with(0.0);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        let lr = adam.config.lr;
        let mut prev = store.params()[0].value.data().to_vec();
        for _ in 0..2 {
            store.set_grads(Gradients(vec![vec![3.0, -0.01]])).unwrap();
            adam.step(&mut store).unwrap();
            let now = store.params()[0].value.data().to_vec();
            for (a, b) in now.iter().zip(&prev) {
                assert!((a - b).abs() <= lr * (1.0 + 1e-6));
            }
            prev = now;
        }
    }

    #[test]
    fn missing_gradients_and_frozen() {
        let mut store = store_with(1.0);
        store.add("frozen", Tensor::vector(vec![0.5]), false);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        assert_eq!(adam.step(&mut store), Err(AutogradError::MissingGradients));
        store
            .set_grads(Gradients(vec![vec![1.0, 1.0], vec![123.0]]))
            .unwrap();
        adam.step(&mut store).unwrap();
        assert_eq!(store.params()[1].value.data(), &[0.5]);
    }
}
