//! Optimizers: Adam with bias correction, and SGD with momentum.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// A named trainable tensor. Names must be unique within one collection;
/// they key optimizer slots and checkpoint entries.
#[derive(Clone, Debug)]
pub struct Parameter<S: Scalar> {
    pub name: String,
    pub value: Tensor<S>,
}

impl<S: Scalar> Parameter<S> {
    pub fn new(name: impl Into<String>, value: Tensor<S>) -> Self {
        Parameter {
            name: name.into(),
            value,
        }
    }
}

/// Adam optimizer state: per-parameter first and second moments plus the
/// shared step counter.
pub struct Adam<S: Scalar> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled (AdamW-style) L2 decay applied directly to the weights,
    /// outside the moment estimates. Zero disables it.
    pub weight_decay: f64,
    step: u64,
    moments: HashMap<String, (Vec<S>, Vec<S>)>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            step: 0,
            moments: HashMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over `params`. Every parameter must carry a gradient;
    /// gradients are cleared afterwards.
    pub fn step(&mut self, params: &[Parameter<S>]) -> Result<()> {
        for p in params {
            if p.value.grad().is_none() {
                return Err(Error::Precondition(format!(
                    "parameter '{}' has no gradient",
                    p.name
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let b1 = S::from_f64(self.beta1);
        let b2 = S::from_f64(self.beta2);
        let lr = S::from_f64(self.learning_rate);
        let eps = S::from_f64(self.epsilon);
        let c1 = S::from_f64(1.0 - self.beta1.powi(t));
        let c2 = S::from_f64(1.0 - self.beta2.powi(t));
        let one = S::one();
        let decay = S::from_f64(self.learning_rate * self.weight_decay);
        for p in params {
            let g = p.value.grad().unwrap();
            let n = g.len();
            let (m, v) = self
                .moments
                .entry(p.name.clone())
                .or_insert_with(|| (vec![S::zero(); n], vec![S::zero(); n]));
            let mut data = p.value.to_vec();
            for i in 0..n {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                data[i] = data[i] - lr * m_hat / (v_hat.sqrt() + eps) - decay * data[i];
            }
            p.value.set_data(data)?;
            p.value.zero_grad();
        }
        Ok(())
    }
}

/// Stochastic gradient descent with classical momentum and optional
/// decoupled weight decay.
pub struct Sgd<S: Scalar> {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: HashMap<String, Vec<S>>,
}

impl<S: Scalar> Sgd<S> {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Sgd {
            learning_rate,
            momentum,
            weight_decay: 0.0,
            velocity: HashMap::new(),
        }
    }

    /// One update over `params`. Every parameter must carry a gradient;
    /// gradients are cleared afterwards.
    pub fn step(&mut self, params: &[Parameter<S>]) -> Result<()> {
        for p in params {
            if p.value.grad().is_none() {
                return Err(Error::Precondition(format!(
                    "parameter '{}' has no gradient",
                    p.name
                )));
            }
        }
        let lr = S::from_f64(self.learning_rate);
        let mu = S::from_f64(self.momentum);
        let decay = S::from_f64(self.learning_rate * self.weight_decay);
        for p in params {
            let g = p.value.grad().unwrap();
            let n = g.len();
            let v = self
                .velocity
                .entry(p.name.clone())
                .or_insert_with(|| vec![S::zero(); n]);
            let mut data = p.value.to_vec();
            for i in 0..n {
                v[i] = mu * v[i] + g[i];
                data[i] = data[i] - lr * v[i] - decay * data[i];
            }
            p.value.set_data(data)?;
            p.value.zero_grad();
        }
        Ok(())
    }
}
