//! Adam with optional decoupled weight decay.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Per-parameter first/second moments, keyed by tensor name.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub step: u64,
    moments: BTreeMap<String, (Tensor, Tensor)>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig) -> Self {
        AdamState {
            cfg,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    /// One bias-corrected update over the given (name, parameter) pairs.
    /// Decoupled weight decay shrinks parameters before the moment update.
    /// Missing gradients leave the corresponding parameter untouched.
    pub fn step(
        &mut self,
        params: &mut [(String, &mut Tensor)],
        grads: &BTreeMap<String, Tensor>,
    ) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (name, param) in params.iter_mut() {
            let Some(grad) = grads.get(name) else {
                continue;
            };
            if grad.data().iter().any(|g| !g.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient for parameter {name}"
                )));
            }
            if grad.shape() != param.shape() {
                return Err(Error::Shape {
                    expected: param.shape().to_vec(),
                    got: grad.shape().to_vec(),
                    context: format!("adam gradient for {name}"),
                });
            }
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (Tensor::zeros(param.shape()), Tensor::zeros(param.shape())));
            if c.weight_decay > 0.0 {
                let wd = c.lr * c.weight_decay;
                param.map_inplace(|p| p - wd * p);
            }
            for i in 0..param.len() {
                let g = grad.data()[i];
                let mi = c.beta1 * m.data()[i] + (1.0 - c.beta1) * g;
                let vi = c.beta2 * v.data()[i] + (1.0 - c.beta2) * g * g;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                param.data_mut()[i] -= c.lr * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
        Ok(())
    }

    /// Moments flattened for checkpointing, named `adam.{m|v}.{param}`
    /// along with `adam.step`.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out = vec![("adam.step".to_string(), Tensor::scalar(self.step as f64))];
        for (name, (m, v)) in &self.moments {
            out.push((format!("adam.m.{name}"), m.clone()));
            out.push((format!("adam.v.{name}"), v.clone()));
        }
        out
    }

    pub fn restore(&mut self, name: &str, value: Tensor) -> Result<()> {
        if name == "adam.step" {
            self.step = value.data()[0] as u64;
            return Ok(());
        }
        let (kind, param) = name
            .strip_prefix("adam.")
            .and_then(|s| s.split_once('.'))
            .ok_or_else(|| Error::Contract(format!("unrecognized optimizer tensor {name}")))?;
        let entry = self
            .moments
            .entry(param.to_string())
            .or_insert_with(|| (Tensor::zeros(value.shape()), Tensor::zeros(value.shape())));
        match kind {
            "m" => entry.0 = value,
            "v" => entry.1 = value,
            _ => return Err(Error::Contract(format!("unrecognized optimizer tensor {name}"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_towards_minus_gradient_sign() {
        let mut state = AdamState::new(AdamConfig {
            lr: 0.001,
            ..Default::default()
        });
        let mut theta = Tensor::scalar(0.0);
        let mut grads = BTreeMap::new();
        grads.insert("theta".to_string(), Tensor::scalar(1.0));
        state
            .step(&mut [("theta".to_string(), &mut theta)], &grads)
            .unwrap();
        assert!((theta.data()[0] + 0.001).abs() < 1e-9, "{}", theta.data()[0]);
    }

    #[test]
    fn zero_gradient_zero_decay_changes_nothing() {
        let mut state = AdamState::new(AdamConfig::default());
        let mut theta = Tensor::from_vec(&[2], vec![0.3, -0.4]).unwrap();
        let before = theta.clone();
        let mut grads = BTreeMap::new();
        grads.insert("theta".to_string(), Tensor::zeros(&[2]));
        state
            .step(&mut [("theta".to_string(), &mut theta)], &grads)
            .unwrap();
        assert_eq!(theta, before);
    }

    #[test]
    fn deterministic_across_runs() {
        let run = || {
            let mut state = AdamState::new(AdamConfig {
                lr: 0.01,
                weight_decay: 0.01,
                ..Default::default()
            });
            let mut theta = Tensor::from_vec(&[3], vec![0.5, -0.2, 0.1]).unwrap();
            for step in 0..10 {
                let g = Tensor::from_vec(
                    &[3],
                    vec![0.1 * step as f64, -0.05, (step as f64).sin()],
                )
                .unwrap();
                let mut grads = BTreeMap::new();
                grads.insert("theta".to_string(), g);
                state
                    .step(&mut [("theta".to_string(), &mut theta)], &grads)
                    .unwrap();
            }
            theta
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_is_a_training_error_naming_the_parameter() {
        let mut state = AdamState::new(AdamConfig::default());
        let mut theta = Tensor::scalar(0.0);
        let mut grads = BTreeMap::new();
        grads.insert("disc.0.weight".to_string(), Tensor::scalar(f64::NAN));
        let err = state
            .step(&mut [("disc.0.weight".to_string(), &mut theta)], &grads)
            .unwrap_err();
        assert!(err.to_string().contains("disc.0.weight"));
    }
}
