//! Sequential composition of layers.

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::layer::{self, LayerCache, LayerGrads, LayerParams, LayerSpec};
use super::tensor::Tensor;
use super::Mode;

#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StackParams(pub Vec<LayerParams>);

#[derive(Debug, Clone, Default)]
pub struct StackGrads(pub Vec<LayerGrads>);

impl Stack {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        for l in &layers {
            l.validate()?;
        }
        Ok(Stack { layers })
    }

    pub fn init(&self, rng: &mut Rng) -> StackParams {
        StackParams(self.layers.iter().map(|l| l.init_params(rng)).collect())
    }

    /// Runs every layer in order; an empty stack is the identity.
    pub fn forward(
        &self,
        params: &mut StackParams,
        input: &Tensor,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Tensor, Vec<LayerCache>)> {
        if self.layers.len() != params.0.len() {
            return Err(Error::Contract(format!(
                "stack has {} layers but params cover {}",
                self.layers.len(),
                params.0.len()
            )));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for (spec, p) in self.layers.iter().zip(params.0.iter_mut()) {
            let (out, cache) = layer::forward(spec, p, &current, mode, rng)?;
            caches.push(cache);
            current = out;
        }
        Ok((current, caches))
    }

    /// Input gradient only; parameter gradients are skipped (frozen stack).
    pub fn backward_input_only(
        &self,
        params: &StackParams,
        caches: &[LayerCache],
        grad_out: &Tensor,
    ) -> Result<Tensor> {
        if caches.len() != self.layers.len() {
            return Err(Error::Contract(format!(
                "stack has {} layers but {} caches were supplied",
                self.layers.len(),
                caches.len()
            )));
        }
        let mut current = grad_out.clone();
        for idx in (0..self.layers.len()).rev() {
            current =
                layer::backward_input_only(&self.layers[idx], &params.0[idx], &caches[idx], &current)?;
        }
        Ok(current)
    }

    /// Reverse-mode pass over caches produced by the matching `forward`.
    pub fn backward(
        &self,
        params: &StackParams,
        caches: &[LayerCache],
        grad_out: &Tensor,
    ) -> Result<(Tensor, StackGrads)> {
        if caches.len() != self.layers.len() {
            return Err(Error::Contract(format!(
                "stack has {} layers but {} caches were supplied",
                self.layers.len(),
                caches.len()
            )));
        }
        let mut grads = vec![LayerGrads::default(); self.layers.len()];
        let mut current = grad_out.clone();
        for idx in (0..self.layers.len()).rev() {
            let (gin, g) = layer::backward(&self.layers[idx], &params.0[idx], &caches[idx], &current)?;
            grads[idx] = g;
            current = gin;
        }
        Ok((current, StackGrads(grads)))
    }
}

impl StackParams {
    /// Trainable tensors with stable names `{prefix}.{layer}.{role}`.
    pub fn named(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, p) in self.0.iter().enumerate() {
            for (role, t) in [
                ("weight", &p.weight),
                ("bias", &p.bias),
                ("gamma", &p.gamma),
                ("beta", &p.beta),
            ] {
                if let Some(t) = t {
                    out.push((format!("{prefix}.{i}.{role}"), t));
                }
            }
        }
        out
    }

    pub fn named_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, p) in self.0.iter_mut().enumerate() {
            for (role, t) in [
                ("weight", &mut p.weight),
                ("bias", &mut p.bias),
                ("gamma", &mut p.gamma),
                ("beta", &mut p.beta),
            ] {
                if let Some(t) = t {
                    out.push((format!("{prefix}.{i}.{role}"), t));
                }
            }
        }
        out
    }

    /// Non-trainable state (batch-norm running statistics), also checkpointed.
    pub fn named_state(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, p) in self.0.iter().enumerate() {
            for (role, t) in [
                ("running_mean", &p.running_mean),
                ("running_var", &p.running_var),
            ] {
                if let Some(t) = t {
                    out.push((format!("{prefix}.{i}.{role}"), t));
                }
            }
        }
        out
    }

    /// Overwrites the tensor with the given name; errors if absent or shaped
    /// differently.
    pub fn assign(&mut self, prefix: &str, name: &str, value: Tensor) -> Result<()> {
        let rest = name
            .strip_prefix(prefix)
            .and_then(|s| s.strip_prefix('.'))
            .ok_or_else(|| Error::Contract(format!("tensor {name} not under prefix {prefix}")))?;
        let (idx_str, role) = rest
            .split_once('.')
            .ok_or_else(|| Error::Contract(format!("malformed tensor name {name}")))?;
        let idx: usize = idx_str
            .parse()
            .map_err(|_| Error::Contract(format!("malformed tensor name {name}")))?;
        let p = self
            .0
            .get_mut(idx)
            .ok_or_else(|| Error::Contract(format!("layer index {idx} out of range for {name}")))?;
        let slot = match role {
            "weight" => &mut p.weight,
            "bias" => &mut p.bias,
            "gamma" => &mut p.gamma,
            "beta" => &mut p.beta,
            "running_mean" => &mut p.running_mean,
            "running_var" => &mut p.running_var,
            _ => return Err(Error::Contract(format!("unknown tensor role in {name}"))),
        };
        match slot {
            Some(existing) if existing.shape() == value.shape() => {
                *existing = value;
                Ok(())
            }
            Some(existing) => Err(Error::Shape {
                expected: existing.shape().to_vec(),
                got: value.shape().to_vec(),
                context: format!("checkpoint tensor {name}"),
            }),
            None => Err(Error::Contract(format!(
                "layer {idx} has no {role} tensor to load into"
            ))),
        }
    }

    pub fn trainable_count(&self) -> usize {
        self.named("p").iter().map(|(_, t)| t.len()).sum()
    }
}

impl StackGrads {
    pub fn named(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, g) in self.0.iter().enumerate() {
            for (role, t) in [
                ("weight", &g.weight),
                ("bias", &g.bias),
                ("gamma", &g.gamma),
                ("beta", &g.beta),
            ] {
                if let Some(t) = t {
                    out.push((format!("{prefix}.{i}.{role}"), t));
                }
            }
        }
        out
    }

    /// grads += other (same structure), used to accumulate over sub-batches.
    pub fn accumulate(&mut self, other: &StackGrads) -> Result<()> {
        if self.0.len() != other.0.len() {
            return Err(Error::Contract("accumulating mismatched grads".into()));
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (ga, gb) in [
                (&mut a.weight, &b.weight),
                (&mut a.bias, &b.bias),
                (&mut a.gamma, &b.gamma),
                (&mut a.beta, &b.beta),
            ] {
                match (ga, gb) {
                    (Some(x), Some(y)) => x.add_scaled(y, 1.0)?,
                    (None, None) => {}
                    (ga @ None, Some(y)) => *ga = Some(y.clone()),
                    (_, None) => {}
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stack_is_identity() {
        let stack = Stack::new(vec![]).unwrap();
        let mut params = stack.init(&mut Rng::seed_from_u64(0));
        let x = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut rng = Rng::seed_from_u64(1);
        let (y, caches) = stack
            .forward(&mut params, &x, Mode::Train, &mut rng)
            .unwrap();
        assert_eq!(y, x);
        let (gin, _) = stack.backward(&params, &caches, &y).unwrap();
        assert_eq!(gin, x);
    }

    #[test]
    fn named_tensors_round_trip_through_assign() {
        let stack = Stack::new(vec![LayerSpec::Dense {
            in_features: 3,
            out_features: 2,
        }])
        .unwrap();
        let mut rng = Rng::seed_from_u64(7);
        let params = stack.init(&mut rng);
        let named = params.named("m");
        assert_eq!(named.len(), 2);
        assert_eq!(named[0].0, "m.0.weight");

        let mut copy = stack.init(&mut Rng::seed_from_u64(8));
        for (name, t) in params.named("m") {
            copy.assign("m", &name, t.clone()).unwrap();
        }
        assert_eq!(copy.0[0].weight, params.0[0].weight);
    }
}
