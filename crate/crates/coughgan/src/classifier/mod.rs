//! Baseline CNN classifier: the discriminator trunk with only the label head,
//! trained on real or augmented spectrogram sets.

use serde::{Deserialize, Serialize};

use crate::acgan::models::conv_trunk;
use crate::dataset::{one_hot, LabeledSpectrograms, Provenance};
use crate::error::{Error, Result};
use crate::nn::{
    bce_loss, categorical_ce_loss, AdamConfig, AdamState, LayerSpec, Mode, Stack, StackParams,
    Tensor,
};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    /// 1 for the binary sigmoid node, 3 for the legacy softmax baseline.
    pub n_outputs: usize,
    pub seed: u64,
    /// Trunk width knob mirroring the discriminator's; 32 is the full size.
    pub base_filters: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            lr: 0.002,
            epochs: 200,
            batch_size: 256,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.01,
            n_outputs: 1,
            seed: 0,
            base_filters: 32,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "lr, epochs, and batch_size must be positive".into(),
            ));
        }
        if self.n_outputs != 1 && self.n_outputs != 3 {
            return Err(Error::Config(format!(
                "n_outputs must be 1 or 3, got {}",
                self.n_outputs
            )));
        }
        if self.base_filters == 0 {
            return Err(Error::Config("base_filters must be positive".into()));
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        if self.n_outputs == 1 {
            2
        } else {
            3
        }
    }
}

#[derive(Clone)]
pub struct Classifier {
    pub trunk: Stack,
    pub head: Stack,
    pub trunk_params: StackParams,
    pub head_params: StackParams,
    pub n_outputs: usize,
}

pub fn build_classifier(cfg: &ClassifierConfig, rng: &mut Rng) -> Result<Classifier> {
    cfg.validate()?;
    let (trunk, flat) = conv_trunk(cfg.base_filters, false);
    let head = if cfg.n_outputs == 1 {
        Stack::new(vec![
            LayerSpec::Dense {
                in_features: flat,
                out_features: 1,
            },
            LayerSpec::Sigmoid,
        ])?
    } else {
        Stack::new(vec![
            LayerSpec::Dense {
                in_features: flat,
                out_features: 3,
            },
            LayerSpec::Softmax,
        ])?
    };
    let trunk_params = trunk.init(rng);
    let head_params = head.init(rng);
    Ok(Classifier {
        trunk,
        head,
        trunk_params,
        head_params,
        n_outputs: cfg.n_outputs,
    })
}

pub struct ClfCaches {
    trunk: Vec<crate::nn::LayerCache>,
    head: Vec<crate::nn::LayerCache>,
}

impl Classifier {
    pub fn forward(
        &mut self,
        input: &Tensor,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Tensor, ClfCaches)> {
        let (flat, trunk_caches) = self.trunk.forward(&mut self.trunk_params, input, mode, rng)?;
        let (out, head_caches) = self.head.forward(&mut self.head_params, &flat, mode, rng)?;
        Ok((
            out,
            ClfCaches {
                trunk: trunk_caches,
                head: head_caches,
            },
        ))
    }

    pub fn backward(
        &self,
        caches: &ClfCaches,
        grad_out: &Tensor,
    ) -> Result<(crate::nn::StackGrads, crate::nn::StackGrads)> {
        let (grad_flat, head_grads) =
            self.head
                .backward(&self.head_params, &caches.head, grad_out)?;
        let (_, trunk_grads) = self
            .trunk
            .backward(&self.trunk_params, &caches.trunk, &grad_flat)?;
        Ok((trunk_grads, head_grads))
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = self.trunk_params.named("clf.trunk");
        out.extend(self.head_params.named("clf.head"));
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = self.trunk_params.named_mut("clf.trunk");
        out.extend(self.head_params.named_mut("clf.head"));
        out
    }

    pub fn named_state(&self) -> Vec<(String, &Tensor)> {
        self.trunk_params.named_state("clf.trunk")
    }

    pub fn assign(&mut self, name: &str, value: Tensor) -> Result<()> {
        if name.starts_with("clf.trunk.") {
            self.trunk_params.assign("clf.trunk", name, value)
        } else if name.starts_with("clf.head.") {
            self.head_params.assign("clf.head", name, value)
        } else {
            Err(Error::Contract(format!("unknown classifier tensor {name}")))
        }
    }

    /// Predicted class indices: thresholded at 0.5 for the binary node,
    /// argmax for the softmax variant.
    pub fn predict(&mut self, input: &Tensor, rng: &mut Rng) -> Result<Vec<usize>> {
        let (out, _) = self.forward(input, Mode::Eval, rng)?;
        Ok(predictions_from_scores(&out, self.n_outputs))
    }
}

fn predictions_from_scores(scores: &Tensor, n_outputs: usize) -> Vec<usize> {
    let batch = scores.shape()[0];
    (0..batch)
        .map(|b| {
            if n_outputs == 1 {
                usize::from(scores.data()[b] >= 0.5)
            } else {
                let row = &scores.data()[b * n_outputs..(b + 1) * n_outputs];
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap()
            }
        })
        .collect()
}

fn loss_for(
    out: &Tensor,
    labels: &[usize],
    n_outputs: usize,
) -> Result<(f64, Tensor)> {
    if n_outputs == 1 {
        let targets = Tensor::from_vec(
            &[labels.len(), 1],
            labels.iter().map(|&l| l as f64).collect(),
        )?;
        bce_loss(out, &targets)
    } else {
        categorical_ce_loss(out, &one_hot(labels, 3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClfEpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassifierHistory {
    pub records: Vec<ClfEpochRecord>,
}

pub struct TrainedClassifier {
    /// Model after the last epoch (the paper's protocol evaluates this one).
    pub final_model: Classifier,
    /// Courtesy snapshot of the best-validation-accuracy epoch.
    pub best_model: Classifier,
    pub best_epoch: usize,
    pub history: ClassifierHistory,
}

/// Full-epoch-budget training (no early stopping) with Adam and decoupled
/// weight decay; deterministic for a given seed.
pub fn train_classifier(
    train: &LabeledSpectrograms,
    val: &LabeledSpectrograms,
    cfg: &ClassifierConfig,
) -> Result<TrainedClassifier> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Data("train and validation sets must be non-empty".into()));
    }
    let n_classes = cfg.n_classes();
    for set in [train, val] {
        if let Some(&bad) = set.labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
    }

    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut model = build_classifier(cfg, &mut rng)?;
    let mut opt = AdamState::new(AdamConfig {
        lr: cfg.lr,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        epsilon: 1e-8,
        weight_decay: cfg.weight_decay,
    });

    let mut history = ClassifierHistory::default();
    let mut best: Option<(f64, usize, Classifier)> = None;
    let mut indices: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut indices);
        let mut train_loss_sum = 0.0;
        let mut train_hits = 0usize;
        for chunk in indices.chunks(cfg.batch_size) {
            let batch = train.batch_tensor(chunk);
            let labels = train.batch_labels(chunk);
            let (out, caches) = model.forward(&batch, Mode::Train, &mut rng)?;
            let (loss, grad) = loss_for(&out, &labels, cfg.n_outputs)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite classifier loss at epoch {epoch}"
                )));
            }
            train_loss_sum += loss * chunk.len() as f64;
            train_hits += predictions_from_scores(&out, cfg.n_outputs)
                .iter()
                .zip(&labels)
                .filter(|(p, l)| p == l)
                .count();
            let (trunk_grads, head_grads) = model.backward(&caches, &grad)?;
            let mut grads = std::collections::BTreeMap::new();
            for (name, t) in trunk_grads.named("clf.trunk") {
                grads.insert(name, t.clone());
            }
            for (name, t) in head_grads.named("clf.head") {
                grads.insert(name, t.clone());
            }
            opt.step(&mut model.named_params_mut(), &grads)?;
        }
        let (val_loss, val_acc) = evaluate_loss_acc(&mut model, val, cfg.n_outputs, &mut rng)?;
        let record = ClfEpochRecord {
            epoch,
            train_loss: train_loss_sum / train.len() as f64,
            train_acc: train_hits as f64 / train.len() as f64,
            val_loss,
            val_acc,
        };
        history.records.push(record);
        if best.as_ref().map_or(true, |(acc, _, _)| val_acc > *acc) {
            best = Some((val_acc, epoch, model.clone()));
        }
    }
    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    Ok(TrainedClassifier {
        final_model: model,
        best_model,
        best_epoch,
        history,
    })
}

fn evaluate_loss_acc(
    model: &mut Classifier,
    set: &LabeledSpectrograms,
    n_outputs: usize,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    let mut loss_sum = 0.0;
    let mut hits = 0usize;
    let indices: Vec<usize> = (0..set.len()).collect();
    for chunk in indices.chunks(256) {
        let batch = set.batch_tensor(chunk);
        let labels = set.batch_labels(chunk);
        let (out, _) = model.forward(&batch, Mode::Eval, rng)?;
        let (loss, _) = loss_for(&out, &labels, n_outputs)?;
        loss_sum += loss * chunk.len() as f64;
        hits += predictions_from_scores(&out, n_outputs)
            .iter()
            .zip(&labels)
            .filter(|(p, l)| p == l)
            .count();
    }
    Ok((loss_sum / set.len() as f64, hits as f64 / set.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// confusion_matrix[true_class][predicted_class]
    pub confusion_matrix: Vec<Vec<usize>>,
    pub sample_count: usize,
}

/// Builds metrics from predicted and true labels; accuracy is the confusion
/// matrix trace over the total.
pub fn metrics_from_predictions(
    predictions: &[usize],
    labels: &[usize],
    class_names: &[String],
) -> EvalMetrics {
    let n = class_names.len();
    let mut confusion = vec![vec![0usize; n]; n];
    for (&p, &t) in predictions.iter().zip(labels) {
        confusion[t][p] += 1;
    }
    let total: usize = predictions.len();
    let trace: usize = (0..n).map(|i| confusion[i][i]).sum();
    let per_class = (0..n)
        .map(|c| {
            let predicted: usize = (0..n).map(|t| confusion[t][c]).sum();
            let actual: usize = confusion[c].iter().sum();
            ClassMetrics {
                class: class_names[c].clone(),
                precision: if predicted > 0 {
                    confusion[c][c] as f64 / predicted as f64
                } else {
                    0.0
                },
                recall: if actual > 0 {
                    confusion[c][c] as f64 / actual as f64
                } else {
                    0.0
                },
            }
        })
        .collect();
    EvalMetrics {
        accuracy: trace as f64 / total as f64,
        per_class,
        confusion_matrix: confusion,
        sample_count: total,
    }
}

/// Eval-mode inference over the held-out set.
pub fn evaluate(model: &mut Classifier, test: &LabeledSpectrograms) -> Result<EvalMetrics> {
    if test.is_empty() {
        return Err(Error::Data("test set must be non-empty".into()));
    }
    let mut rng = Rng::seed_from_u64(0); // eval consumes no randomness
    let indices: Vec<usize> = (0..test.len()).collect();
    let mut predictions = Vec::with_capacity(test.len());
    for chunk in indices.chunks(256) {
        let batch = test.batch_tensor(chunk);
        predictions.extend(model.predict(&batch, &mut rng)?);
    }
    Ok(metrics_from_predictions(
        &predictions,
        &test.labels,
        &test.class_names,
    ))
}

/// Concatenates real and synthetic samples (tagging provenance accordingly)
/// and reshuffles with the given seed. Validation and test sets are never
/// passed through here.
pub fn augment_training_set(
    real: &LabeledSpectrograms,
    synthetic: &LabeledSpectrograms,
    shuffle_seed: u64,
) -> Result<LabeledSpectrograms> {
    if real.n_mels != synthetic.n_mels || real.n_frames != synthetic.n_frames {
        return Err(Error::Data(format!(
            "spectrogram shapes differ: {}x{} vs {}x{}",
            real.n_mels, real.n_frames, synthetic.n_mels, synthetic.n_frames
        )));
    }
    if !synthetic.is_empty() && real.class_names != synthetic.class_names {
        return Err(Error::Data("label vocabularies differ".into()));
    }
    let n = real.len() + synthetic.len();
    let sample_len = real.sample_len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Rng::seed_from_u64(shuffle_seed);
    rng.shuffle(&mut order);

    let mut out = LabeledSpectrograms::empty(real.n_mels, real.n_frames, real.class_names.clone());
    out.values.reserve(n * sample_len);
    for &i in &order {
        let (src, provenance, j) = if i < real.len() {
            (real, Provenance::Real, i)
        } else {
            (synthetic, Provenance::Synthetic, i - real.len())
        };
        out.values.extend_from_slice(src.sample(j));
        out.labels.push(src.labels[j]);
        out.provenance.push(provenance);
    }
    Ok(out)
}


#[cfg(test)]
mod legacy_tests {
    use super::*;
    use crate::acgan::{SPEC_COLS, SPEC_ROWS};
    use crate::features::UnitSpectrogram;

    /// The legacy three-way softmax path trains and evaluates.
    #[test]
    fn three_class_path_runs() {
        let mut rng = Rng::seed_from_u64(90);
        let names = vec![
            "healthy".to_string(),
            "symptomatic".to_string(),
            "COVID-19".to_string(),
        ];
        let mut set = LabeledSpectrograms::empty(SPEC_ROWS, SPEC_COLS, names);
        for i in 0..12 {
            let label = i % 3;
            let mut values = vec![-0.9; SPEC_ROWS * SPEC_COLS];
            for row in label * 40..label * 40 + 30 {
                for col in 4..20 {
                    values[row * SPEC_COLS + col] = rng.uniform_in(0.2, 0.8);
                }
            }
            set.push(
                &UnitSpectrogram {
                    values,
                    n_mels: SPEC_ROWS,
                    n_frames: SPEC_COLS,
                },
                label,
                Provenance::Real,
            )
            .unwrap();
        }
        let cfg = ClassifierConfig {
            n_outputs: 3,
            epochs: 2,
            batch_size: 6,
            base_filters: 1,
            seed: 91,
            ..Default::default()
        };
        let outcome = train_classifier(&set, &set, &cfg).unwrap();
        assert_eq!(outcome.history.records.len(), 2);
        let mut model = outcome.final_model;
        let metrics = evaluate(&mut model, &set).unwrap();
        assert_eq!(metrics.confusion_matrix.len(), 3);
        assert_eq!(metrics.sample_count, 12);
    }
}
