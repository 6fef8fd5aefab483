//! Labeled spectrogram sets exchanged between the feature stage, the GAN,
//! and the classifier.

use crate::error::{Error, Result};
use crate::features::UnitSpectrogram;
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Real,
    Synthetic,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// Spectrograms in [-1, 1] with integer class labels and provenance tags.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSpectrograms {
    pub n_mels: usize,
    pub n_frames: usize,
    /// Flat row-major values, one `n_mels * n_frames` block per sample.
    pub values: Vec<f64>,
    pub labels: Vec<usize>,
    pub provenance: Vec<Provenance>,
    pub class_names: Vec<String>,
}

impl LabeledSpectrograms {
    pub fn empty(n_mels: usize, n_frames: usize, class_names: Vec<String>) -> Self {
        LabeledSpectrograms {
            n_mels,
            n_frames,
            values: Vec::new(),
            labels: Vec::new(),
            provenance: Vec::new(),
            class_names,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample_len(&self) -> usize {
        self.n_mels * self.n_frames
    }

    pub fn push(
        &mut self,
        spec: &UnitSpectrogram,
        label: usize,
        provenance: Provenance,
    ) -> Result<()> {
        if spec.n_mels != self.n_mels || spec.n_frames != self.n_frames {
            return Err(Error::Data(format!(
                "spectrogram shape {}x{} does not match set shape {}x{}",
                spec.n_mels, spec.n_frames, self.n_mels, self.n_frames
            )));
        }
        if label >= self.class_names.len() {
            return Err(Error::Data(format!(
                "label {label} out of range for {} classes",
                self.class_names.len()
            )));
        }
        self.values.extend_from_slice(&spec.values);
        self.labels.push(label);
        self.provenance.push(provenance);
        Ok(())
    }

    pub fn sample(&self, index: usize) -> &[f64] {
        let n = self.sample_len();
        &self.values[index * n..(index + 1) * n]
    }

    /// Gathers the indexed samples into a (batch, 1, n_mels, n_frames) tensor.
    pub fn batch_tensor(&self, indices: &[usize]) -> Tensor {
        let n = self.sample_len();
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend_from_slice(self.sample(i));
        }
        Tensor::from_vec(&[indices.len(), 1, self.n_mels, self.n_frames], data)
            .expect("batch dimensions are consistent by construction")
    }

    pub fn batch_labels(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn class_count(&self, label: usize) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// One-hot encodes labels into a (batch, n_classes) tensor.
pub fn one_hot(labels: &[usize], n_classes: usize) -> Tensor {
    let mut t = Tensor::zeros(&[labels.len(), n_classes]);
    for (b, &l) in labels.iter().enumerate() {
        t.data_mut()[b * n_classes + l] = 1.0;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: f64) -> UnitSpectrogram {
        UnitSpectrogram {
            values: vec![v; 6],
            n_mels: 3,
            n_frames: 2,
        }
    }

    #[test]
    fn push_and_batch() {
        let mut set =
            LabeledSpectrograms::empty(3, 2, vec!["healthy".into(), "COVID-19".into()]);
        set.push(&unit(0.5), 0, Provenance::Real).unwrap();
        set.push(&unit(-0.5), 1, Provenance::Synthetic).unwrap();
        assert_eq!(set.len(), 2);
        let batch = set.batch_tensor(&[1, 0]);
        assert_eq!(batch.shape(), &[2, 1, 3, 2]);
        assert_eq!(batch.data()[0], -0.5);
        assert_eq!(set.batch_labels(&[1, 0]), vec![1, 0]);
    }

    #[test]
    fn shape_and_label_mismatches_are_data_errors() {
        let mut set = LabeledSpectrograms::empty(4, 2, vec!["a".into()]);
        assert!(set.push(&unit(0.0), 0, Provenance::Real).is_err());
        let mut set = LabeledSpectrograms::empty(3, 2, vec!["a".into()]);
        assert!(set.push(&unit(0.0), 1, Provenance::Real).is_err());
    }

    #[test]
    fn one_hot_encodes() {
        let t = one_hot(&[1, 0], 3);
        assert_eq!(t.data(), &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    }
}
