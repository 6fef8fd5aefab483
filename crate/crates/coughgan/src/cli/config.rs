//! Pipeline configuration: one versioned JSON document driving every
//! subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acgan::GanConfig;
use crate::classifier::ClassifierConfig;
use crate::dsp::SegmentationParams;
use crate::error::{Error, Result};
use crate::features::MelConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub manifest: PathBuf,
    pub work_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_cough_detected: f64,
    pub require_ssl: bool,
    /// Downsample every class to the minority-class count before splitting.
    pub balance_classes: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_cough_detected: 0.7,
            require_ssl: true,
            balance_classes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    pub filter_order: usize,
    pub cutoff_hz: f64,
    pub target_rate_hz: u32,
    pub segmentation: SegmentationParams,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            filter_order: crate::dsp::DEFAULT_FILTER_ORDER,
            cutoff_hz: crate::dsp::DEFAULT_CUTOFF_HZ,
            target_rate_hz: crate::dsp::DEFAULT_TARGET_RATE_HZ,
            segmentation: SegmentationParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: (f64, f64, f64),
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: (0.8, 0.1, 0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    /// Root seed; every stage draws from a named sub-stream of it.
    #[serde(default)]
    pub seed: u64,
    pub paths: PathsConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub dsp: DspConfig,
    #[serde(default)]
    pub features: MelConfig,
    #[serde(default)]
    pub gan: GanConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    /// Synthetic samples to mix in per class; deliberately has no default —
    /// synthesis requires an explicit count.
    #[serde(default)]
    pub augment_per_class: Option<usize>,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            Error::Config(format!(
                "{} at {}: {}",
                path.display(),
                e.path(),
                e.inner()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(0.0..=1.0).contains(&self.filter.min_cough_detected) {
            return Err(Error::Config(format!(
                "filter.min_cough_detected must be in [0,1], got {}",
                self.filter.min_cough_detected
            )));
        }
        self.dsp.segmentation.validate().map_err(prefix("dsp.segmentation"))?;
        if self.dsp.filter_order < 2 || self.dsp.filter_order % 2 != 0 {
            return Err(Error::Config(format!(
                "dsp.filter_order must be even and >= 2, got {}",
                self.dsp.filter_order
            )));
        }
        if self.dsp.target_rate_hz == 0 {
            return Err(Error::Config("dsp.target_rate_hz must be positive".into()));
        }
        self.features.validate().map_err(prefix("features"))?;
        if self.dsp.target_rate_hz != self.features.sample_rate_hz {
            return Err(Error::Config(format!(
                "dsp.target_rate_hz ({}) must match features.sample_rate_hz ({})",
                self.dsp.target_rate_hz, self.features.sample_rate_hz
            )));
        }
        self.gan.validate().map_err(prefix("gan"))?;
        self.classifier.validate().map_err(prefix("classifier"))?;
        let (a, b, c) = self.split.ratios;
        if a <= 0.0 || b <= 0.0 || c <= 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split.ratios must be positive and sum to 1, got {:?}",
                self.split.ratios
            )));
        }
        Ok(())
    }

    /// Snapshot embedded into every output's metadata so a run can be
    /// reproduced from its artifacts alone.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn prefix(p: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config(msg) | Error::Domain(msg) => Error::Config(format!("{p}: {msg}")),
        other => other,
    }
}

/// Seed for a named pipeline stage, derived from the root seed.
pub fn derive_seed(root: u64, stream: &str) -> u64 {
    crate::rng::Rng::substream(root, stream).next_u64()
}
