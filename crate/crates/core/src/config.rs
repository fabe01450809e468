//! Flat key-value pipeline configuration (TOML), with `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aum::{check_percentile, ThresholdMode};
use crate::cartography::DEFAULT_FRACTION;
use crate::dataset::DataFormat;
use crate::error::{Error, Result};
use crate::mixup::{MixSpace, MixupConfig, DEFAULT_ALPHA};
use crate::trainer::{Optimizer, TrainerConfig};

/// Percentiles used for the easy-to-learn AUM filter on three benchmark
/// families (entailment, paraphrase, commonsense completion).
pub const K_PRESETS: [(&str, f64); 3] = [("snli", 80.0), ("qqp", 80.0), ("swag", 50.0)];

pub fn k_preset(name: &str) -> Option<f64> {
    K_PRESETS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|&(_, k)| k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub ood_test: Option<PathBuf>,
    pub workdir: PathBuf,
    pub format: DataFormat,
    /// Class count; inferred from the training labels when absent.
    pub classes: Option<usize>,

    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_width: usize,
    pub optimizer: Optimizer,
    pub l2: f64,
    pub seed: u64,

    pub alpha: f64,
    pub mix_space: MixSpace,
    pub mixup_batch_size: usize,
    pub mixup_seed: u64,

    pub fraction: f64,
    pub k_easy: f64,
    pub k_ambiguous: f64,
    /// Named preset for `k_easy` (see [`K_PRESETS`]); wins over `k_easy`.
    pub k_preset: Option<String>,
    pub threshold_mode: ThresholdMode,
    pub aum_seed: u64,

    pub n_bins: usize,
    pub ablation_seeds: Vec<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let t = TrainerConfig::default();
        PipelineConfig {
            train: None,
            dev: None,
            test: None,
            ood_test: None,
            workdir: PathBuf::from("work"),
            format: DataFormat::Vectors,
            classes: None,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            hidden_width: t.hidden_width,
            optimizer: t.optimizer,
            l2: t.l2,
            seed: 0,
            alpha: DEFAULT_ALPHA,
            mix_space: MixSpace::Hidden,
            mixup_batch_size: t.batch_size,
            mixup_seed: 0,
            fraction: DEFAULT_FRACTION,
            k_easy: 80.0,
            k_ambiguous: 80.0,
            k_preset: None,
            threshold_mode: ThresholdMode::Total,
            aum_seed: 0,
            n_bins: crate::calibration::DEFAULT_BINS,
            ablation_seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text` and applies `key=value` overrides; values are read as
    /// TOML literals, falling back to plain strings.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
            table.insert(key.trim().to_owned(), value);
        }
        let config: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        check_percentile(self.k_easy)?;
        check_percentile(self.k_ambiguous)?;
        if let Some(name) = &self.k_preset {
            if k_preset(name).is_none() {
                return Err(Error::Config(format!("unknown k preset {name:?}")));
            }
        }
        if !(self.fraction > 0.0 && self.fraction <= 0.5) {
            return Err(Error::Config(format!(
                "fraction {} outside (0, 0.5]",
                self.fraction
            )));
        }
        if self.n_bins == 0 {
            return Err(Error::Config("n_bins must be >= 1".into()));
        }
        self.trainer_config().validate()
    }

    /// Effective percentile for the easy-to-learn filter.
    pub fn easy_k(&self) -> f64 {
        self.k_preset
            .as_deref()
            .and_then(k_preset)
            .unwrap_or(self.k_easy)
    }

    pub fn mixup_config(&self) -> MixupConfig {
        MixupConfig {
            alpha: self.alpha,
            mix_space: self.mix_space,
            batch_size: self.mixup_batch_size,
            seed: self.mixup_seed,
        }
    }

    pub fn trainer_config(&self) -> TrainerConfig {
        TrainerConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            hidden_width: self.hidden_width,
            optimizer: self.optimizer,
            l2: self.l2,
            seed: self.seed,
            mixup: Some(self.mixup_config()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.alpha, 0.4);
        assert_eq!(c.epochs, 6);
    }

    #[test]
    fn overrides_apply() {
        let c = PipelineConfig::from_toml_with_overrides(
            "epochs = 3\nmix_space = \"input\"\n",
            &[
                "epochs=9".into(),
                "workdir=out/run1".into(),
                "k_preset=swag".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.epochs, 9);
        assert_eq!(c.mix_space, MixSpace::Input);
        assert_eq!(c.workdir, PathBuf::from("out/run1"));
        assert_eq!(c.easy_k(), 50.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("k_easy = 0").is_err());
        assert!(PipelineConfig::from_toml("k_easy = 101").is_err());
        assert!(PipelineConfig::from_toml("unknown_key = 1").is_err());
        assert!(PipelineConfig::from_toml("alpha = -1.0").is_err());
        assert!(PipelineConfig::from_toml("k_preset = \"mnli\"").is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(k_preset("SNLI"), Some(80.0));
        assert_eq!(k_preset("qqp"), Some(80.0));
        assert_eq!(k_preset("swag"), Some(50.0));
    }

    #[test]
    fn toml_round_trip() {
        let c = PipelineConfig {
            train: Some("a.jsonl".into()),
            ..Default::default()
        };
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
