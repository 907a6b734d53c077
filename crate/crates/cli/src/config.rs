//! The run configuration: one TOML file covering every subcommand.
//!
//! ```toml
//! [train]
//! mode = "dat"
//! epochs = 50
//!
//! [train.model]
//! input_dim = 768
//!
//! [train.schedules]
//! lambda_ramp = "sigmoid"
//!
//! [synth]
//! n = 2000
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use datspeech::evalkit::{EvalOptions, ProbeConfig};
use datspeech::synthgen::SynthConfig;
use datspeech::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSettings {
    pub max_seconds: f64,
    pub max_members: usize,
    /// Trailing transcript rows removed from each interview.
    pub drop_tail: usize,
}

impl Default for SegmentSettings {
    fn default() -> Self {
        SegmentSettings {
            max_seconds: 10.0,
            max_members: 5,
            drop_tail: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub segment: SegmentSettings,
    pub probe: ProbeConfig,
    pub eval: EvalOptions,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    /// Points every seeded component at `seed`.
    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.train.model.seed = seed;
        self.synth.seed = seed;
        self.probe.seed = seed;
    }

    pub fn validate(&self) -> datspeech::Result<()> {
        use datspeech::Error;
        self.train.validate()?;
        self.synth.validate()?;
        let s = &self.segment;
        if s.max_seconds.is_nan() || s.max_seconds <= 0.0 || s.max_members == 0 {
            return Err(Error::Config("segment limits must be positive".into()));
        }
        if self.eval.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.probe.steps == 0 || self.probe.lr.is_nan() || self.probe.lr <= 0.0 {
            return Err(Error::Config("probe needs positive steps and lr".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("[train]\nepochs = 3\n[train.schedules]\nlambda_ramp = \"sigmoid\"\n").unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, 8);
        assert_eq!(cfg.synth, SynthConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[train]\nepoch = 3\n").is_err());
        assert!(toml::from_str::<RunConfig>("[nope]\n").is_err());
        assert!(toml::from_str::<RunConfig>("[train.model]\nwidth = 3\n").is_err());
    }

    #[test]
    fn seed_reaches_every_component() {
        let mut cfg = RunConfig::default();
        cfg.set_seed(77);
        assert_eq!(
            [cfg.train.seed, cfg.train.model.seed, cfg.synth.seed, cfg.probe.seed],
            [77; 4]
        );
    }
}
