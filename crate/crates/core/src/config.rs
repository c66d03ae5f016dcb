//! Run configuration: frozen defaults, optionally overridden by a TOML
//! file, in turn overridden by command-line flags.
//!
//! Every tunable value in the toolkit lives here so a run is reproducible
//! from one file. Unknown keys are rejected rather than ignored — a typo'd
//! key must not silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::generators::LEXRANK_DAMPING;
use crate::metrics::bootstrap::BootstrapConfig;
use crate::when::ForestConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Random-forest knobs (`[rf]` section).
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfSection {
    pub trees: usize,
    pub seed: u64,
    /// Positive-probability threshold at which the when-classifier fires.
    pub threshold: f64,
}

impl Default for RfSection {
    fn default() -> Self {
        RfSection { trees: 100, seed: 0, threshold: 0.5 }
    }
}

/// Bootstrap-comparison knobs (`[bootstrap]` section); the significance
/// level `alpha` lives at the top level.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    pub samples: usize,
    pub size: usize,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        BootstrapSection { samples: 10_000, size: 5_000 }
    }
}

/// All tunable values for a run. Defaults are the documented frozen values;
/// a config file overrides per key.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Minimum NIWF a description must reach to count as specific.
    pub niwf_threshold: f64,
    /// Title-overlap fraction at which a description is uninformative.
    pub overlap_threshold: f64,
    /// Train/valid/test fractions of the time-ordered corpus.
    pub split_fractions: (f64, f64, f64),
    /// Cosine cutoff for LexRank graph edges.
    pub lexrank_threshold: f64,
    /// LexRank power-iteration damping.
    pub lexrank_damping: f64,
    /// Weight on augmentation (non-bug) training instances.
    pub aug_weight: f64,
    /// Fixed (positive, negative) class weights; omitted, they are
    /// recomputed from the assembled training instances.
    pub class_weights: Option<(f64, f64)>,
    /// Significance level for bootstrap comparisons.
    pub alpha: f64,
    pub rf: RfSection,
    pub bootstrap: BootstrapSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            niwf_threshold: 0.116,
            overlap_threshold: 0.5,
            split_fractions: (0.8, 0.1, 0.1),
            lexrank_threshold: 0.1,
            lexrank_damping: LEXRANK_DAMPING,
            aug_weight: 0.7,
            class_weights: None,
            alpha: 0.05,
            rf: RfSection::default(),
            bootstrap: BootstrapSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML config file; absent keys keep their defaults. With no
    /// path, returns the defaults. The result is always validated.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Io { path: path.to_path_buf(), source: e })?;
                toml::from_str(&text).map_err(|e| ConfigError::Parse {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid(msg.to_string()))
            }
        };
        check(
            (0.0..=1.0).contains(&self.niwf_threshold),
            "niwf_threshold must lie in [0, 1]",
        )?;
        check(
            self.overlap_threshold > 0.0 && self.overlap_threshold <= 1.0,
            "overlap_threshold must lie in (0, 1]",
        )?;
        let (a, b, c) = self.split_fractions;
        check(
            a > 0.0 && b > 0.0 && c > 0.0 && (a + b + c - 1.0).abs() <= 1e-9,
            "split_fractions must be positive and sum to 1",
        )?;
        check(self.lexrank_threshold >= 0.0, "lexrank_threshold must be ≥ 0")?;
        check(
            self.lexrank_damping > 0.0 && self.lexrank_damping < 1.0,
            "lexrank_damping must lie in (0, 1)",
        )?;
        check(self.aug_weight > 0.0, "aug_weight must be > 0")?;
        if let Some((w_pos, w_neg)) = self.class_weights {
            check(w_pos > 0.0 && w_neg > 0.0, "class_weights must both be > 0")?;
        }
        check(self.alpha > 0.0 && self.alpha < 1.0, "alpha must lie in (0, 1)")?;
        check(self.rf.trees >= 1, "rf.trees must be ≥ 1")?;
        check(
            self.rf.threshold > 0.0 && self.rf.threshold <= 1.0,
            "rf.threshold must lie in (0, 1]",
        )?;
        check(self.bootstrap.samples >= 1, "bootstrap.samples must be ≥ 1")?;
        check(self.bootstrap.size >= 1, "bootstrap.size must be ≥ 1")?;
        Ok(())
    }

    /// Forest training parameters. Class weights are not copied here: they
    /// are applied to instance weights when the training set is assembled.
    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig { n_trees: self.rf.trees, seed: self.rf.seed, ..ForestConfig::default() }
    }

    /// Bootstrap parameters at a given seed.
    pub fn bootstrap_config(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            samples: self.bootstrap.samples,
            size: self.bootstrap.size,
            alpha: self.alpha,
            seed,
        }
    }
}
