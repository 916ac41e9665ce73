//! One TOML file configuring every pipeline stage, plus the seed and hash
//! plumbing that keeps artifacts from different configurations apart.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::FrontendConfig;
use crate::error::{Error, Result};
use crate::flow::SpeechFlowConfig;
use crate::ser::AcrnnConfig;
use crate::timbre::TimbreConfig;
use crate::util::{hash_json, seed_for};

/// Full run configuration. Every section falls back to its stage default,
/// so a TOML file only needs the values it wants to change.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Global seed; stage seeds are derived from it (see [`RunConfig::resolved`]).
    pub seed: u64,
    pub frontend: FrontendConfig,
    pub timbre: TimbreConfig,
    pub flow: SpeechFlowConfig,
    pub acrnn: AcrnnConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.frontend.validate()?;
        self.flow.validate()?;
        self.acrnn.validate()?;
        Ok(())
    }

    /// Copy with every stage seed replaced by a hash of the global seed and
    /// the stage name, so stages never share raw seeds and a single `--seed`
    /// reproduces the whole pipeline.
    pub fn resolved(&self) -> RunConfig {
        let mut out = self.clone();
        out.timbre.seed = seed_for("timbre", self.seed);
        out.flow.seed = seed_for("flow", self.seed);
        out.acrnn.seed = seed_for("acrnn", self.seed);
        out
    }

    /// Like [`RunConfig::resolved`] but with the global seed overridden.
    pub fn resolved_with_seed(&self, seed: Option<u64>) -> RunConfig {
        let mut base = self.clone();
        if let Some(s) = seed {
            base.seed = s;
        }
        base.resolved()
    }
}

/// Loads a TOML run configuration.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: RunConfig = toml::from_str(&text)
        .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

/// Hash of a config section with its seed zeroed.
///
/// Artifacts record this so loads can refuse architecture or hyperparameter
/// mismatches while still allowing the seed to vary per stage and system.
pub fn shape_hash<T: Serialize + Clone + SeedField>(section: &T) -> String {
    let mut copy = section.clone();
    copy.set_seed(0);
    hash_json(&copy)
}

/// Access to the `seed` field of a stage config, for seed-insensitive hashes.
pub trait SeedField {
    fn set_seed(&mut self, seed: u64);
}

impl SeedField for TimbreConfig {
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl SeedField for SpeechFlowConfig {
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl SeedField for AcrnnConfig {
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let config = RunConfig::default();
        let text = toml::to_string_pretty(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(hash_json(&config), hash_json(&back));
    }

    #[test]
    fn partial_toml_fills_in_defaults() {
        let text = "seed = 9\n[flow]\nd_c = 4\n[acrnn]\nconv_channels = 5\n";
        let config: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.flow.d_c, 4);
        assert_eq!(config.flow.d_r, SpeechFlowConfig::default().d_r);
        assert_eq!(config.acrnn.conv_channels, 5);
        assert_eq!(config.frontend.n_mels, FrontendConfig::default().n_mels);
    }

    #[test]
    fn resolved_seeds_are_distinct_and_deterministic() {
        let config = RunConfig {
            seed: 7,
            ..RunConfig::default()
        };
        let a = config.resolved();
        let b = config.resolved();
        assert_eq!(a.timbre.seed, b.timbre.seed);
        assert_eq!(a.flow.seed, b.flow.seed);
        assert_eq!(a.acrnn.seed, b.acrnn.seed);
        let distinct: std::collections::BTreeSet<u64> =
            [a.timbre.seed, a.flow.seed, a.acrnn.seed].into_iter().collect();
        assert_eq!(distinct.len(), 3);
        let other = config.resolved_with_seed(Some(8));
        assert_ne!(a.flow.seed, other.flow.seed);
    }

    #[test]
    fn shape_hash_ignores_seed_but_not_architecture() {
        let base = AcrnnConfig::default();
        let reseeded = AcrnnConfig { seed: 123, ..base.clone() };
        assert_eq!(shape_hash(&base), shape_hash(&reseeded));
        let wider = AcrnnConfig {
            conv_channels: base.conv_channels + 1,
            ..base.clone()
        };
        assert_ne!(shape_hash(&base), shape_hash(&wider));
    }

    #[test]
    fn files_load_and_invalid_values_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\n").unwrap();
        let config = load_run_config(&path).unwrap();
        assert_eq!(config.seed, 3);

        std::fs::write(&path, "[flow]\nd_c = 0\n").unwrap();
        assert!(matches!(load_run_config(&path), Err(Error::BadConfig(_))));

        assert!(matches!(
            load_run_config(&dir.path().join("missing.toml")),
            Err(Error::Io { .. })
        ));
    }
}
