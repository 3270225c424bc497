use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detector::{RegularizerConfig, TransformConfig};
use crate::error::{Error, Result};
use crate::eval::ProbeConfig;
use crate::routing::DeploymentProfile;
use crate::selector::SelectorConfig;

/// Where the run's telemetry comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulateConfig {
    Synthetic {
        domains: Vec<String>,
        #[serde(default)]
        wrappers: Vec<String>,
        requests_per_cell: usize,
        min_tokens: usize,
        max_tokens: usize,
        class_bias_strength: f64,
    },
    Scenario {
        num_scenarios: usize,
        records_per_scenario: usize,
        min_tokens: usize,
        max_tokens: usize,
        template_strength: f64,
        attribute: String,
        attribute_high_rate: f64,
        attribute_low_rate: f64,
        #[serde(default)]
        direct_attribute_strength: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    LeaveOneTargetOut {
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
        /// Benchmarks to hold out; all benchmarks when empty.
        #[serde(default)]
        targets: Vec<String>,
        /// Explicit source pool; every non-target benchmark when empty.
        #[serde(default)]
        source_benchmarks: Vec<String>,
    },
    MixedPositive {
        benchmark: String,
        seen_wrapper: String,
        unseen_wrappers: Vec<String>,
        #[serde(default = "default_mixed_train")]
        train_fraction: f64,
        #[serde(default = "default_mixed_validation")]
        validation_fraction: f64,
    },
}

fn default_train_fraction() -> f64 {
    0.75
}

fn default_mixed_train() -> f64 {
    0.5
}

fn default_mixed_validation() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSection {
    pub attributes: Vec<String>,
    #[serde(flatten)]
    pub config: ProbeConfig,
}

/// Complete description of one audit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Excluded from the config hash so relocated runs keep their provenance.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub profile: DeploymentProfile,
    /// JSONL telemetry to audit; ignored when `simulate` is present.
    #[serde(default)]
    pub telemetry: Option<PathBuf>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub selector: SelectorConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub regularizer: RegularizerConfig,
    #[serde(default)]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default)]
    pub probe: Option<ProbeSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("routescan-out")
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Configuration(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative telemetry paths are resolved against the config file
        if let (Some(t), Some(dir)) = (&cfg.telemetry, path.parent()) {
            if t.is_relative() {
                cfg.telemetry = Some(dir.join(t));
            }
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, with the output directory blanked.
    pub fn config_hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical)?;
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        self.selector.validate()?;
        self.transform.validate()?;
        self.regularizer.validate()?;
        if self.simulate.is_none() && self.telemetry.is_none() {
            return Err(Error::Configuration("config needs either [simulate] or a telemetry path".into()));
        }
        if self.protocol.is_none() && self.probe.is_none() {
            return Err(Error::Configuration("config defines neither a [protocol] nor a [probe] stage".into()));
        }
        match &self.protocol {
            Some(ProtocolConfig::LeaveOneTargetOut {
                targets,
                source_benchmarks,
                train_fraction,
            }) => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return Err(Error::Configuration(format!("train_fraction {train_fraction} outside (0, 1)")));
                }
                let sources: BTreeSet<&String> = source_benchmarks.iter().collect();
                if let Some(t) = targets.iter().find(|t| sources.contains(t)) {
                    return Err(Error::Protocol(format!("target benchmark {t} is also listed in the source pool")));
                }
                if !source_benchmarks.is_empty() && targets.is_empty() {
                    return Err(Error::Protocol(
                        "an explicit source pool requires explicit targets".into(),
                    ));
                }
            }
            Some(ProtocolConfig::MixedPositive {
                seen_wrapper,
                unseen_wrappers,
                ..
            }) => {
                if unseen_wrappers.is_empty() {
                    return Err(Error::Configuration("mixed-positive protocol needs unseen wrappers".into()));
                }
                if unseen_wrappers.contains(seen_wrapper) {
                    return Err(Error::Protocol(format!(
                        "wrapper {seen_wrapper} cannot be both seen in training and held out"
                    )));
                }
            }
            None => {}
        }
        Ok(())
    }
}
