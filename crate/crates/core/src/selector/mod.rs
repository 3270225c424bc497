//! Hybrid per-dimension scoring and entropy-adaptive support selection.

mod score;
mod stats;
mod support;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use score::{
    consistency_factor, discriminative_factor, edge_penalty, hybrid_score, layer_prior, normalize_scores,
    prior_factor, DimensionScore,
};
pub use stats::{bootstrap_stability, compute_dimension_stats, invariance_score, single_dim_auc_score, DimensionStats};
pub use support::{adaptive_support, diffuseness, soft_weights, target_mass, SupportSelection};

use crate::error::{Error, Result};
use crate::telemetry::{FeatureKey, FeatureMatrix, SplitRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    pub eta: f64,
    pub kappa: f64,
    pub bootstrap_rounds: usize,
    pub bootstrap_benchmark_fraction: f64,
    pub bootstrap_gap_floor: f64,
    pub q_low: f64,
    pub q_high: f64,
    pub q_slope: f64,
    pub q_center: f64,
    pub seed: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            eta: 0.75,
            kappa: 0.5,
            bootstrap_rounds: 6,
            bootstrap_benchmark_fraction: 0.80,
            bootstrap_gap_floor: 1e-12,
            q_low: 0.94,
            q_high: 0.998,
            q_slope: 12.0,
            q_center: 0.43,
            seed: 0,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Configuration(format!("eta {} outside [0, 1]", self.eta)));
        }
        if !(self.q_low < self.q_high && self.q_high <= 1.0) {
            return Err(Error::Configuration(format!(
                "target mass bounds need q_low < q_high <= 1, got {} and {}",
                self.q_low, self.q_high
            )));
        }
        if !(self.kappa > 0.0) || !(0.0..=1.0).contains(&self.bootstrap_benchmark_fraction) {
            return Err(Error::Configuration("kappa must be positive and the bootstrap fraction in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Complete selector output, serialized as the audit's selector report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorReport {
    pub config: SelectorConfig,
    pub profile_id: String,
    pub benchmarks: Vec<String>,
    pub scores: Vec<DimensionScore>,
    pub selection: SupportSelection,
    /// Soft weight of each support key, aligned with `selection.support`.
    pub weights: Vec<f64>,
}

impl SelectorReport {
    pub fn weight_of(&self, key: &FeatureKey) -> Option<f64> {
        self.selection
            .support
            .iter()
            .position(|k| k == key)
            .map(|i| self.weights[i])
    }
}

/// Score every dimension on source training data and pick the support.
///
/// `edge_subset` lists request ids of boundary positives, when the protocol
/// defines them.
pub fn fit_selector(
    train: &FeatureMatrix,
    num_layers: usize,
    edge_subset: Option<&BTreeSet<String>>,
    config: &SelectorConfig,
) -> Result<SelectorReport> {
    train.require_role(SplitRole::SourceTrain, "feature selection")?;
    config.validate()?;
    let stats = compute_dimension_stats(train, edge_subset)?;
    let auc = stats::auc_scores(train)?;
    let stability = bootstrap_stability(train, &stats.direction, config)?;
    let scores = hybrid_score(&train.keys, &stats, &auc, &stability, num_layers)?;
    let selection = adaptive_support(&scores, config);
    let full = soft_weights(&selection, &scores, config);
    let weights = selection.indices.iter().map(|&j| full[j]).collect();
    Ok(SelectorReport {
        config: config.clone(),
        profile_id: train.profile_id.clone(),
        benchmarks: stats.benchmarks,
        scores,
        selection,
        weights,
    })
}
