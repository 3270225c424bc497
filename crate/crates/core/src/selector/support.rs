use serde::{Deserialize, Serialize};

use super::score::DimensionScore;
use super::SelectorConfig;
use crate::numeric::{entropy, sigmoid};
use crate::telemetry::FeatureKey;

/// Retained dimensions, in descending score order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSelection {
    pub support: Vec<FeatureKey>,
    /// Column index of each support key in the full representation.
    pub indices: Vec<usize>,
    pub diffuseness: f64,
    pub target_mass: f64,
    pub covered_mass: f64,
}

impl SupportSelection {
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

pub fn target_mass(diffuseness: f64, config: &SelectorConfig) -> f64 {
    config.q_low + (config.q_high - config.q_low) * sigmoid(config.q_slope * (diffuseness - config.q_center))
}

/// Effective width of the positive score mass divided by its count.
pub fn diffuseness(masses: &[f64]) -> f64 {
    let positive: Vec<f64> = masses.iter().copied().filter(|&m| m > 0.0).collect();
    if positive.is_empty() {
        return 0.0;
    }
    entropy(&positive).exp() / positive.len() as f64
}

/// Shortest score-ordered prefix whose mass reaches the diffuseness-dependent target.
pub fn adaptive_support(scores: &[DimensionScore], config: &SelectorConfig) -> SupportSelection {
    let masses: Vec<f64> = scores.iter().map(|s| s.mass).collect();
    let mut order: Vec<usize> = (0..scores.len()).filter(|&j| scores[j].mass > 0.0).collect();
    if order.is_empty() {
        return SupportSelection {
            support: Vec::new(),
            indices: Vec::new(),
            diffuseness: 0.0,
            target_mass: 0.0,
            covered_mass: 0.0,
        };
    }
    let delta = diffuseness(&masses);
    let q = target_mass(delta, config);
    order.sort_by(|&a, &b| {
        scores[b]
            .rho_norm
            .total_cmp(&scores[a].rho_norm)
            .then(scores[a].key.cmp(&scores[b].key))
    });
    let mut covered = 0.0;
    let mut len = order.len();
    for (i, &j) in order.iter().enumerate() {
        covered += scores[j].mass;
        if covered >= q {
            len = i + 1;
            break;
        }
    }
    order.truncate(len);
    SupportSelection {
        support: order.iter().map(|&j| scores[j].key).collect(),
        covered_mass: order.iter().map(|&j| scores[j].mass).sum(),
        indices: order,
        diffuseness: delta,
        target_mass: q,
    }
}

/// Lower-bounded weights over the full representation; zero off the support.
pub fn soft_weights(selection: &SupportSelection, scores: &[DimensionScore], config: &SelectorConfig) -> Vec<f64> {
    let mut w = vec![0.0; scores.len()];
    for &j in &selection.indices {
        w[j] = config.eta + (1.0 - config.eta) * scores[j].rho_norm.powf(config.kappa);
    }
    w
}
