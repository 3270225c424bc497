use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{mean, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegularizerConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub c_ref: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eps_sep: f64,
}

impl Default for RegularizerConfig {
    fn default() -> Self {
        RegularizerConfig {
            c_min: 0.03,
            c_max: 0.30,
            c_ref: 0.10,
            alpha: 12.0,
            beta: 1.0,
            gamma: 0.65,
            eps_sep: 1e-6,
        }
    }
}

impl RegularizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c_min && self.c_min <= self.c_ref && self.c_ref <= self.c_max) {
            return Err(Error::Configuration(format!(
                "need 0 < c_min <= c_ref <= c_max, got {} / {} / {}",
                self.c_min, self.c_ref, self.c_max
            )));
        }
        if !(self.eps_sep > 0.0) {
            return Err(Error::Configuration("eps_sep must be positive".into()));
        }
        Ok(())
    }
}

/// Source-validation margin summary that drives the choice of C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginStats {
    pub delta_sep: f64,
    pub r_sub: f64,
    pub benign_mean: f64,
    pub subset_means: BTreeMap<String, f64>,
}

/// Weakest subset separation from the benign mean, and the subset spread relative to it.
pub fn source_margin_stats(
    benign: &[f64],
    subsets: &BTreeMap<String, Vec<f64>>,
    eps_sep: f64,
) -> Result<MarginStats> {
    if benign.is_empty() {
        return Err(Error::Protocol("margin statistics need benign validation samples".into()));
    }
    if subsets.is_empty() {
        return Err(Error::Protocol("margin statistics need at least one positive subset".into()));
    }
    if let Some((name, _)) = subsets.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Protocol(format!("positive subset {name} has no validation samples")));
    }
    let mu0 = mean(benign.iter().copied());
    let subset_means: BTreeMap<String, f64> = subsets
        .iter()
        .map(|(k, v)| (k.clone(), mean(v.iter().copied())))
        .collect();
    let lo = subset_means.values().copied().fold(f64::INFINITY, f64::min);
    let hi = subset_means.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta_sep = lo - mu0;
    let r_sub = if subsets.len() == 1 {
        0.0
    } else {
        (hi - lo) / (delta_sep.abs() + eps_sep)
    };
    Ok(MarginStats {
        delta_sep,
        r_sub,
        benign_mean: mu0,
        subset_means,
    })
}

pub fn adaptive_regularization_strength(delta_sep: f64, r_sub: f64, config: &RegularizerConfig) -> f64 {
    let s = sigmoid(config.alpha * (delta_sep - config.beta * r_sub - config.gamma));
    config.c_min * (config.c_max / config.c_min).powf(s)
}
