use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selector::SelectorReport;
use crate::telemetry::{FeatureKey, FeatureMatrix, SplitRole, StatName};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformConfig {
    pub w_raw: f64,
    pub w_rate: f64,
    pub w_res: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            w_raw: 1.0,
            w_rate: 0.75,
            w_res: 0.25,
        }
    }
}

impl TransformConfig {
    pub fn block_weight(&self, key: &FeatureKey) -> f64 {
        match key {
            FeatureKey::Raw { .. } => self.w_raw,
            FeatureKey::Stat { stat, .. } if stat.is_rate() => self.w_rate,
            FeatureKey::Stat {
                stat: StatName::CovGap | StatName::CovConc,
                ..
            } => self.w_res,
            FeatureKey::Stat { .. } => unreachable!("every statistic is a rate or a residual"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.w_raw, self.w_rate, self.w_res].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Configuration("block weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Frozen column restriction, max-abs scaling and per-column weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub support: Vec<FeatureKey>,
    /// Column of each support key in the full representation.
    pub indices: Vec<usize>,
    pub input_dim: usize,
    pub divisors: Vec<f64>,
    /// Selector weight times block weight.
    pub weights: Vec<f64>,
}

pub fn fit_transform(train: &FeatureMatrix, selector: &SelectorReport, config: &TransformConfig) -> Result<FeatureTransform> {
    train.require_role(SplitRole::SourceTrain, "transform fitting")?;
    config.validate()?;
    let sel = &selector.selection;
    if sel.is_empty() {
        return Err(Error::Configuration("selector returned an empty support".into()));
    }
    if train.is_empty() {
        return Err(Error::Configuration("transform fitting needs source training rows".into()));
    }
    for (&j, key) in sel.indices.iter().zip(&sel.support) {
        if train.keys.get(j) != Some(key) {
            return Err(Error::Alignment(format!("support key {key} is not column {j} of the training matrix")));
        }
    }
    let divisors = sel
        .indices
        .iter()
        .map(|&j| {
            let max = train.rows.iter().fold(0.0f64, |m, r| m.max(r[j].abs()));
            if max > 0.0 {
                max
            } else {
                1.0
            }
        })
        .collect();
    let weights = sel
        .support
        .iter()
        .zip(&selector.weights)
        .map(|(k, w)| w * config.block_weight(k))
        .collect();
    Ok(FeatureTransform {
        support: sel.support.clone(),
        indices: sel.indices.clone(),
        input_dim: train.n_cols(),
        divisors,
        weights,
    })
}

impl FeatureTransform {
    /// Transform one full-length representation vector.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.input_dim {
            return Err(Error::Alignment(format!(
                "transform expects {} features, got {}",
                self.input_dim,
                values.len()
            )));
        }
        Ok(self
            .indices
            .iter()
            .zip(self.divisors.iter().zip(&self.weights))
            .map(|(&j, (d, w))| w * values[j] / d)
            .collect())
    }

    pub fn apply_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        for (&j, key) in self.indices.iter().zip(&self.support) {
            if matrix.keys.get(j) != Some(key) || matrix.n_cols() != self.input_dim {
                return Err(Error::Alignment(format!(
                    "matrix of profile {} does not carry support key {key} at column {j}",
                    matrix.profile_id
                )));
            }
        }
        matrix.rows.iter().map(|r| self.apply(r)).collect()
    }
}

pub fn apply_transform(t: &FeatureTransform, values: &[f64]) -> Result<Vec<f64>> {
    t.apply(values)
}
