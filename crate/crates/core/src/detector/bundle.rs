use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::calibration::{calibrated_score, fit_platt, CalibrationModel};
use super::logistic::{fit_logistic, raw_margin, DetectorModel};
use super::regularization::{adaptive_regularization_strength, source_margin_stats, MarginStats, RegularizerConfig};
use super::transform::{fit_transform, FeatureTransform, TransformConfig};
use crate::error::{Error, Result};
use crate::selector::SelectorReport;
use crate::telemetry::{FeatureMatrix, SplitRole};

/// Positive subset name to the request ids it contains.
pub type PositivePartition = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub transform: TransformConfig,
    pub regularizer: RegularizerConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizationChoice {
    pub c: f64,
    pub c_ref: f64,
    #[serde(flatten)]
    pub margins: MarginStats,
}

/// Everything needed to score new telemetry, fitted on source data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorBundle {
    pub profile_id: String,
    pub transform: FeatureTransform,
    pub model: DetectorModel,
    pub regularization: RegularizationChoice,
    pub calibration: CalibrationModel,
    pub provenance: Provenance,
}

impl DetectorBundle {
    pub fn margins(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        if matrix.profile_id != self.profile_id {
            return Err(Error::Alignment(format!(
                "bundle fitted for profile {} cannot score profile {}",
                self.profile_id, matrix.profile_id
            )));
        }
        self.transform
            .apply_matrix(matrix)?
            .iter()
            .map(|x| raw_margin(&self.model, x))
            .collect()
    }

    /// Calibrated risk scores (raw margins under the identity fallback).
    pub fn scores(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(self
            .margins(matrix)?
            .into_iter()
            .map(|m| calibrated_score(&self.calibration, m))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Validation margins grouped into benign and per-subset positives.
fn group_margins(
    margins: &[f64],
    validation: &FeatureMatrix,
    partition: &PositivePartition,
) -> Result<(Vec<f64>, BTreeMap<String, Vec<f64>>)> {
    let mut benign = Vec::new();
    let mut subsets: BTreeMap<String, Vec<f64>> = partition.keys().map(|k| (k.clone(), Vec::new())).collect();
    for (m, meta) in margins.iter().zip(&validation.meta) {
        if !meta.class_label.is_positive() {
            benign.push(*m);
            continue;
        }
        let name = partition
            .iter()
            .find(|(_, ids)| ids.contains(&meta.request_id))
            .map(|(k, _)| k)
            .ok_or_else(|| {
                Error::Protocol(format!("positive validation request {} belongs to no positive subset", meta.request_id))
            })?;
        subsets.get_mut(name).expect("initialized from partition").push(*m);
    }
    Ok((benign, subsets))
}

fn check_disjoint(partition: &PositivePartition) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (name, ids) in partition {
        if let Some(id) = ids.iter().find(|id| !seen.insert(*id)) {
            return Err(Error::Protocol(format!("request {id} appears in more than one positive subset (second: {name})")));
        }
    }
    Ok(())
}

/// Fit the frozen detector: transform, reference fit, adaptive C, final fit, calibration.
pub fn train_audit_model(
    train: &FeatureMatrix,
    validation: &FeatureMatrix,
    partition: &PositivePartition,
    selector: &SelectorReport,
    config: &DetectorConfig,
    provenance: Provenance,
) -> Result<DetectorBundle> {
    train.require_role(SplitRole::SourceTrain, "detector training")?;
    validation.require_role(SplitRole::SourceValidation, "regularization and calibration")?;
    config.regularizer.validate()?;
    check_disjoint(partition)?;
    let train_ids: BTreeSet<&str> = train.meta.iter().map(|m| m.group_id.as_str()).collect();
    if let Some(m) = validation.meta.iter().find(|m| train_ids.contains(m.group_id.as_str())) {
        return Err(Error::Leakage(format!("group {} is in both source train and validation", m.group_id)));
    }

    let transform = fit_transform(train, selector, &config.transform).map_err(|e| e.in_stage("transform"))?;
    let x_train = transform.apply_matrix(train)?;
    let y_train = train.labels();
    let x_val = transform.apply_matrix(validation)?;

    let margins_of = |model: &DetectorModel| -> Result<Vec<f64>> { x_val.iter().map(|x| raw_margin(model, x)).collect() };

    let reference = fit_logistic(&x_train, &y_train, config.regularizer.c_ref).map_err(|e| e.in_stage("reference fit"))?;
    let (benign, subsets) = group_margins(&margins_of(&reference)?, validation, partition)?;
    let stats = source_margin_stats(&benign, &subsets, config.regularizer.eps_sep).map_err(|e| e.in_stage("margin statistics"))?;
    let c = adaptive_regularization_strength(stats.delta_sep, stats.r_sub, &config.regularizer);

    let model = fit_logistic(&x_train, &y_train, c).map_err(|e| e.in_stage("final fit"))?;
    let calibration = fit_platt(&margins_of(&model)?, &validation.labels()).map_err(|e| e.in_stage("calibration"))?;

    Ok(DetectorBundle {
        profile_id: train.profile_id.clone(),
        transform,
        model,
        regularization: RegularizationChoice {
            c,
            c_ref: config.regularizer.c_ref,
            margins: stats,
        },
        calibration,
        provenance,
    })
}
