use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::routing::DeploymentProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Benign,
    Positive,
}

impl ClassLabel {
    pub fn is_positive(self) -> bool {
        self == ClassLabel::Positive
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Benign => "benign",
            ClassLabel::Positive => "positive",
        })
    }
}

/// Aggregated prefilling telemetry of one request.
///
/// `layers` maps a 1-based layer id to the observed per-expert loads of that
/// layer. Experts absent from an observed layer count as zero load; absent
/// layers are treated as unobserved.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub request_id: String,
    pub profile_id: String,
    pub group_id: String,
    pub class_label: ClassLabel,
    pub domain: String,
    pub wrapper: Option<String>,
    pub attributes: BTreeMap<String, bool>,
    pub layers: BTreeMap<usize, BTreeMap<usize, f64>>,
}

impl TelemetryRecord {
    /// Dense per-expert loads of one layer (zeros for missing experts or layers).
    pub fn dense_layer(&self, layer_id: usize, num_experts: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_experts];
        if let Some(layer) = self.layers.get(&layer_id) {
            for (&e, &v) in layer {
                if e < num_experts {
                    out[e] = v;
                }
            }
        }
        out
    }

    pub fn set_dense_layer(&mut self, layer_id: usize, loads: &[f64]) {
        self.layers
            .insert(layer_id, loads.iter().copied().enumerate().collect());
    }

    /// Check ids, ranges and load signs against the profile.
    pub fn validate(&self, profile: &DeploymentProfile) -> Result<()> {
        if self.profile_id != profile.profile_id {
            return Err(Error::Alignment(format!(
                "record {} was collected under profile {:?}, expected {:?}",
                self.request_id, self.profile_id, profile.profile_id
            )));
        }
        for (&layer_id, experts) in &self.layers {
            let e_l = profile.experts(layer_id).map_err(|_| {
                Error::Alignment(format!(
                    "record {}: layer {} outside [1, {}]",
                    self.request_id, layer_id, profile.num_layers
                ))
            })?;
            for (&e, &v) in experts {
                if e >= e_l {
                    return Err(Error::Alignment(format!(
                        "record {}: expert {} outside [0, {}) in layer {}",
                        self.request_id, e, e_l, layer_id
                    )));
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Input(format!(
                        "record {}: load {} of layer {} expert {} must be finite and non-negative",
                        self.request_id, v, layer_id, e
                    )));
                }
            }
        }
        Ok(())
    }
}
