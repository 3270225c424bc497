use serde::{Deserialize, Serialize};

use super::features::{assemble_representation, FeatureKey, RequestFeatureVector};
use super::record::{ClassLabel, TelemetryRecord};
use crate::error::{Error, Result};
use crate::routing::DeploymentProfile;

/// Which part of an evaluation fold a matrix was built from. Fitting stages
/// check the tag and refuse target data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRole {
    SourceTrain,
    SourceValidation,
    Target,
    Unassigned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowMeta {
    pub request_id: String,
    pub group_id: String,
    pub class_label: ClassLabel,
    pub domain: String,
    pub wrapper: Option<String>,
}

/// Row-major feature matrix sharing one key order, tagged with its split role.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub profile_id: String,
    pub keys: Vec<FeatureKey>,
    pub role: SplitRole,
    pub rows: Vec<Vec<f64>>,
    pub meta: Vec<RowMeta>,
}

pub fn featurize_all(records: &[TelemetryRecord], profile: &DeploymentProfile) -> Result<Vec<RequestFeatureVector>> {
    records.iter().map(|r| assemble_representation(r, profile)).collect()
}

impl FeatureMatrix {
    pub fn from_vectors<'a>(
        vectors: impl IntoIterator<Item = &'a RequestFeatureVector>,
        keys: &[FeatureKey],
        profile_id: &str,
        role: SplitRole,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        let mut meta = Vec::new();
        for v in vectors {
            if v.profile_id != profile_id || v.keys != keys {
                return Err(Error::Alignment(format!(
                    "request {} does not share the key order of profile {}",
                    v.request_id, profile_id
                )));
            }
            rows.push(v.values.clone());
            meta.push(RowMeta {
                request_id: v.request_id.clone(),
                group_id: v.group_id.clone(),
                class_label: v.class_label,
                domain: v.domain.clone(),
                wrapper: v.wrapper.clone(),
            });
        }
        Ok(FeatureMatrix {
            profile_id: profile_id.to_string(),
            keys: keys.to_vec(),
            role,
            rows,
            meta,
        })
    }

    pub fn from_records(records: &[TelemetryRecord], profile: &DeploymentProfile, role: SplitRole) -> Result<Self> {
        let vectors = featurize_all(records, profile)?;
        Self::from_vectors(&vectors, &super::feature_keys(profile), &profile.profile_id, role)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.meta.iter().map(|m| m.class_label.is_positive()).collect()
    }

    /// Fail with a leakage error unless the matrix carries the expected role.
    pub fn require_role(&self, expected: SplitRole, stage: &str) -> Result<()> {
        if self.role != expected {
            return Err(Error::Leakage(format!(
                "{stage} expects {expected:?} data but received a {:?} matrix",
                self.role
            )));
        }
        Ok(())
    }

    /// Rows satisfying `keep`, under a new role.
    pub fn filter(&self, role: SplitRole, mut keep: impl FnMut(&RowMeta) -> bool) -> FeatureMatrix {
        let (rows, meta) = self
            .rows
            .iter()
            .zip(&self.meta)
            .filter(|(_, m)| keep(m))
            .map(|(r, m)| (r.clone(), m.clone()))
            .unzip();
        FeatureMatrix {
            profile_id: self.profile_id.clone(),
            keys: self.keys.clone(),
            role,
            rows,
            meta,
        }
    }
}
