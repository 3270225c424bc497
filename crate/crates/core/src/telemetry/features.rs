use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::{ClassLabel, TelemetryRecord};
use crate::error::{Error, Result};
use crate::numeric::entropy;
use crate::routing::DeploymentProfile;

/// Normalized loads below this are not counted as active experts.
const ACTIVE_FLOOR: f64 = 1e-15;

/// Per-layer structural statistic, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatName {
    ActRate,
    EffRate,
    CovGap,
    CovConc,
}

impl StatName {
    pub const ALL: [StatName; 4] = [StatName::ActRate, StatName::EffRate, StatName::CovGap, StatName::CovConc];

    pub fn as_str(self) -> &'static str {
        match self {
            StatName::ActRate => "act_rate",
            StatName::EffRate => "eff_rate",
            StatName::CovGap => "cov_gap",
            StatName::CovConc => "cov_conc",
        }
    }

    /// Rates are the basic statistics; gap and concentration are residuals.
    pub fn is_rate(self) -> bool {
        matches!(self, StatName::ActRate | StatName::EffRate)
    }
}

impl FromStr for StatName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown statistic {s:?}")))
    }
}

/// Identity of one representation dimension within a deployment profile.
///
/// The derived ordering is the canonical feature order: every raw key (by
/// layer, then expert) precedes every statistic key (by layer, then statistic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureKey {
    Raw { layer: usize, expert: usize },
    Stat { layer: usize, stat: StatName },
}

impl FeatureKey {
    pub fn layer(&self) -> usize {
        match *self {
            FeatureKey::Raw { layer, .. } | FeatureKey::Stat { layer, .. } => layer,
        }
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKey::Raw { layer, expert } => write!(f, "raw:L{layer}:E{expert}"),
            FeatureKey::Stat { layer, stat } => write!(f, "stat:L{layer}:{}", stat.as_str()),
        }
    }
}

impl FromStr for FeatureKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("malformed feature key {s:?}"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let layer = parts
            .next()
            .and_then(|p| p.strip_prefix('L'))
            .and_then(|p| p.parse().ok())
            .ok_or_else(bad)?;
        let last = parts.next().ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        match kind {
            "raw" => {
                let expert = last.strip_prefix('E').and_then(|p| p.parse().ok()).ok_or_else(bad)?;
                Ok(FeatureKey::Raw { layer, expert })
            }
            "stat" => Ok(FeatureKey::Stat {
                layer,
                stat: last.parse()?,
            }),
            _ => Err(bad()),
        }
    }
}

impl From<FeatureKey> for String {
    fn from(k: FeatureKey) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for FeatureKey {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Canonical key list of a profile: `sum(E_l)` raw keys, then `4 L` stat keys.
pub fn feature_keys(profile: &DeploymentProfile) -> Vec<FeatureKey> {
    let mut keys = Vec::with_capacity(profile.feature_dim());
    for (i, &e_l) in profile.experts_per_layer.iter().enumerate() {
        keys.extend((0..e_l).map(|expert| FeatureKey::Raw { layer: i + 1, expert }));
    }
    for layer in 1..=profile.num_layers {
        keys.extend(StatName::ALL.into_iter().map(|stat| FeatureKey::Stat { layer, stat }));
    }
    keys
}

/// Divide each load by the layer total. An all-zero layer stays all-zero.
pub fn normalize_loads(loads: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = loads.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Input(format!("load {v} must be finite and non-negative")));
    }
    let total: f64 = loads.iter().sum();
    if total > 0.0 {
        Ok(loads.iter().map(|v| v / total).collect())
    } else {
        Ok(vec![0.0; loads.len()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerStats {
    pub act_rate: f64,
    pub eff_rate: f64,
    pub cov_gap: f64,
    pub cov_conc: f64,
}

impl LayerStats {
    pub fn get(&self, stat: StatName) -> f64 {
        match stat {
            StatName::ActRate => self.act_rate,
            StatName::EffRate => self.eff_rate,
            StatName::CovGap => self.cov_gap,
            StatName::CovConc => self.cov_conc,
        }
    }
}

/// Activation coverage, entropy-effective rate, coverage gap and coverage
/// concentration of one normalized layer. All four are zero for an
/// unobserved (all-zero) layer.
pub fn layer_structural_stats(p: &[f64], num_experts: usize, eps_cov: f64) -> LayerStats {
    let active = p.iter().filter(|&&v| v > ACTIVE_FLOOR).count();
    if active == 0 || num_experts == 0 {
        return LayerStats::default();
    }
    let e = num_experts as f64;
    let act_rate = active as f64 / e;
    let eff_rate = entropy(p).exp() / e;
    LayerStats {
        act_rate,
        eff_rate,
        cov_gap: act_rate - eff_rate,
        cov_conc: 1.0 - eff_rate / (act_rate + eps_cov),
    }
}

/// The unified representation of one request.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestFeatureVector {
    pub profile_id: String,
    pub request_id: String,
    pub group_id: String,
    pub class_label: ClassLabel,
    pub domain: String,
    pub wrapper: Option<String>,
    pub keys: Vec<FeatureKey>,
    pub values: Vec<f64>,
}

pub fn assemble_representation(record: &TelemetryRecord, profile: &DeploymentProfile) -> Result<RequestFeatureVector> {
    if record.profile_id != profile.profile_id {
        return Err(Error::Alignment(format!(
            "record {} belongs to profile {:?}; features are only aligned within {:?}",
            record.request_id, record.profile_id, profile.profile_id
        )));
    }
    record.validate(profile)?;

    let mut raw = Vec::with_capacity(profile.feature_dim());
    let mut stats = Vec::with_capacity(4 * profile.num_layers);
    for (i, &e_l) in profile.experts_per_layer.iter().enumerate() {
        let layer_id = i + 1;
        let p = normalize_loads(&record.dense_layer(layer_id, e_l))?;
        let s = layer_structural_stats(&p, e_l, profile.eps_cov);
        raw.extend_from_slice(&p);
        stats.extend(StatName::ALL.into_iter().map(|n| s.get(n)));
    }
    raw.extend(stats);

    Ok(RequestFeatureVector {
        profile_id: profile.profile_id.clone(),
        request_id: record.request_id.clone(),
        group_id: record.group_id.clone(),
        class_label: record.class_label,
        domain: record.domain.clone(),
        wrapper: record.wrapper.clone(),
        keys: feature_keys(profile),
        values: raw,
    })
}
