use serde::{Deserialize, Serialize};

use super::stats::{invariance_score, DimensionStats};
use crate::error::{Error, Result};
use crate::telemetry::FeatureKey;

/// Every factor of one dimension's hybrid score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionScore {
    pub key: FeatureKey,
    pub invariance: f64,
    pub auc_score: f64,
    pub stability: f64,
    pub consistency: f64,
    pub disc: f64,
    pub cons: f64,
    pub prior: f64,
    pub layer_prior: f64,
    pub edge_penalty: f64,
    pub rho: f64,
    /// Score divided by the largest positive score; 0 for non-positive scores.
    pub rho_norm: f64,
    /// Share of the total positive score mass.
    pub mass: f64,
}

pub fn layer_prior(layer: usize, num_layers: usize) -> f64 {
    if num_layers <= 1 {
        1.0
    } else {
        1.0 - 0.5 * (layer as f64 - 1.0) / (num_layers as f64 - 1.0)
    }
}

pub fn edge_penalty(direction: i8, edge_mean: Option<f64>, benign_mean: f64) -> f64 {
    match edge_mean {
        Some(edge) => (direction as f64 * (edge - benign_mean)).max(0.0),
        None => 0.0,
    }
}

pub fn discriminative_factor(auc_score: f64, invariance: f64) -> f64 {
    (auc_score.max(0.0) * invariance.max(0.0)).sqrt()
}

pub fn consistency_factor(consistency: f64, stability: f64) -> f64 {
    (0.5 + 0.5 * consistency) * (0.5 + 0.5 * stability)
}

pub fn prior_factor(layer_prior: f64, edge_penalty: f64) -> f64 {
    layer_prior / (1.0 + 0.25 * edge_penalty)
}

/// Combine the per-dimension evidence into hybrid scores, then normalize the
/// positive part by its maximum and by its sum.
pub fn hybrid_score(
    keys: &[FeatureKey],
    stats: &DimensionStats,
    auc_scores: &[f64],
    stability: &[f64],
    num_layers: usize,
) -> Result<Vec<DimensionScore>> {
    let d = keys.len();
    if stats.n_dims() != d || auc_scores.len() != d || stability.len() != d {
        return Err(Error::Alignment(format!(
            "score inputs disagree on dimension count ({}, {}, {}, {})",
            d,
            stats.n_dims(),
            auc_scores.len(),
            stability.len()
        )));
    }
    let mut scores: Vec<DimensionScore> = (0..d)
        .map(|j| {
            let invariance = invariance_score(
                stats.pooled_gap[j],
                stats.consistency[j],
                stats.gap_std[j],
                stats.domain_std[j],
            );
            let lambda = layer_prior(keys[j].layer(), num_layers);
            let edge = edge_penalty(
                stats.direction[j],
                stats.edge_mean.as_ref().map(|m| m[j]),
                stats.benign_mean[j],
            );
            let disc = discriminative_factor(auc_scores[j], invariance);
            let cons = consistency_factor(stats.consistency[j], stability[j]);
            let prior = prior_factor(lambda, edge);
            DimensionScore {
                key: keys[j],
                invariance,
                auc_score: auc_scores[j],
                stability: stability[j],
                consistency: stats.consistency[j],
                disc,
                cons,
                prior,
                layer_prior: lambda,
                edge_penalty: edge,
                rho: disc * cons * prior,
                rho_norm: 0.0,
                mass: 0.0,
            }
        })
        .collect();
    normalize_scores(&mut scores);
    Ok(scores)
}

/// Fill `rho_norm` and `mass` from `rho`.
pub fn normalize_scores(scores: &mut [DimensionScore]) {
    let positive = |s: &DimensionScore| s.rho.max(0.0);
    let max = scores.iter().map(positive).fold(0.0, f64::max);
    let total: f64 = scores.iter().map(positive).sum();
    for s in scores.iter_mut() {
        let r = positive(s);
        if r > 0.0 {
            s.rho_norm = r / max;
            s.mass = r / total;
        } else {
            s.rho_norm = 0.0;
            s.mass = 0.0;
        }
    }
}
