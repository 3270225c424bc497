//! Desk-scale simulation of prefilling-phase expert routing.
//!
//! Router logits are gated with a sparse top-K softmax, the per-expert token
//! counts of each layer form the expert-load vector, and the thread-count proxy
//! turns loads into the telemetry an auditor would observe on the GPU.

mod corpus;
mod gating;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corpus::{generate_scenario_corpus, generate_synthetic_corpus, ScenarioCorpusSpec, SyntheticCorpusSpec};
pub use gating::{accumulate_loads, route_topk, thread_proxy, ExpertLoadVector, RouterLogits, RoutingDecision};

fn default_eps_cov() -> f64 {
    1e-9
}

fn default_thread_scale() -> f64 {
    256.0
}

/// MoE topology of one model/hardware deployment plus the constants that
/// depend on it. Features are only ever aligned within one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentProfile {
    pub profile_id: String,
    pub num_layers: usize,
    pub experts_per_layer: Vec<usize>,
    pub top_k_per_layer: Vec<usize>,
    #[serde(default = "default_eps_cov")]
    pub eps_cov: f64,
    /// Threads launched per routed token.
    #[serde(default = "default_thread_scale")]
    pub thread_scale: f64,
    #[serde(default)]
    pub thread_noise_std: f64,
}

impl DeploymentProfile {
    /// A profile with the same expert count and top-K on every layer.
    pub fn uniform(profile_id: impl Into<String>, num_layers: usize, experts: usize, top_k: usize) -> Self {
        DeploymentProfile {
            profile_id: profile_id.into(),
            num_layers,
            experts_per_layer: vec![experts; num_layers],
            top_k_per_layer: vec![top_k; num_layers],
            eps_cov: default_eps_cov(),
            thread_scale: default_thread_scale(),
            thread_noise_std: 0.0,
        }
    }

    pub fn with_thread_noise(mut self, std: f64) -> Self {
        self.thread_noise_std = std;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::Topology("profile has no layers".into()));
        }
        if self.experts_per_layer.len() != self.num_layers || self.top_k_per_layer.len() != self.num_layers {
            return Err(Error::Topology(format!(
                "profile {} declares {} layers but lists {} expert counts and {} top-K values",
                self.profile_id,
                self.num_layers,
                self.experts_per_layer.len(),
                self.top_k_per_layer.len()
            )));
        }
        for (i, (&e, &k)) in self.experts_per_layer.iter().zip(&self.top_k_per_layer).enumerate() {
            if e == 0 || k == 0 || k > e {
                return Err(Error::Topology(format!(
                    "layer {}: top-K {} must be in [1, {}]",
                    i + 1,
                    k,
                    e
                )));
            }
        }
        if !(self.eps_cov > 0.0) || !(self.thread_scale > 0.0) || !(self.thread_noise_std >= 0.0) {
            return Err(Error::Configuration(
                "eps_cov and thread_scale must be positive, thread_noise_std non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Expert count of a 1-based layer id.
    pub fn experts(&self, layer_id: usize) -> Result<usize> {
        layer_id
            .checked_sub(1)
            .and_then(|i| self.experts_per_layer.get(i).copied())
            .ok_or_else(|| Error::Topology(format!("layer {} outside [1, {}]", layer_id, self.num_layers)))
    }

    pub fn top_k(&self, layer_id: usize) -> Result<usize> {
        layer_id
            .checked_sub(1)
            .and_then(|i| self.top_k_per_layer.get(i).copied())
            .ok_or_else(|| Error::Topology(format!("layer {} outside [1, {}]", layer_id, self.num_layers)))
    }

    /// Representation width: total experts plus four statistics per layer.
    pub fn feature_dim(&self) -> usize {
        self.experts_per_layer.iter().sum::<usize>() + 4 * self.num_layers
    }
}
