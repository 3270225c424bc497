use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DeploymentProfile;
use crate::error::{Error, Result};

/// Unnormalized router logits of one layer, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct RouterLogits {
    pub layer_id: usize,
    num_experts: usize,
    values: Vec<f64>,
}

impl RouterLogits {
    pub fn new(layer_id: usize, num_experts: usize, values: Vec<f64>) -> Result<Self> {
        if num_experts == 0 || values.len() % num_experts != 0 {
            return Err(Error::Topology(format!(
                "{} logits do not form rows of {} experts",
                values.len(),
                num_experts
            )));
        }
        Ok(RouterLogits {
            layer_id,
            num_experts,
            values,
        })
    }

    pub fn from_rows(layer_id: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let num_experts = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_experts) {
            return Err(Error::Topology("ragged logit rows".into()));
        }
        if rows.is_empty() {
            return Err(Error::Topology("cannot infer expert count from zero tokens".into()));
        }
        Self::new(layer_id, num_experts, rows.concat())
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn num_tokens(&self) -> usize {
        self.values.len() / self.num_experts
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_experts)
    }
}

/// Per-token selected experts and their sparse-softmax gating weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingDecision {
    /// Selected expert indices per token, in descending logit order.
    pub selected: Vec<Vec<usize>>,
    /// Dense gating rows (zero outside the selected set).
    pub weights: Vec<Vec<f64>>,
}

/// Tokens processed by each expert of one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertLoadVector {
    pub layer_id: usize,
    pub loads: Vec<u64>,
}

impl ExpertLoadVector {
    pub fn total(&self) -> u64 {
        self.loads.iter().sum()
    }
}

/// Sparse top-K gating: keep the `k` largest logits per token (ties go to the
/// lower expert index) and softmax over the kept set only.
pub fn route_topk(logits: &RouterLogits, k: usize) -> Result<RoutingDecision> {
    let m = logits.num_experts();
    if k == 0 || k > m {
        return Err(Error::Topology(format!("top-K {} outside [1, {}]", k, m)));
    }
    if let Some(bad) = logits.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!(
            "non-finite router logit {} in layer {}",
            bad, logits.layer_id
        )));
    }

    let mut selected = Vec::with_capacity(logits.num_tokens());
    let mut weights = Vec::with_capacity(logits.num_tokens());
    let mut order: Vec<usize> = Vec::with_capacity(m);
    for row in logits.rows() {
        order.clear();
        order.extend(0..m);
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        let chosen = order[..k].to_vec();

        let top = row[chosen[0]];
        let mut w = vec![0.0; m];
        let mut z = 0.0;
        for &i in &chosen {
            let e = (row[i] - top).exp();
            w[i] = e;
            z += e;
        }
        for &i in &chosen {
            w[i] /= z;
        }
        selected.push(chosen);
        weights.push(w);
    }
    Ok(RoutingDecision { selected, weights })
}

/// Count, for every expert, the tokens whose selected set contains it.
pub fn accumulate_loads(decision: &RoutingDecision, layer_id: usize, num_experts: usize) -> Result<ExpertLoadVector> {
    let mut loads = vec![0u64; num_experts];
    for set in &decision.selected {
        for &i in set {
            let slot = loads.get_mut(i).ok_or_else(|| {
                Error::Topology(format!("expert index {} outside [0, {})", i, num_experts))
            })?;
            *slot += 1;
        }
    }
    Ok(ExpertLoadVector { layer_id, loads })
}

/// Active-thread proxy for expert loads: `max(0, c * load + noise)` with
/// zero-mean Gaussian noise of the profile's standard deviation.
pub fn thread_proxy(loads: &ExpertLoadVector, profile: &DeploymentProfile, seed: u64) -> Result<Vec<f64>> {
    let expected = profile.experts(loads.layer_id)?;
    if loads.loads.len() != expected {
        return Err(Error::Topology(format!(
            "layer {} has {} experts, load vector has {}",
            loads.layer_id,
            expected,
            loads.loads.len()
        )));
    }
    let scale = profile.thread_scale;
    if profile.thread_noise_std == 0.0 {
        return Ok(loads.loads.iter().map(|&l| scale * l as f64).collect());
    }
    let noise = Normal::new(0.0, profile.thread_noise_std)
        .map_err(|e| Error::Configuration(format!("thread noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(loads
        .loads
        .iter()
        .map(|&l| (scale * l as f64 + noise.sample(&mut rng)).max(0.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::normalize_loads;
    use proptest::prelude::*;
    use rand::Rng;

    fn single(z: &[f64]) -> RouterLogits {
        RouterLogits::from_rows(1, &[z.to_vec()]).unwrap()
    }

    /// Softmax over an explicit index set, written out directly.
    fn restricted_softmax(z: &[f64], set: &[usize]) -> Vec<f64> {
        let denom: f64 = set.iter().map(|&i| z[i].exp()).sum();
        (0..z.len())
            .map(|i| if set.contains(&i) { z[i].exp() / denom } else { 0.0 })
            .collect()
    }

    #[test]
    fn top2_of_three() {
        let d = route_topk(&single(&[3.0, 1.0, 2.0]), 2).unwrap();
        let mut s = d.selected[0].clone();
        s.sort();
        assert_eq!(s, vec![0, 2]);
        let oracle = restricted_softmax(&[3.0, 1.0, 2.0], &[0, 2]);
        for (w, o) in d.weights[0].iter().zip(&oracle) {
            assert!((w - o).abs() < 1e-12);
        }
        assert!((d.weights[0][0] - 0.73106).abs() < 1e-5);
        assert!((d.weights[0][2] - 0.26894).abs() < 1e-5);
        assert_eq!(d.weights[0][1], 0.0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let d = route_topk(&single(&[1.0, 1.0, 0.0]), 1).unwrap();
        assert_eq!(d.selected[0], vec![0]);
        assert_eq!(d.weights[0], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn full_k_is_dense_softmax() {
        let z = [0.3, -1.2, 2.5];
        let d = route_topk(&single(&z), 3).unwrap();
        let oracle = restricted_softmax(&z, &[0, 1, 2]);
        for (w, o) in d.weights[0].iter().zip(&oracle) {
            assert!((w - o).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_k_and_non_finite_logits_are_rejected() {
        assert!(matches!(route_topk(&single(&[1.0, 2.0]), 3), Err(Error::Topology(_))));
        assert!(matches!(route_topk(&single(&[1.0, 2.0]), 0), Err(Error::Topology(_))));
        assert!(matches!(
            route_topk(&single(&[1.0, f64::NAN]), 1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn loads_count_selections() {
        let decision = RoutingDecision {
            selected: vec![vec![0, 1], vec![0, 2], vec![0, 1]],
            weights: vec![],
        };
        assert_eq!(accumulate_loads(&decision, 1, 3).unwrap().loads, vec![3, 2, 1]);
        let empty = RoutingDecision {
            selected: vec![],
            weights: vec![],
        };
        assert_eq!(accumulate_loads(&empty, 1, 3).unwrap().loads, vec![0, 0, 0]);
        let bad = RoutingDecision {
            selected: vec![vec![3]],
            weights: vec![],
        };
        assert!(matches!(accumulate_loads(&bad, 1, 3), Err(Error::Topology(_))));
    }

    #[test]
    fn load_total_is_tokens_times_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..50 * 8).map(|_| rng.random_range(-3.0..3.0)).collect();
        let logits = RouterLogits::new(1, 8, values).unwrap();
        let d = route_topk(&logits, 2).unwrap();
        assert_eq!(accumulate_loads(&d, 1, 8).unwrap().total(), 100);
    }

    #[test]
    fn thread_proxy_is_proportional_without_noise() {
        let mut profile = DeploymentProfile::uniform("p", 1, 2, 1);
        profile.thread_scale = 100.0;
        let loads = ExpertLoadVector {
            layer_id: 1,
            loads: vec![1, 2],
        };
        let n = thread_proxy(&loads, &profile, 0).unwrap();
        assert_eq!(n, vec![100.0, 200.0]);
        assert_eq!(
            normalize_loads(&n).unwrap(),
            normalize_loads(&[1.0, 2.0]).unwrap()
        );
    }

    #[test]
    fn thread_proxy_replays_with_same_seed() {
        let profile = DeploymentProfile::uniform("p", 1, 2, 1).with_thread_noise(5.0);
        let loads = ExpertLoadVector {
            layer_id: 1,
            loads: vec![0, 10],
        };
        let a = thread_proxy(&loads, &profile, 42).unwrap();
        let b = thread_proxy(&loads, &profile, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v >= 0.0));
        assert_ne!(a, thread_proxy(&loads, &profile, 43).unwrap());
    }

    proptest! {
        #[test]
        fn weights_are_sparse_and_normalized(
            row in prop::collection::vec(-20.0f64..20.0, 1..12),
            k_frac in 0.0f64..1.0,
        ) {
            let m = row.len();
            let k = 1 + ((m - 1) as f64 * k_frac) as usize;
            let d = route_topk(&single(&row), k).unwrap();
            let w = &d.weights[0];
            prop_assert_eq!(d.selected[0].len(), k);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (i, &wi) in w.iter().enumerate() {
                prop_assert!(wi >= 0.0);
                if !d.selected[0].contains(&i) {
                    prop_assert_eq!(wi, 0.0);
                }
            }
        }

        #[test]
        fn permuting_logits_permutes_weights(
            row in prop::collection::hash_set(-1000i32..1000, 2..10),
            seed in any::<u64>(),
        ) {
            // distinct logits so the tie-break does not interfere
            let row: Vec<f64> = row.into_iter().map(|v| v as f64 / 100.0).collect();
            let m = row.len();
            let mut perm: Vec<usize> = (0..m).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..m).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let permuted: Vec<f64> = perm.iter().map(|&p| row[p]).collect();
            let k = (m / 2).max(1);
            let a = route_topk(&single(&row), k).unwrap();
            let b = route_topk(&single(&permuted), k).unwrap();
            for (i, &p) in perm.iter().enumerate() {
                prop_assert!((b.weights[0][i] - a.weights[0][p]).abs() < 1e-12);
            }
        }

        #[test]
        fn thread_ratio_equals_scale_without_noise(loads in prop::collection::vec(0u64..500, 1..16)) {
            let profile = DeploymentProfile::uniform("p", 1, loads.len(), 1);
            let v = ExpertLoadVector { layer_id: 1, loads: loads.clone() };
            let n = thread_proxy(&v, &profile, 1).unwrap();
            for (ni, &l) in n.iter().zip(&loads) {
                if l > 0 {
                    prop_assert!((ni / l as f64 - profile.thread_scale).abs() < 1e-9);
                }
            }
        }
    }
}
