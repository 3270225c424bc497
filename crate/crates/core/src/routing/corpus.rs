use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::gating::{accumulate_loads, route_topk, thread_proxy, RouterLogits};
use super::DeploymentProfile;
use crate::error::{Error, Result};
use crate::numeric::{derive_seed, name_stream};
use crate::telemetry::{ClassLabel, TelemetryRecord};

// Seed streams.
const STRUCTURE: u64 = 1;
const GROUP: u64 = 2;
const RECORD: u64 = 3;

/// Spread of the per-request routing preference shared by all variants of a group.
const GROUP_LATENT_STD: f64 = 0.5;
/// Per-token logit noise.
const TOKEN_NOISE_STD: f64 = 1.0;
/// Topic offset of a domain's preferred experts (applies to both classes).
const DOMAIN_OFFSET: f64 = 1.5;
/// Share of the class bias placed on the domain's own companion expert.
const DOMAIN_BIAS_SHARE: f64 = 0.5;
const WRAPPER_OFFSET: f64 = 1.5;
/// Logit of scenario-private experts in requests of other scenarios.
const PRIVATE_FLOOR: f64 = -6.0;

/// Labelled synthetic telemetry corpus.
///
/// Every domain holds `requests_per_cell` prompt groups. A group contributes a
/// benign request, a direct positive request and one wrapped positive request
/// per wrapper, all sharing the group's length and routing preference.
/// Positive requests carry an additive logit bias of `class_bias_strength` on
/// a harmful expert subset shared by every domain, plus half that bias on one
/// companion expert specific to the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub profile: DeploymentProfile,
    pub domains: Vec<String>,
    #[serde(default)]
    pub wrappers: Vec<String>,
    pub requests_per_cell: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub class_bias_strength: f64,
    pub seed: u64,
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if self.domains.is_empty() {
            return Err(Error::Configuration("synthetic corpus needs at least one domain".into()));
        }
        check_names("domain", &self.domains)?;
        check_names("wrapper", &self.wrappers)?;
        if self.requests_per_cell == 0 {
            return Err(Error::Configuration("requests_per_cell must be at least 1".into()));
        }
        if self.min_tokens == 0 || self.max_tokens < self.min_tokens {
            return Err(Error::Configuration(format!(
                "token range [{}, {}] must be non-empty and start at 1 or more",
                self.min_tokens, self.max_tokens
            )));
        }
        if !(self.class_bias_strength >= 0.0) {
            return Err(Error::Configuration("class_bias_strength must be non-negative".into()));
        }
        Ok(())
    }
}

fn check_names(what: &str, names: &[String]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if n.is_empty() || !seen.insert(n) {
            return Err(Error::Configuration(format!("{what} names must be non-empty and unique, got {n:?}")));
        }
    }
    Ok(())
}

/// Per-layer additive logit offsets.
type Offsets = Vec<Vec<f64>>;

fn zero_offsets(profile: &DeploymentProfile) -> Offsets {
    profile.experts_per_layer.iter().map(|&e| vec![0.0; e]).collect()
}

fn add_offsets(acc: &mut Offsets, other: &Offsets, scale: f64) {
    for (a, o) in acc.iter_mut().zip(other) {
        for (x, y) in a.iter_mut().zip(o) {
            *x += scale * y;
        }
    }
}

/// `count` distinct experts drawn from `pool`, removed from it.
fn draw(pool: &mut Vec<usize>, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let count = count.min(pool.len());
    for i in 0..count {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.drain(..count).collect()
}

struct CorpusStructure {
    harmful: Offsets,
    domain_topic: Vec<Offsets>,
    domain_harmful: Vec<Offsets>,
    wrapper: Vec<Offsets>,
    wrapper_tokens: Vec<usize>,
}

impl CorpusStructure {
    fn build(spec: &SyntheticCorpusSpec) -> Self {
        let profile = &spec.profile;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[STRUCTURE]));
        let mut harmful = zero_offsets(profile);
        let mut domain_topic = vec![zero_offsets(profile); spec.domains.len()];
        let mut domain_harmful = vec![zero_offsets(profile); spec.domains.len()];
        let mut wrapper = vec![zero_offsets(profile); spec.wrappers.len()];

        for (l, &e_l) in profile.experts_per_layer.iter().enumerate() {
            let mut pool: Vec<usize> = (0..e_l).collect();
            for e in draw(&mut pool, (e_l / 8).max(1), &mut rng) {
                harmful[l][e] = 1.0;
            }
            // Domain and wrapper experts come from the non-harmful pool.
            for d in 0..spec.domains.len() {
                let mut local = pool.clone();
                for e in draw(&mut local, 2, &mut rng) {
                    domain_topic[d][l][e] = DOMAIN_OFFSET;
                }
                for e in draw(&mut local, 1, &mut rng) {
                    domain_harmful[d][l][e] = DOMAIN_BIAS_SHARE;
                }
            }
            for w in 0..spec.wrappers.len() {
                let mut local = pool.clone();
                for e in draw(&mut local, 2, &mut rng) {
                    wrapper[w][l][e] = WRAPPER_OFFSET;
                }
            }
        }
        let wrapper_tokens = (0..spec.wrappers.len()).map(|_| rng.random_range(8..=24)).collect();
        CorpusStructure {
            harmful,
            domain_topic,
            domain_harmful,
            wrapper,
            wrapper_tokens,
        }
    }
}

/// Route `tokens` tokens through every layer and record the thread-proxy loads.
fn simulate_request(
    profile: &DeploymentProfile,
    latent: &Offsets,
    offsets: &Offsets,
    tokens: usize,
    seed: u64,
) -> Result<BTreeMap<usize, BTreeMap<usize, f64>>> {
    let noise = Normal::new(0.0, TOKEN_NOISE_STD).expect("finite std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = BTreeMap::new();
    for (l, &e_l) in profile.experts_per_layer.iter().enumerate() {
        let layer_id = l + 1;
        let mut values = Vec::with_capacity(tokens * e_l);
        for _ in 0..tokens {
            for e in 0..e_l {
                values.push(latent[l][e] + offsets[l][e] + noise.sample(&mut rng));
            }
        }
        let logits = RouterLogits::new(layer_id, e_l, values)?;
        let decision = route_topk(&logits, profile.top_k_per_layer[l])?;
        let loads = accumulate_loads(&decision, layer_id, e_l)?;
        let threads = thread_proxy(&loads, profile, derive_seed(seed, &[layer_id as u64]))?;
        layers.insert(layer_id, threads.into_iter().enumerate().collect());
    }
    Ok(layers)
}

fn group_latent(profile: &DeploymentProfile, rng: &mut ChaCha8Rng) -> Offsets {
    let n = Normal::new(0.0, GROUP_LATENT_STD).expect("finite std");
    profile
        .experts_per_layer
        .iter()
        .map(|&e| (0..e).map(|_| n.sample(rng)).collect())
        .collect()
}

/// Generate the corpus; the output depends only on the spec (including its seed).
pub fn generate_synthetic_corpus(spec: &SyntheticCorpusSpec) -> Result<Vec<TelemetryRecord>> {
    spec.validate()?;
    let profile = &spec.profile;
    let structure = CorpusStructure::build(spec);
    let variants_per_group = 2 + spec.wrappers.len();
    let mut records = Vec::with_capacity(spec.domains.len() * spec.requests_per_cell * variants_per_group);

    for (d, domain) in spec.domains.iter().enumerate() {
        let domain_stream = name_stream(domain);
        for g in 0..spec.requests_per_cell {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[GROUP, domain_stream, g as u64]));
            let latent = group_latent(profile, &mut rng);
            let tokens = rng.random_range(spec.min_tokens..=spec.max_tokens);
            let group_id = format!("{domain}-{g:05}");

            let mut benign = zero_offsets(profile);
            add_offsets(&mut benign, &structure.domain_topic[d], 1.0);
            let mut positive = benign.clone();
            add_offsets(&mut positive, &structure.harmful, spec.class_bias_strength);
            add_offsets(&mut positive, &structure.domain_harmful[d], spec.class_bias_strength);

            let mut variants: Vec<(String, ClassLabel, Option<String>, Offsets, usize)> = vec![
                ("benign".into(), ClassLabel::Benign, None, benign, tokens),
                ("positive".into(), ClassLabel::Positive, None, positive.clone(), tokens),
            ];
            for (w, name) in spec.wrappers.iter().enumerate() {
                let mut wrapped = positive.clone();
                add_offsets(&mut wrapped, &structure.wrapper[w], 1.0);
                variants.push((
                    format!("wrap-{name}"),
                    ClassLabel::Positive,
                    Some(name.clone()),
                    wrapped,
                    tokens + structure.wrapper_tokens[w],
                ));
            }

            for (v, (tag, label, wrapper, offsets, t)) in variants.into_iter().enumerate() {
                let seed = derive_seed(spec.seed, &[RECORD, domain_stream, g as u64, v as u64]);
                records.push(TelemetryRecord {
                    request_id: format!("{group_id}-{tag}"),
                    profile_id: profile.profile_id.clone(),
                    group_id: group_id.clone(),
                    class_label: label,
                    domain: domain.clone(),
                    wrapper,
                    attributes: BTreeMap::new(),
                    layers: simulate_request(profile, &latent, &offsets, t, seed)?,
                });
            }
        }
    }
    Ok(records)
}

/// Scenario-templated corpus for attribute probing.
///
/// Scenario `s` owns expert `s` of every layer; those experts are effectively
/// never routed except by their own scenario's template. Half of the
/// scenarios draw the attribute with `attribute_high_rate`, the other half
/// with `attribute_low_rate`, so the attribute is predictable from the
/// scenario alone. A positive `direct_attribute_strength` additionally biases
/// attribute-positive requests toward a fixed shared expert subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCorpusSpec {
    pub profile: DeploymentProfile,
    pub num_scenarios: usize,
    pub records_per_scenario: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub template_strength: f64,
    pub attribute: String,
    pub attribute_high_rate: f64,
    pub attribute_low_rate: f64,
    #[serde(default)]
    pub direct_attribute_strength: f64,
    pub seed: u64,
}

impl ScenarioCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if self.num_scenarios == 0 || self.records_per_scenario == 0 {
            return Err(Error::Configuration("scenario corpus needs scenarios and records".into()));
        }
        for (l, (&e, &k)) in self
            .profile
            .experts_per_layer
            .iter()
            .zip(&self.profile.top_k_per_layer)
            .enumerate()
        {
            if e < self.num_scenarios + k + 2 {
                return Err(Error::Configuration(format!(
                    "layer {} has {} experts; {} private scenario experts leave too few shared ones",
                    l + 1,
                    e,
                    self.num_scenarios
                )));
            }
        }
        if self.min_tokens == 0 || self.max_tokens < self.min_tokens {
            return Err(Error::Configuration("invalid token range".into()));
        }
        for r in [self.attribute_high_rate, self.attribute_low_rate] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Configuration("attribute rates must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

pub fn generate_scenario_corpus(spec: &ScenarioCorpusSpec) -> Result<Vec<TelemetryRecord>> {
    spec.validate()?;
    let profile = &spec.profile;
    let s_count = spec.num_scenarios;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[STRUCTURE]));

    let mut high: Vec<bool> = (0..s_count).map(|s| s < s_count / 2).collect();
    for i in (1..s_count).rev() {
        high.swap(i, rng.random_range(0..=i));
    }
    let mut attribute_experts = zero_offsets(profile);
    for (l, &e_l) in profile.experts_per_layer.iter().enumerate() {
        let mut pool: Vec<usize> = (s_count..e_l).collect();
        for e in draw(&mut pool, 2, &mut rng) {
            attribute_experts[l][e] = 1.0;
        }
    }

    let mut records = Vec::with_capacity(s_count * spec.records_per_scenario);
    for s in 0..s_count {
        let mut template = zero_offsets(profile);
        for layer in template.iter_mut() {
            for (e, v) in layer.iter_mut().enumerate().take(s_count) {
                *v = if e == s { spec.template_strength } else { PRIVATE_FLOOR };
            }
        }
        let rate = if high[s] {
            spec.attribute_high_rate
        } else {
            spec.attribute_low_rate
        };
        for r in 0..spec.records_per_scenario {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[GROUP, s as u64, r as u64]));
            let latent = group_latent(profile, &mut rng);
            let tokens = rng.random_range(spec.min_tokens..=spec.max_tokens);
            let has_attribute = rng.random_bool(rate);
            let mut offsets = template.clone();
            if has_attribute {
                add_offsets(&mut offsets, &attribute_experts, spec.direct_attribute_strength);
            }
            let id = format!("scenario{s:02}-{r:05}");
            let seed = derive_seed(spec.seed, &[RECORD, s as u64, r as u64]);
            records.push(TelemetryRecord {
                request_id: id.clone(),
                profile_id: profile.profile_id.clone(),
                group_id: id,
                class_label: ClassLabel::Benign,
                domain: format!("scenario{s:02}"),
                wrapper: None,
                attributes: [(spec.attribute.clone(), has_attribute)].into_iter().collect(),
                layers: simulate_request(profile, &latent, &offsets, tokens, seed)?,
            });
        }
    }
    Ok(records)
}
