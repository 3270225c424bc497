use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use super::config::{ProtocolConfig, RunConfig, SimulateConfig};
use super::jsonl::{read_telemetry, telemetry_to_jsonl};
use super::report::{emit_report, FoldRow, ProbeSummary};
use super::write_atomic;
use crate::detector::{DetectorConfig, Provenance};
use crate::error::{Error, Result};
use crate::eval::{
    attribute_probe_eval, fold_selector_config, make_lodo_folds, make_mixed_positive_fold, run_fold, FoldSpec,
    ProbeData,
};
use crate::numeric::derive_seed;
use crate::routing::{generate_scenario_corpus, generate_synthetic_corpus, ScenarioCorpusSpec, SyntheticCorpusSpec};
use crate::selector::{fit_selector, SelectorReport};
use crate::telemetry::{featurize_all, feature_keys, TelemetryRecord};

const SELECT_STREAM: u64 = 0x5E1E;
const PROBE_STREAM: u64 = 0x960B;

/// Pipeline stages in execution order; a run stops after the requested one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Simulate,
    Featurize,
    Select,
    Train,
    Evaluate,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub config_hash: String,
    pub files: Vec<PathBuf>,
    pub folds: Vec<FoldRow>,
    pub probes: Vec<ProbeSummary>,
}

/// Simulated or ingested telemetry for the run.
pub fn load_records(config: &RunConfig) -> Result<Vec<TelemetryRecord>> {
    let profile = config.profile.clone();
    match &config.simulate {
        Some(SimulateConfig::Synthetic {
            domains,
            wrappers,
            requests_per_cell,
            min_tokens,
            max_tokens,
            class_bias_strength,
        }) => generate_synthetic_corpus(&SyntheticCorpusSpec {
            profile,
            domains: domains.clone(),
            wrappers: wrappers.clone(),
            requests_per_cell: *requests_per_cell,
            min_tokens: *min_tokens,
            max_tokens: *max_tokens,
            class_bias_strength: *class_bias_strength,
            seed: config.seed,
        }),
        Some(SimulateConfig::Scenario {
            num_scenarios,
            records_per_scenario,
            min_tokens,
            max_tokens,
            template_strength,
            attribute,
            attribute_high_rate,
            attribute_low_rate,
            direct_attribute_strength,
        }) => generate_scenario_corpus(&ScenarioCorpusSpec {
            profile,
            num_scenarios: *num_scenarios,
            records_per_scenario: *records_per_scenario,
            min_tokens: *min_tokens,
            max_tokens: *max_tokens,
            template_strength: *template_strength,
            attribute: attribute.clone(),
            attribute_high_rate: *attribute_high_rate,
            attribute_low_rate: *attribute_low_rate,
            direct_attribute_strength: *direct_attribute_strength,
            seed: config.seed,
        }),
        None => {
            let path = config
                .telemetry
                .as_ref()
                .ok_or_else(|| Error::Configuration("no telemetry source configured".into()))?;
            read_telemetry(path, &config.profile)
        }
    }
}

/// Folds of the configured protocol.
pub fn build_folds(config: &RunConfig, records: &[TelemetryRecord]) -> Result<Vec<FoldSpec>> {
    match &config.protocol {
        None => Ok(Vec::new()),
        Some(ProtocolConfig::LeaveOneTargetOut {
            train_fraction,
            targets,
            source_benchmarks,
        }) => {
            let known: std::collections::BTreeSet<&str> = records.iter().map(|r| r.domain.as_str()).collect();
            for name in targets.iter().chain(source_benchmarks) {
                if !known.contains(name.as_str()) {
                    return Err(Error::Protocol(format!("benchmark {name} has no telemetry")));
                }
            }
            if source_benchmarks.is_empty() {
                let folds = make_lodo_folds(records, *train_fraction, config.seed)?;
                return Ok(folds
                    .into_iter()
                    .filter(|f| targets.is_empty() || targets.contains(&f.target))
                    .collect());
            }
            let mut folds = Vec::new();
            for t in targets {
                let subset: Vec<TelemetryRecord> = records
                    .iter()
                    .filter(|r| &r.domain == t || source_benchmarks.contains(&r.domain))
                    .cloned()
                    .collect();
                folds.extend(
                    make_lodo_folds(&subset, *train_fraction, config.seed)?
                        .into_iter()
                        .filter(|f| &f.target == t),
                );
            }
            Ok(folds)
        }
        Some(ProtocolConfig::MixedPositive {
            benchmark,
            seen_wrapper,
            unseen_wrappers,
            train_fraction,
            validation_fraction,
        }) => unseen_wrappers
            .iter()
            .map(|u| {
                make_mixed_positive_fold(
                    records,
                    benchmark,
                    seen_wrapper,
                    u,
                    *train_fraction,
                    *validation_fraction,
                    config.seed,
                )
            })
            .collect(),
    }
}

fn features_csv(records: &[TelemetryRecord], config: &RunConfig) -> Result<String> {
    let keys = feature_keys(&config.profile);
    let mut out = String::from("request_id,group_id,domain,wrapper,class");
    for k in &keys {
        let _ = write!(out, ",{k}");
    }
    out.push('\n');
    for v in featurize_all(records, &config.profile)? {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            v.request_id,
            v.group_id,
            v.domain,
            v.wrapper.as_deref().unwrap_or(""),
            v.class_label
        );
        for x in &v.values {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct Stamped<'a, T> {
    config_hash: &'a str,
    fold: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

fn stamped_json<T: Serialize>(config_hash: &str, fold: &str, body: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(&Stamped {
        config_hash,
        fold,
        body,
    })?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn probe_summaries(config: &RunConfig, records: &[TelemetryRecord]) -> Result<Vec<ProbeSummary>> {
    let Some(section) = &config.probe else {
        return Ok(Vec::new());
    };
    let features: Vec<Vec<f64>> = featurize_all(records, &config.profile)?
        .into_iter()
        .map(|v| v.values)
        .collect();
    let scenario: Vec<String> = records.iter().map(|r| r.domain.clone()).collect();
    let group: Vec<String> = records.iter().map(|r| r.group_id.clone()).collect();
    let probe_config = crate::eval::ProbeConfig {
        seed: derive_seed(config.seed, &[PROBE_STREAM]),
        ..section.config.clone()
    };
    section
        .attributes
        .iter()
        .map(|attr| {
            let attribute = records
                .iter()
                .map(|r| {
                    r.attributes.get(attr).copied().ok_or_else(|| {
                        Error::Input(format!("request {} has no label for attribute {attr}", r.request_id))
                    })
                })
                .collect::<Result<Vec<bool>>>()?;
            let report = attribute_probe_eval(
                &ProbeData {
                    features: &features,
                    attribute: &attribute,
                    scenario: &scenario,
                    group: &group,
                },
                &probe_config,
            )?;
            Ok(ProbeSummary {
                attribute: attr.clone(),
                report,
            })
        })
        .collect()
}

/// Run every stage up to `until`, writing each stage's files into the output directory.
pub fn run_stages(config: &RunConfig, until: Stage) -> Result<PipelineOutput> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let config_hash = config.config_hash()?;
    let dir = &config.output_dir;
    let mut files = Vec::new();
    let mut write = |name: String, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        files.push(path);
        Ok(())
    };

    let records = load_records(config).map_err(|e| e.in_stage("simulate"))?;
    let folds = build_folds(config, &records).map_err(|e| e.in_stage("protocol"))?;
    for f in &folds {
        f.check_isolation(&records).map_err(|e| e.in_stage("protocol"))?;
    }
    if until == Stage::Simulate {
        write("telemetry.jsonl".into(), telemetry_to_jsonl(&records, &config.profile)?.as_bytes())?;
    }
    if until == Stage::Featurize {
        let csv = features_csv(&records, config).map_err(|e| e.in_stage("featurize"))?;
        write("features.csv".into(), csv.as_bytes())?;
    }
    if until < Stage::Select {
        return Ok(PipelineOutput {
            config_hash,
            files,
            folds: Vec::new(),
            probes: Vec::new(),
        });
    }

    let mut selector = config.selector.clone();
    selector.seed = derive_seed(config.seed, &[SELECT_STREAM]);
    let detector = DetectorConfig {
        transform: config.transform.clone(),
        regularizer: config.regularizer.clone(),
    };
    let mut rows = Vec::new();
    for fold in &folds {
        if until == Stage::Select {
            let data = fold.materialize(&records, &config.profile).map_err(|e| e.in_stage("featurize"))?;
            let report: SelectorReport = fit_selector(
                &data.train,
                config.profile.num_layers,
                None,
                &fold_selector_config(fold, &selector),
            )
            .map_err(|e| e.in_stage("select"))?;
            write(format!("selector/{}.json", fold.fold_id), &stamped_json(&config_hash, &fold.fold_id, &report)?)?;
            continue;
        }
        let outcome = run_fold(
            fold,
            &records,
            &config.profile,
            &selector,
            &detector,
            Provenance {
                config_hash: config_hash.clone(),
                seed: config.seed,
            },
        )?;
        write(
            format!("selector/{}.json", fold.fold_id),
            &stamped_json(&config_hash, &fold.fold_id, &outcome.selector)?,
        )?;
        write(format!("bundles/{}.json", fold.fold_id), (outcome.bundle.to_json()? + "\n").as_bytes())?;
        rows.push(FoldRow::from_outcome(&outcome));
    }

    let mut probes = Vec::new();
    if until == Stage::Evaluate {
        probes = probe_summaries(config, &records).map_err(|e| e.in_stage("probe"))?;
        files.extend(emit_report(dir, &rows, probes.clone(), &config_hash, config.seed).map_err(|e| e.in_stage("report"))?);
    }
    Ok(PipelineOutput {
        config_hash,
        files,
        folds: rows,
        probes,
    })
}

/// Full run: simulate or ingest, featurize, select, train, evaluate and report.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    run_stages(config, Stage::Evaluate)
}
