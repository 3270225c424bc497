use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::metrics::MetricReport;
use super::split::split_by_group;
use crate::detector::{train_audit_model, DetectorBundle, DetectorConfig, PositivePartition, Provenance};
use crate::error::{Error, Result};
use crate::numeric::{derive_seed, name_stream};
use crate::routing::DeploymentProfile;
use crate::selector::{fit_selector, SelectorConfig, SelectorReport};
use crate::telemetry::{FeatureMatrix, SplitRole, TelemetryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    LeaveOneTargetOut,
    MixedPositive,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::LeaveOneTargetOut => "leave_one_target_out",
            Protocol::MixedPositive => "mixed_positive",
        }
    }
}

/// Fully resolved fold: which requests train, validate and test, and how
/// source positives are partitioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold_id: String,
    pub protocol: Protocol,
    pub source_benchmarks: Vec<String>,
    /// Held-out benchmark, or the unseen wrapper for mixed-positive folds.
    pub target: String,
    pub positive_subsets: PositivePartition,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub source_train: BTreeSet<String>,
    pub source_validation: BTreeSet<String>,
    pub target_ids: BTreeSet<String>,
}

pub const HARMFUL_SUBSET: &str = "harmful";
pub const DIRECT_SUBSET: &str = "direct";

fn benchmark_names(records: &[TelemetryRecord]) -> Vec<String> {
    records.iter().map(|r| r.domain.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// One fold per benchmark, holding it out as target; the rest form the
/// source pool, split into train and validation by prompt group.
///
/// Only unwrapped requests take part, so each source carries a single
/// positive subset.
pub fn make_lodo_folds(records: &[TelemetryRecord], train_fraction: f64, seed: u64) -> Result<Vec<FoldSpec>> {
    let benchmarks = benchmark_names(records);
    if benchmarks.len() < 2 {
        return Err(Error::Protocol(format!(
            "leave-one-target-out needs at least two benchmarks, found {}",
            benchmarks.len()
        )));
    }
    let direct: Vec<&TelemetryRecord> = records.iter().filter(|r| r.wrapper.is_none()).collect();
    benchmarks
        .iter()
        .map(|target| {
            let fold_seed = derive_seed(seed, &[name_stream(target)]);
            let source: Vec<&TelemetryRecord> = direct.iter().copied().filter(|r| &r.domain != target).collect();
            let groups: Vec<&str> = source.iter().map(|r| r.group_id.as_str()).collect();
            let split = split_by_group(&groups, train_fraction, 1.0 - train_fraction, fold_seed)?;
            let ids = |idx: &[usize]| idx.iter().map(|&i| source[i].request_id.clone()).collect::<BTreeSet<_>>();
            let harmful = source
                .iter()
                .filter(|r| r.class_label.is_positive())
                .map(|r| r.request_id.clone())
                .collect();
            Ok(FoldSpec {
                fold_id: format!("loto-{target}"),
                protocol: Protocol::LeaveOneTargetOut,
                source_benchmarks: benchmarks.iter().filter(|b| *b != target).cloned().collect(),
                target: target.clone(),
                positive_subsets: BTreeMap::from([(HARMFUL_SUBSET.to_string(), harmful)]),
                train_fraction,
                validation_fraction: 1.0 - train_fraction,
                seed: fold_seed,
                source_train: ids(&split.train),
                source_validation: ids(&split.validation),
                target_ids: direct
                    .iter()
                    .filter(|r| &r.domain == target)
                    .map(|r| r.request_id.clone())
                    .collect(),
            })
        })
        .collect()
}

/// Train on direct and `seen` wrapped positives of one benchmark, test on the
/// `unseen` wrapper against held-out benign requests of the same benchmark.
///
/// The group split depends only on the benchmark and seed, so every wrapper
/// fold of a benchmark shares the same held-out benign set.
pub fn make_mixed_positive_fold(
    records: &[TelemetryRecord],
    benchmark: &str,
    seen: &str,
    unseen: &str,
    train_fraction: f64,
    validation_fraction: f64,
    seed: u64,
) -> Result<FoldSpec> {
    if seen == unseen {
        return Err(Error::Protocol("seen and unseen wrappers must differ".into()));
    }
    let pool: Vec<&TelemetryRecord> = records.iter().filter(|r| r.domain == benchmark).collect();
    for w in [seen, unseen] {
        if !pool.iter().any(|r| r.wrapper.as_deref() == Some(w) && r.class_label.is_positive()) {
            return Err(Error::Protocol(format!("benchmark {benchmark} has no positives wrapped with {w}")));
        }
    }
    let fold_seed = derive_seed(seed, &[name_stream(benchmark)]);
    let groups: Vec<&str> = pool.iter().map(|r| r.group_id.as_str()).collect();
    let split = split_by_group(&groups, train_fraction, validation_fraction, fold_seed)?;

    let source_role = |r: &TelemetryRecord| match (&r.wrapper, r.class_label.is_positive()) {
        (None, _) => true,
        (Some(w), true) => w == seen,
        (Some(_), false) => false,
    };
    let pick = |idx: &[usize], keep: &dyn Fn(&TelemetryRecord) -> bool| {
        idx.iter()
            .map(|&i| pool[i])
            .filter(|r| keep(r))
            .map(|r| r.request_id.clone())
            .collect::<BTreeSet<_>>()
    };
    let source_train = pick(&split.train, &source_role);
    let source_validation = pick(&split.validation, &source_role);
    let target_ids = pick(&split.test, &|r| match (&r.wrapper, r.class_label.is_positive()) {
        (None, false) => true,
        (Some(w), true) => w == unseen,
        _ => false,
    });

    let mut subsets: PositivePartition = BTreeMap::new();
    for r in pool.iter().filter(|r| r.class_label.is_positive()) {
        if !(source_train.contains(&r.request_id) || source_validation.contains(&r.request_id)) {
            continue;
        }
        let name = r.wrapper.clone().unwrap_or_else(|| DIRECT_SUBSET.to_string());
        subsets.entry(name).or_default().insert(r.request_id.clone());
    }
    Ok(FoldSpec {
        fold_id: format!("mixed-{benchmark}-{seen}-to-{unseen}"),
        protocol: Protocol::MixedPositive,
        source_benchmarks: vec![benchmark.to_string()],
        target: unseen.to_string(),
        positive_subsets: subsets,
        train_fraction,
        validation_fraction,
        seed: fold_seed,
        source_train,
        source_validation,
        target_ids,
    })
}

/// Role-tagged matrices of one fold.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train: FeatureMatrix,
    pub validation: FeatureMatrix,
    pub target: FeatureMatrix,
}

impl FoldSpec {
    /// Check that no request or prompt group is shared between source and target.
    pub fn check_isolation(&self, records: &[TelemetryRecord]) -> Result<()> {
        let source: BTreeSet<&String> = self.source_train.union(&self.source_validation).collect();
        if let Some(id) = self.target_ids.iter().find(|id| source.contains(id)) {
            return Err(Error::Leakage(format!("request {id} is both source and target in fold {}", self.fold_id)));
        }
        if let Some(id) = self.source_train.intersection(&self.source_validation).next() {
            return Err(Error::Leakage(format!("request {id} is in both source splits of fold {}", self.fold_id)));
        }
        let group_of: BTreeMap<&str, &str> = records
            .iter()
            .map(|r| (r.request_id.as_str(), r.group_id.as_str()))
            .collect();
        let groups = |ids: &mut dyn Iterator<Item = &String>| -> BTreeSet<&str> {
            ids.filter_map(|id| group_of.get(id.as_str()).copied()).collect()
        };
        let target_groups = groups(&mut self.target_ids.iter());
        let source_groups = groups(&mut source.iter().copied());
        if let Some(g) = target_groups.intersection(&source_groups).next() {
            return Err(Error::Leakage(format!("prompt group {g} spans source and target in fold {}", self.fold_id)));
        }
        Ok(())
    }

    pub fn materialize(&self, records: &[TelemetryRecord], profile: &DeploymentProfile) -> Result<FoldData> {
        self.check_isolation(records)?;
        let pick = |ids: &BTreeSet<String>, role: SplitRole| -> Result<FeatureMatrix> {
            let chosen: Vec<TelemetryRecord> = records.iter().filter(|r| ids.contains(&r.request_id)).cloned().collect();
            if chosen.len() != ids.len() {
                return Err(Error::Protocol(format!(
                    "fold {} names {} requests but {} were found",
                    self.fold_id,
                    ids.len(),
                    chosen.len()
                )));
            }
            FeatureMatrix::from_records(&chosen, profile, role)
        };
        Ok(FoldData {
            train: pick(&self.source_train, SplitRole::SourceTrain)?,
            validation: pick(&self.source_validation, SplitRole::SourceValidation)?,
            target: pick(&self.target_ids, SplitRole::Target)?,
        })
    }
}

/// Everything a fold run produces.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: FoldSpec,
    pub selector: SelectorReport,
    pub bundle: DetectorBundle,
    pub metrics: MetricReport,
    pub target_scores: Vec<f64>,
    pub target_labels: Vec<bool>,
}

/// Selector settings of one fold, with a bootstrap seed private to the fold.
pub fn fold_selector_config(fold: &FoldSpec, base: &SelectorConfig) -> SelectorConfig {
    SelectorConfig {
        seed: derive_seed(base.seed, &[fold.seed]),
        ..base.clone()
    }
}

/// Fit selector and detector on the fold's source data, then score the target.
pub fn run_fold(
    fold: &FoldSpec,
    records: &[TelemetryRecord],
    profile: &DeploymentProfile,
    selector_config: &SelectorConfig,
    detector_config: &DetectorConfig,
    provenance: Provenance,
) -> Result<FoldOutcome> {
    let data = fold.materialize(records, profile).map_err(|e| e.in_stage("featurize"))?;
    let selector_config = fold_selector_config(fold, selector_config);
    let selector = fit_selector(&data.train, profile.num_layers, None, &selector_config).map_err(|e| e.in_stage("select"))?;
    let bundle = train_audit_model(
        &data.train,
        &data.validation,
        &fold.positive_subsets,
        &selector,
        detector_config,
        provenance,
    )
    .map_err(|e| e.in_stage("train"))?;
    data.target.require_role(SplitRole::Target, "evaluation")?;
    let target_scores = bundle.scores(&data.target).map_err(|e| e.in_stage("evaluate"))?;
    let target_labels = data.target.labels();
    let metrics = MetricReport::compute(&target_scores, &target_labels).map_err(|e| e.in_stage("evaluate"))?;
    Ok(FoldOutcome {
        fold: fold.clone(),
        selector,
        bundle,
        metrics,
        target_scores,
        target_labels,
    })
}
