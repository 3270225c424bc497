//! Evaluation protocols, metrics, attribute probing and prompt similarity.

mod folds;
mod metrics;
mod probe;
mod similarity;
mod split;

pub use folds::{
    fold_selector_config, make_lodo_folds, make_mixed_positive_fold, run_fold, FoldData, FoldOutcome, FoldSpec, Protocol, DIRECT_SUBSET,
    HARMFUL_SUBSET,
};
pub use metrics::{
    auroc, average_precision, ranking_metrics, threshold_metrics, MetricReport, ThresholdMetrics, DEPLOYMENT_THRESHOLD,
    HIGH_CONFIDENCE_THRESHOLD,
};
pub use probe::{attribute_probe_eval, ProbeBaselines, ProbeConfig, ProbeData, ProbeReport};
pub use similarity::structural_similarity;
pub use split::{group_isolated_split, split_by_group, GroupSplit};
