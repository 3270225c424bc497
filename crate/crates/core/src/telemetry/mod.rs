//! Request-level telemetry representation.
//!
//! Each layer's loads are normalized into a distribution over its experts and
//! summarized by four structural statistics; the representation concatenates
//! all raw blocks followed by all statistic blocks in increasing layer order.

mod features;
mod matrix;
mod record;

pub use features::{
    assemble_representation, feature_keys, layer_structural_stats, normalize_loads, FeatureKey, LayerStats,
    RequestFeatureVector, StatName,
};
pub use matrix::{featurize_all, FeatureMatrix, RowMeta, SplitRole};
pub use record::{ClassLabel, TelemetryRecord};
