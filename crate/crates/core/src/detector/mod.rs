//! Source-fitted transform, regularized logistic detector, adaptive
//! regularization strength and Platt calibration.

mod bundle;
mod calibration;
mod logistic;
mod regularization;
mod transform;

pub use bundle::{train_audit_model, DetectorBundle, DetectorConfig, PositivePartition, Provenance, RegularizationChoice};
pub use calibration::{calibrated_score, fit_platt, CalibrationModel, PLATT_C, PLATT_MAX_ITER};
pub use logistic::{
    fit_logistic, fit_logistic_with, logistic_gradient, logistic_objective, raw_margin, DetectorModel, LogisticOptions,
    DEFAULT_MAX_ITER, GRADIENT_TOL,
};
pub use regularization::{adaptive_regularization_strength, source_margin_stats, MarginStats, RegularizerConfig};
pub use transform::{apply_transform, fit_transform, FeatureTransform, TransformConfig};
