//! Safety auditing of mixture-of-experts services from expert-routing telemetry.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! * [`routing`]: top-K gating, expert-load accumulation, a thread-count proxy
//!   and a labelled synthetic telemetry generator.
//! * [`telemetry`]: the request-level representation (normalized loads plus
//!   per-layer structural statistics) and split-tagged feature matrices.
//! * [`selector`]: hybrid per-dimension scoring and the entropy-adaptive support.
//! * [`detector`]: source-fitted transform, L2 logistic detector,
//!   source-adaptive regularization strength and Platt calibration.
//! * [`eval`]: group-isolated splits, leave-one-target-out and mixed-positive
//!   folds, metrics, attribute probing and the structural similarity score.
//! * [`io`]: JSONL telemetry, run configuration, reports and the pipeline driver.

pub mod detector;
pub mod error;
pub mod eval;
pub mod io;
pub mod routing;
pub mod selector;
pub mod telemetry;

mod numeric;

pub use error::{Error, Result};
