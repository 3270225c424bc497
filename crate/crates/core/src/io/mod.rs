//! File formats, run configuration, reports and the pipeline driver.

mod config;
mod jsonl;
mod pipeline;
mod report;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::{ProbeSection, ProtocolConfig, RunConfig, SimulateConfig};
pub use jsonl::{read_telemetry, telemetry_to_jsonl, write_telemetry};
pub use pipeline::{build_folds, load_records, run_pipeline, run_stages, PipelineOutput, Stage};
pub use report::{emit_report, metrics_csv, round4, FoldRow, MeanMetrics, ProbeSummary, RunSummary};

/// Write through a sibling temporary file and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Configuration(format!("{} is not a file path", path.display())))?;
    let tmp = parent.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
