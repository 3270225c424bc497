use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::eval::{FoldOutcome, MetricReport, ProbeReport};

/// One evaluated fold, flattened for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub fold: String,
    pub protocol: String,
    pub target: String,
    pub n_target: usize,
    pub support_size: usize,
    pub c: f64,
    pub delta_sep: f64,
    pub r_sub: f64,
    pub metrics: MetricReport,
}

impl FoldRow {
    pub fn from_outcome(o: &FoldOutcome) -> Self {
        FoldRow {
            fold: o.fold.fold_id.clone(),
            protocol: o.fold.protocol.as_str().to_string(),
            target: o.fold.target.clone(),
            n_target: o.target_scores.len(),
            support_size: o.selector.selection.support.len(),
            c: o.bundle.regularization.c,
            delta_sep: o.bundle.regularization.margins.delta_sep,
            r_sub: o.bundle.regularization.margins.r_sub,
            metrics: o.metrics,
        }
    }
}

/// Round to the four decimals used in every report.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

const COLUMNS: [&str; 20] = [
    "config_hash",
    "fold",
    "protocol",
    "target",
    "n_target",
    "support_size",
    "c",
    "delta_sep",
    "r_sub",
    "auroc",
    "average_precision",
    "f1_at_05",
    "acc_at_05",
    "precision_at_p90",
    "coverage_at_p90",
    "high_confidence_empty",
    "tp",
    "fp",
    "tn",
    "fn",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn metrics_csv(rows: &[FoldRow], config_hash: &str) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{}",
            config_hash,
            csv_field(&r.fold),
            r.protocol,
            csv_field(&r.target),
            r.n_target,
            r.support_size,
            r.c,
            r.delta_sep,
            r.r_sub,
            m.auroc,
            m.average_precision,
            m.f1_at_05,
            m.acc_at_05,
            m.precision_at_p90,
            m.coverage_at_p90,
            m.high_confidence_empty,
            m.tp,
            m.fp,
            m.tn,
            m.fn_
        );
    }
    out
}

/// Fold-averaged ranking and threshold metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub auroc: f64,
    pub average_precision: f64,
    pub f1_at_05: f64,
    pub acc_at_05: f64,
    pub precision_at_p90: f64,
    pub coverage_at_p90: f64,
}

impl MeanMetrics {
    pub fn of(rows: &[FoldRow]) -> Option<Self> {
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let avg = |f: fn(&MetricReport) -> f64| rows.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
        Some(MeanMetrics {
            auroc: avg(|m| m.auroc),
            average_precision: avg(|m| m.average_precision),
            f1_at_05: avg(|m| m.f1_at_05),
            acc_at_05: avg(|m| m.acc_at_05),
            precision_at_p90: avg(|m| m.precision_at_p90),
            coverage_at_p90: avg(|m| m.coverage_at_p90),
        })
    }

    fn rounded(self) -> Self {
        MeanMetrics {
            auroc: round4(self.auroc),
            average_precision: round4(self.average_precision),
            f1_at_05: round4(self.f1_at_05),
            acc_at_05: round4(self.acc_at_05),
            precision_at_p90: round4(self.precision_at_p90),
            coverage_at_p90: round4(self.coverage_at_p90),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub attribute: String,
    pub report: ProbeReport,
}

/// JSON summary of a run; every float is rounded to four decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub folds: Vec<FoldRow>,
    pub mean: Option<MeanMetrics>,
    pub probes: Vec<ProbeSummary>,
}

fn round_metrics(m: &MetricReport) -> MetricReport {
    MetricReport {
        auroc: round4(m.auroc),
        average_precision: round4(m.average_precision),
        f1_at_05: round4(m.f1_at_05),
        acc_at_05: round4(m.acc_at_05),
        precision_at_p90: round4(m.precision_at_p90),
        coverage_at_p90: round4(m.coverage_at_p90),
        ..*m
    }
}

impl RunSummary {
    pub fn new(config_hash: &str, seed: u64, folds: &[FoldRow], probes: Vec<ProbeSummary>) -> Self {
        RunSummary {
            config_hash: config_hash.to_string(),
            seed,
            mean: MeanMetrics::of(folds).map(MeanMetrics::rounded),
            folds: folds
                .iter()
                .map(|r| FoldRow {
                    c: round4(r.c),
                    delta_sep: round4(r.delta_sep),
                    r_sub: round4(r.r_sub),
                    metrics: round_metrics(&r.metrics),
                    ..r.clone()
                })
                .collect(),
            probes: probes
                .into_iter()
                .map(|p| ProbeSummary {
                    report: ProbeReport {
                        random_split: round_metrics(&p.report.random_split),
                        loso: p.report.loso.as_ref().map(round_metrics),
                        loso_skipped: p.report.loso_skipped,
                        baselines: crate::eval::ProbeBaselines {
                            all_positive_f1: round4(p.report.baselines.all_positive_f1),
                            scenario_only_f1: round4(p.report.baselines.scenario_only_f1),
                        },
                    },
                    attribute: p.attribute,
                })
                .collect(),
        }
    }
}

/// Write `metrics.csv` (when folds exist) and `summary.json` into `dir`.
pub fn emit_report(
    dir: &Path,
    rows: &[FoldRow],
    probes: Vec<ProbeSummary>,
    config_hash: &str,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    if rows.is_empty() && probes.is_empty() {
        return Err(Error::Protocol("nothing to report".into()));
    }
    let mut written = Vec::new();
    if !rows.is_empty() {
        let csv = dir.join("metrics.csv");
        write_atomic(&csv, metrics_csv(rows, config_hash).as_bytes())?;
        written.push(csv);
    }
    let summary = RunSummary::new(config_hash, seed, rows, probes);
    let json = dir.join("summary.json");
    write_atomic(&json, (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    written.push(json);
    Ok(written)
}
