use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{threshold_metrics, MetricReport};
use super::split::split_by_group;
use crate::detector::{fit_logistic_with, raw_margin, LogisticOptions};
use crate::error::{Error, Result};
use crate::numeric::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub c: f64,
    pub max_iter: usize,
    /// Share of prompt groups used for training in the random split.
    pub train_fraction: f64,
    pub threshold: f64,
    pub high_threshold: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            c: 1.0,
            max_iter: 2000,
            train_fraction: 0.7,
            threshold: 0.5,
            high_threshold: 0.9,
            seed: 0,
        }
    }
}

/// Labelled probing data for one attribute.
pub struct ProbeData<'a> {
    pub features: &'a [Vec<f64>],
    pub attribute: &'a [bool],
    pub scenario: &'a [String],
    pub group: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeBaselines {
    pub all_positive_f1: f64,
    /// Majority attribute value of each training scenario, applied to test rows.
    pub scenario_only_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub random_split: MetricReport,
    /// Pooled over all leave-one-scenario-out folds.
    pub loso: Option<MetricReport>,
    pub loso_skipped: bool,
    pub baselines: ProbeBaselines,
}

/// z-scoring with training statistics; constant columns keep unit scale.
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[&Vec<f64>]) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Fit a class-balanced probe on `train` rows and return probabilities for `test` rows.
fn probe_predict(data: &ProbeData, train: &[usize], test: &[usize], config: &ProbeConfig) -> Result<Vec<f64>> {
    let rows: Vec<&Vec<f64>> = train.iter().map(|&i| &data.features[i]).collect();
    let z = Standardizer::fit(&rows);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| z.apply(r)).collect();
    let y: Vec<bool> = train.iter().map(|&i| data.attribute[i]).collect();
    let pos = y.iter().filter(|&&v| v).count() as f64;
    let n = y.len() as f64;
    let weights: Vec<f64> = y
        .iter()
        .map(|&v| n / (2.0 * if v { pos } else { n - pos }))
        .collect();
    let opts = LogisticOptions {
        max_iter: config.max_iter,
        ..LogisticOptions::new(config.c)
    };
    let model = fit_logistic_with(&x, &y, Some(&weights), &opts)?;
    test.iter()
        .map(|&i| Ok(sigmoid(raw_margin(&model, &z.apply(&data.features[i]))?)))
        .collect()
}

fn metrics_at(scores: &[f64], labels: &[bool], config: &ProbeConfig) -> Result<MetricReport> {
    let mut report = MetricReport::compute(scores, labels)?;
    let t = threshold_metrics(scores, labels, config.threshold, config.high_threshold);
    report.f1_at_05 = t.f1;
    report.acc_at_05 = t.accuracy;
    report.precision_at_p90 = t.precision_high;
    report.coverage_at_p90 = t.coverage_high;
    report.high_confidence_empty = t.high_confidence_empty;
    (report.tp, report.fp, report.tn, report.fn_) = (t.tp, t.fp, t.tn, t.fn_);
    Ok(report)
}

fn scenario_only_predictions(data: &ProbeData, train: &[usize], test: &[usize]) -> Vec<bool> {
    let mut votes: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for &i in train {
        let v = votes.entry(data.scenario[i].as_str()).or_default();
        if data.attribute[i] {
            v.0 += 1;
        } else {
            v.1 += 1;
        }
    }
    let total_pos = votes.values().map(|v| v.0).sum::<usize>();
    let global = 2 * total_pos >= train.len();
    test.iter()
        .map(|&i| votes.get(data.scenario[i].as_str()).map_or(global, |&(p, n)| p >= n))
        .collect()
}

/// Random group-aware split and leave-one-scenario-out evaluation of a probe
/// predicting one attribute from telemetry features.
pub fn attribute_probe_eval(data: &ProbeData, config: &ProbeConfig) -> Result<ProbeReport> {
    let n = data.features.len();
    if data.attribute.len() != n || data.scenario.len() != n || data.group.len() != n {
        return Err(Error::Alignment("probe features and labels differ in length".into()));
    }
    let groups: Vec<&str> = data.group.iter().map(String::as_str).collect();
    let split = split_by_group(&groups, config.train_fraction, 0.0, config.seed)?;
    let (train, test) = (split.train, split.test);
    let probs = probe_predict(data, &train, &test, config)?;
    let test_labels: Vec<bool> = test.iter().map(|&i| data.attribute[i]).collect();
    let random_split = metrics_at(&probs, &test_labels, config)?;

    let all_positive = vec![1.0; test.len()];
    let scenario_pred: Vec<f64> = scenario_only_predictions(data, &train, &test)
        .into_iter()
        .map(|p| p as u8 as f64)
        .collect();
    let baselines = ProbeBaselines {
        all_positive_f1: threshold_metrics(&all_positive, &test_labels, 0.5, 0.9).f1,
        scenario_only_f1: threshold_metrics(&scenario_pred, &test_labels, 0.5, 0.9).f1,
    };

    let scenarios: Vec<&str> = {
        let set: std::collections::BTreeSet<&str> = data.scenario.iter().map(String::as_str).collect();
        set.into_iter().collect()
    };
    let loso = if scenarios.len() < 2 {
        None
    } else {
        let mut pooled = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for s in &scenarios {
            let (held, rest): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| data.scenario[i] == *s);
            pooled.extend(probe_predict(data, &rest, &held, config)?);
            labels.extend(held.iter().map(|&i| data.attribute[i]));
        }
        Some(metrics_at(&pooled, &labels, config)?)
    };
    Ok(ProbeReport {
        random_split,
        loso_skipped: loso.is_none(),
        loso,
        baselines,
    })
}
