use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Metric(format!("score {s} is not comparable")));
    }
    let pos = labels.iter().filter(|&&y| y).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(format!(
            "ranking metrics need both classes, got {pos} positive and {neg} negative"
        )));
    }
    Ok((pos, neg))
}

/// Indices ordered by ascending score, with ties grouped.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            // total_cmp separates 0.0 and -0.0; compare numerically instead
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Twice the number of concordant pairs plus the number of tied pairs, and the
/// number of positive-negative pairs.
fn pair_counts(scores: &[f64], labels: &[bool]) -> (u128, u128) {
    let mut negatives_below: u128 = 0;
    let mut doubled: u128 = 0;
    let mut pos_total: u128 = 0;
    for group in tie_groups(scores) {
        let p = group.iter().filter(|&&i| labels[i]).count() as u128;
        let n = group.len() as u128 - p;
        doubled += 2 * p * negatives_below + p * n;
        negatives_below += n;
        pos_total += p;
    }
    (doubled, 2 * pos_total * negatives_below)
}

/// Probability that a positive outranks a negative, ties counted as one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let (num, den) = pair_counts(scores, labels);
    Ok(num as f64 / den as f64)
}

/// Area under the step-interpolated precision-recall curve, one step per
/// distinct score threshold.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check_inputs(scores, labels)?;
    let mut tp = 0u64;
    let mut seen = 0u64;
    let mut ap = 0.0;
    for group in tie_groups(scores).into_iter().rev() {
        let gained = group.iter().filter(|&&i| labels[i]).count() as u64;
        tp += gained;
        seen += group.len() as u64;
        if gained > 0 {
            ap += (gained as f64 / pos as f64) * (tp as f64 / seen as f64);
        }
    }
    Ok(ap)
}

pub fn ranking_metrics(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    Ok((auroc(scores, labels)?, average_precision(scores, labels)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub f1: f64,
    pub accuracy: f64,
    /// Precision among samples scored at or above the high-confidence threshold.
    pub precision_high: f64,
    /// Fraction of true positives scored at or above the high-confidence threshold.
    pub coverage_high: f64,
    /// No sample reached the high-confidence threshold; `precision_high` is then 0.
    pub high_confidence_empty: bool,
}

pub fn threshold_metrics(scores: &[f64], labels: &[bool], threshold: f64, high_threshold: f64) -> ThresholdMetrics {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    let (mut high, mut high_tp) = (0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
        if s >= high_threshold {
            high += 1;
            high_tp += y as usize;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ThresholdMetrics {
        tp,
        fp,
        tn,
        fn_,
        f1,
        accuracy: ratio(tp + tn, scores.len()),
        precision_high: ratio(high_tp, high),
        coverage_high: ratio(high_tp, tp + fn_),
        high_confidence_empty: high == 0,
    }
}

pub const DEPLOYMENT_THRESHOLD: f64 = 0.5;
pub const HIGH_CONFIDENCE_THRESHOLD: f64 = 0.9;

/// Ranking and fixed-threshold metrics of one evaluated split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auroc: f64,
    pub average_precision: f64,
    pub f1_at_05: f64,
    pub acc_at_05: f64,
    pub precision_at_p90: f64,
    pub coverage_at_p90: f64,
    pub high_confidence_empty: bool,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MetricReport {
    pub fn compute(scores: &[f64], labels: &[bool]) -> Result<Self> {
        let (auroc, average_precision) = ranking_metrics(scores, labels)?;
        let t = threshold_metrics(scores, labels, DEPLOYMENT_THRESHOLD, HIGH_CONFIDENCE_THRESHOLD);
        Ok(MetricReport {
            auroc,
            average_precision,
            f1_at_05: t.f1,
            acc_at_05: t.accuracy,
            precision_at_p90: t.precision_high,
            coverage_at_p90: t.coverage_high,
            high_confidence_empty: t.high_confidence_empty,
            tp: t.tp,
            fp: t.fp,
            tn: t.tn,
            fn_: t.fn_,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_counts_tied_pairs_as_half() {
        let scores = [0.9, 0.8, 0.7, 0.85];
        let labels = [true, true, false, false];
        assert_eq!(auroc(&scores, &labels).unwrap(), 0.75);
        assert_eq!(auroc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
        assert_eq!(auroc(&[1.0, 3.0, 2.0], &[true, true, false]).unwrap(), 0.5);
    }

    #[test]
    fn perfect_ranking() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [false, false, true, true];
        assert_eq!(ranking_metrics(&scores, &labels).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn average_precision_steps_over_thresholds() {
        // ranks: + - + -  -> 0.5 * 1 + 0.5 * 2/3
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert!((ap - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
        // a tie between a positive and a negative shares one threshold
        let ap = average_precision(&[0.5, 0.5], &[true, false]).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(auroc(&[0.1, 0.2], &[true, true]), Err(Error::Metric(_))));
        assert!(average_precision(&[0.1], &[false]).is_err());
    }

    #[test]
    fn confusion_table_example() {
        let t = threshold_metrics(&[0.9, 0.4, 0.3, 0.6], &[true, true, false, false], 0.5, 0.9);
        assert_eq!((t.tp, t.fp, t.tn, t.fn_), (1, 1, 1, 1));
        assert_eq!(t.f1, 0.5);
        assert_eq!(t.accuracy, 0.5);
        assert_eq!(t.precision_high, 1.0);
        assert_eq!(t.coverage_high, 0.5);
    }

    #[test]
    fn empty_high_confidence_set_is_flagged() {
        let t = threshold_metrics(&[0.2, 0.7], &[false, true], 0.5, 0.9);
        assert!(t.high_confidence_empty);
        assert_eq!(t.precision_high, 0.0);
        assert_eq!(t.f1, 1.0);
        let none = threshold_metrics(&[0.2, 0.3], &[true, false], 0.5, 0.9);
        assert_eq!(none.f1, 0.0);
    }
}
