use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SelectorConfig;
use crate::error::{Error, Result};
use crate::numeric::{derive_seed, mean, population_std};
use crate::telemetry::FeatureMatrix;

/// Row indices of one source benchmark, split by class.
#[derive(Debug, Clone)]
pub(crate) struct Benchmark {
    pub name: String,
    pub positive: Vec<usize>,
    pub benign: Vec<usize>,
}

/// Group matrix rows by benchmark (the row's domain), in name order.
pub(crate) fn group_benchmarks(matrix: &FeatureMatrix) -> Result<Vec<Benchmark>> {
    let mut by_name: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, m) in matrix.meta.iter().enumerate() {
        let entry = by_name.entry(m.domain.as_str()).or_default();
        if m.class_label.is_positive() {
            entry.0.push(i);
        } else {
            entry.1.push(i);
        }
    }
    if by_name.is_empty() {
        return Err(Error::Protocol("feature selection needs at least one source benchmark".into()));
    }
    by_name
        .into_iter()
        .map(|(name, (positive, benign))| {
            if positive.is_empty() || benign.is_empty() {
                return Err(Error::Protocol(format!(
                    "source benchmark {name} needs both classes ({} positive, {} benign)",
                    positive.len(),
                    benign.len()
                )));
            }
            Ok(Benchmark {
                name: name.to_string(),
                positive,
                benign,
            })
        })
        .collect()
}

fn column_means<'a>(matrix: &FeatureMatrix, rows: impl IntoIterator<Item = &'a usize>) -> Vec<f64> {
    let mut sums = vec![0.0; matrix.n_cols()];
    let mut n = 0usize;
    for &r in rows {
        for (s, v) in sums.iter_mut().zip(&matrix.rows[r]) {
            *s += v;
        }
        n += 1;
    }
    if n > 0 {
        sums.iter_mut().for_each(|s| *s /= n as f64);
    }
    sums
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Per-dimension class-gap statistics over the source benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionStats {
    pub benchmarks: Vec<String>,
    pub pooled_gap: Vec<f64>,
    pub direction: Vec<i8>,
    /// `benchmark_gaps[j][b]`: gap on benchmark `b` aligned with the pooled direction of `j`.
    pub benchmark_gaps: Vec<Vec<f64>>,
    pub consistency: Vec<f64>,
    pub gap_std: Vec<f64>,
    pub domain_std: Vec<f64>,
    pub benign_mean: Vec<f64>,
    pub edge_mean: Option<Vec<f64>>,
}

impl DimensionStats {
    pub fn n_dims(&self) -> usize {
        self.pooled_gap.len()
    }
}

/// Pooled means visit benchmarks in name order, so reordering whole
/// benchmarks in the matrix leaves every statistic bit-identical.
pub fn compute_dimension_stats(
    matrix: &FeatureMatrix,
    edge_subset: Option<&BTreeSet<String>>,
) -> Result<DimensionStats> {
    let benchmarks = group_benchmarks(matrix)?;
    let pos_rows: Vec<usize> = benchmarks.iter().flat_map(|b| b.positive.iter().copied()).collect();
    let neg_rows: Vec<usize> = benchmarks.iter().flat_map(|b| b.benign.iter().copied()).collect();
    let pos_mean = column_means(matrix, &pos_rows);
    let benign_mean = column_means(matrix, &neg_rows);
    let pooled_gap: Vec<f64> = pos_mean.iter().zip(&benign_mean).map(|(p, n)| p - n).collect();
    let direction: Vec<i8> = pooled_gap.iter().map(|&d| sign(d)).collect();

    let per_bench: Vec<(Vec<f64>, Vec<f64>)> = benchmarks
        .iter()
        .map(|b| {
            let gap = raw_gaps(matrix, &b.positive, &b.benign);
            let all: Vec<usize> = b.positive.iter().chain(&b.benign).copied().collect();
            (gap, column_means(matrix, &all))
        })
        .collect();

    let d = matrix.n_cols();
    let mut benchmark_gaps = Vec::with_capacity(d);
    let mut consistency = Vec::with_capacity(d);
    let mut gap_std = Vec::with_capacity(d);
    let mut domain_std = Vec::with_capacity(d);
    for j in 0..d {
        let s = direction[j] as f64;
        let gaps: Vec<f64> = per_bench.iter().map(|(g, _)| s * g[j]).collect();
        let overall: Vec<f64> = per_bench.iter().map(|(_, m)| m[j]).collect();
        consistency.push(gaps.iter().filter(|&&g| g > 0.0).count() as f64 / gaps.len() as f64);
        gap_std.push(population_std(&gaps));
        domain_std.push(population_std(&overall));
        benchmark_gaps.push(gaps);
    }

    let edge_mean = edge_subset.and_then(|ids| {
        let rows: Vec<usize> = (0..matrix.n_rows())
            .filter(|&i| matrix.meta[i].class_label.is_positive() && ids.contains(&matrix.meta[i].request_id))
            .collect();
        (!rows.is_empty()).then(|| column_means(matrix, &rows))
    });

    Ok(DimensionStats {
        benchmarks: benchmarks.into_iter().map(|b| b.name).collect(),
        pooled_gap,
        direction,
        benchmark_gaps,
        consistency,
        gap_std,
        domain_std,
        benign_mean,
        edge_mean,
    })
}

fn raw_gaps(matrix: &FeatureMatrix, positive: &[usize], benign: &[usize]) -> Vec<f64> {
    let p = column_means(matrix, positive);
    let n = column_means(matrix, benign);
    p.iter().zip(&n).map(|(a, b)| a - b).collect()
}

pub fn invariance_score(pooled_gap: f64, consistency: f64, gap_std: f64, domain_std: f64) -> f64 {
    pooled_gap.abs() * (0.25 + 0.75 * consistency) / (1.0 + gap_std + 0.5 * domain_std)
}

/// `2 |AUC - 1/2|` of a single dimension.
pub fn single_dim_auc_score(positive: &[f64], benign: &[f64]) -> Result<f64> {
    if positive.is_empty() || benign.is_empty() {
        return Err(Error::Protocol("single-dimension AUROC needs both classes".into()));
    }
    let scores: Vec<f64> = positive.iter().chain(benign).copied().collect();
    let labels: Vec<bool> = (0..scores.len()).map(|i| i < positive.len()).collect();
    Ok(2.0 * (crate::eval::auroc(&scores, &labels)? - 0.5).abs())
}

/// Pooled single-dimension AUROC scores of every column.
pub(crate) fn auc_scores(matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    let labels = matrix.labels();
    (0..matrix.n_cols())
        .map(|j| {
            let (pos, neg): (Vec<(f64, bool)>, Vec<(f64, bool)>) =
                matrix.rows.iter().map(|r| r[j]).zip(labels.iter().copied()).partition(|(_, y)| *y);
            let pos: Vec<f64> = pos.into_iter().map(|(v, _)| v).collect();
            let neg: Vec<f64> = neg.into_iter().map(|(v, _)| v).collect();
            single_dim_auc_score(&pos, &neg)
        })
        .collect()
}

const BOOTSTRAP_STREAM: u64 = 0xB007;

/// Fraction of bootstrap rounds in which each dimension stays direction-consistent.
///
/// Rounds resample positives and benigns with replacement inside every
/// benchmark; the direction of each dimension stays the one estimated on the
/// full pooled data.
pub fn bootstrap_stability(matrix: &FeatureMatrix, direction: &[i8], config: &SelectorConfig) -> Result<Vec<f64>> {
    let benchmarks = group_benchmarks(matrix)?;
    let d = matrix.n_cols();
    if direction.len() != d {
        return Err(Error::Alignment(format!("{} directions for {} dimensions", direction.len(), d)));
    }
    if config.bootstrap_rounds == 0 {
        return Ok(vec![0.0; d]);
    }
    let needed = config.bootstrap_benchmark_fraction * benchmarks.len() as f64;
    let mut stable_rounds = vec![0usize; d];
    for round in 0..config.bootstrap_rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[BOOTSTRAP_STREAM, round as u64]));
        let mut resample = |idx: &[usize]| -> Vec<usize> {
            (0..idx.len()).map(|_| idx[rng.random_range(0..idx.len())]).collect()
        };
        let gaps: Vec<Vec<f64>> = benchmarks
            .iter()
            .map(|b| {
                let pos = resample(&b.positive);
                let neg = resample(&b.benign);
                raw_gaps(matrix, &pos, &neg)
            })
            .collect();
        for j in 0..d {
            let s = direction[j] as f64;
            let positive: Vec<f64> = gaps.iter().map(|g| s * g[j]).filter(|&g| g > 0.0).collect();
            if positive.len() as f64 >= needed - 1e-12
                && !positive.is_empty()
                && mean(positive.iter().copied()) > config.bootstrap_gap_floor
            {
                stable_rounds[j] += 1;
            }
        }
    }
    Ok(stable_rounds
        .into_iter()
        .map(|r| r as f64 / config.bootstrap_rounds as f64)
        .collect())
}
