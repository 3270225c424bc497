use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::derive_seed;
use crate::telemetry::TelemetryRecord;

const SPLIT_STREAM: u64 = 0x5917;

/// Input positions assigned to each split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partition items by group so that no group straddles two splits.
///
/// Groups are shuffled once, then cut by the requested fractions; the test
/// split receives the remainder. Every split with a non-zero share receives at
/// least one group.
pub fn split_by_group(group_ids: &[&str], train_fraction: f64, validation_fraction: f64, seed: u64) -> Result<GroupSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0)
        || !(0.0..1.0).contains(&validation_fraction)
        || train_fraction + validation_fraction > 1.0 + 1e-12
    {
        return Err(Error::Configuration(format!(
            "split fractions ({train_fraction}, {validation_fraction}) must lie in (0,1) and sum to at most 1"
        )));
    }
    let mut groups: Vec<&str> = group_ids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let test_fraction = 1.0 - train_fraction - validation_fraction;
    let wanted = [train_fraction, validation_fraction, test_fraction];
    let needed = wanted.iter().filter(|&&f| f > 1e-12).count();
    let g = groups.len();
    if g < needed {
        return Err(Error::Protocol(format!("{g} groups cannot fill {needed} splits")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[SPLIT_STREAM]));
    groups.shuffle(&mut rng);

    let take = |f: f64| if f > 1e-12 { ((f * g as f64).round() as usize).max(1) } else { 0 };
    let mut n_train = take(train_fraction);
    let mut n_val = take(validation_fraction);
    let n_test_min = usize::from(test_fraction > 1e-12);
    // keep room for the later splits
    while n_train + n_val + n_test_min > g {
        if n_train >= n_val && n_train > 1 {
            n_train -= 1;
        } else {
            n_val -= 1;
        }
    }
    if n_test_min == 0 {
        n_train = g - n_val;
    }
    let train: BTreeSet<&str> = groups[..n_train].iter().copied().collect();
    let val: BTreeSet<&str> = groups[n_train..n_train + n_val].iter().copied().collect();

    let mut out = GroupSplit::default();
    for (i, gid) in group_ids.iter().enumerate() {
        if train.contains(gid) {
            out.train.push(i);
        } else if val.contains(gid) {
            out.validation.push(i);
        } else {
            out.test.push(i);
        }
    }
    Ok(out)
}

pub fn group_isolated_split(
    records: &[TelemetryRecord],
    train_fraction: f64,
    validation_fraction: f64,
    seed: u64,
) -> Result<GroupSplit> {
    let ids: Vec<&str> = records.iter().map(|r| r.group_id.as_str()).collect();
    split_by_group(&ids, train_fraction, validation_fraction, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_groups_in_thirds() {
        let ids = ["a", "a", "b", "c", "c", "c"];
        let s = split_by_group(&ids, 1.0 / 3.0, 1.0 / 3.0, 4).unwrap();
        let groups = |idx: &[usize]| idx.iter().map(|&i| ids[i]).collect::<BTreeSet<_>>();
        assert_eq!(groups(&s.train).len(), 1);
        assert_eq!(groups(&s.validation).len(), 1);
        assert_eq!(groups(&s.test).len(), 1);
        assert_eq!(s.train.len() + s.validation.len() + s.test.len(), ids.len());
    }

    #[test]
    fn no_test_share_puts_everything_in_train_and_validation() {
        let ids: Vec<String> = (0..10).map(|i| format!("g{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let s = split_by_group(&refs, 0.75, 0.25, 1).unwrap();
        assert!(s.test.is_empty());
        assert_eq!(s.validation.len(), 3);
    }

    #[test]
    fn too_few_groups() {
        assert!(matches!(split_by_group(&["a", "b"], 0.5, 0.25, 0), Err(Error::Protocol(_))));
    }

    #[test]
    fn deterministic() {
        let ids: Vec<String> = (0..50).map(|i| format!("g{}", i / 3)).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        assert_eq!(split_by_group(&refs, 0.6, 0.2, 9).unwrap(), split_by_group(&refs, 0.6, 0.2, 9).unwrap());
        assert_ne!(split_by_group(&refs, 0.6, 0.2, 9).unwrap(), split_by_group(&refs, 0.6, 0.2, 10).unwrap());
    }
}
