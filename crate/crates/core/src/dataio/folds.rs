use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Video-level k-fold partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

/// Train/validation video ids for one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub fold: usize,
    pub train: Vec<String>,
    pub val: Vec<String>,
}

fn check_unique(video_ids: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in video_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Config(format!("duplicate video id {id:?}")));
        }
    }
    Ok(())
}

fn shuffled(video_ids: &[String], seed: u64) -> Vec<String> {
    let mut ids = video_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    ids
}

/// Assigns videos to `k` folds of sizes differing by at most one.
/// Deterministic for a given input order and seed.
pub fn make_folds(video_ids: &[String], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if video_ids.len() < k {
        return Err(Error::Config(format!(
            "cannot split {} videos into {k} folds",
            video_ids.len()
        )));
    }
    check_unique(video_ids)?;
    let assignment = shuffled(video_ids, seed)
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, i % k))
        .collect();
    Ok(FoldSplit { k, assignment })
}

impl FoldSplit {
    pub fn fold_of(&self, video_id: &str) -> Option<usize> {
        self.assignment.get(video_id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Fold `fold` held out for validation, the rest for training.
    pub fn split(&self, fold: usize) -> Result<DataSplit> {
        if fold >= self.k {
            return Err(Error::Config(format!("fold {fold} out of range for k = {}", self.k)));
        }
        let (val, train): (Vec<_>, Vec<_>) = self.assignment.iter().partition(|(_, &f)| f == fold);
        Ok(DataSplit {
            fold,
            train: train.into_iter().map(|(id, _)| id.clone()).collect(),
            val: val.into_iter().map(|(id, _)| id.clone()).collect(),
        })
    }
}

/// Single train/validation split holding out `ceil(val_fraction * n)` videos.
pub fn fixed_split(video_ids: &[String], val_fraction: f64, seed: u64) -> Result<DataSplit> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Config(format!("val_fraction must lie in (0, 1), got {val_fraction}")));
    }
    check_unique(video_ids)?;
    let n_val = (val_fraction * video_ids.len() as f64).ceil() as usize;
    if n_val == 0 || n_val >= video_ids.len() {
        return Err(Error::Config(format!(
            "val_fraction {val_fraction} leaves an empty side with {} videos",
            video_ids.len()
        )));
    }
    let ids = shuffled(video_ids, seed);
    let mut val = ids[..n_val].to_vec();
    let mut train = ids[n_val..].to_vec();
    val.sort();
    train.sort();
    Ok(DataSplit { fold: 0, train, val })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("video_{i:03}")).collect()
    }

    #[test]
    fn exact_division() {
        let split = make_folds(&ids(10), 5, 1).unwrap();
        assert_eq!(split.fold_sizes(), vec![2; 5]);
    }

    #[test]
    fn balanced_remainder() {
        let split = make_folds(&ids(7), 3, 1).unwrap();
        let mut sizes = split.fold_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![2, 2, 3]);
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(make_folds(&ids(9), 3, 42).unwrap(), make_folds(&ids(9), 3, 42).unwrap());
        assert_ne!(make_folds(&ids(30), 3, 1).unwrap(), make_folds(&ids(30), 3, 2).unwrap());
    }

    #[test]
    fn too_many_folds_is_a_config_error() {
        assert!(matches!(make_folds(&ids(3), 4, 0), Err(Error::Config(_))));
        assert!(matches!(make_folds(&ids(3), 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut v = ids(4);
        v.push("video_000".into());
        assert!(make_folds(&v, 2, 0).is_err());
    }

    #[test]
    fn fixed_split_sizes() {
        let s = fixed_split(&ids(10), 0.2, 3).unwrap();
        assert_eq!(s.val.len(), 2);
        assert_eq!(s.train.len(), 8);
        assert!(fixed_split(&ids(10), 1.0, 3).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_the_videos(n in 2usize..60, k_raw in 2usize..10, seed in any::<u64>()) {
            let k = k_raw.min(n);
            let all = ids(n);
            let split = make_folds(&all, k, seed).unwrap();
            let sizes = split.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut union = Vec::new();
            for f in 0..k {
                let s = split.split(f).unwrap();
                prop_assert_eq!(s.train.len() + s.val.len(), n);
                union.extend(s.val);
            }
            union.sort();
            prop_assert_eq!(union, all);
        }
    }
}
