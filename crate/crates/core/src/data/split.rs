use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Train/test split parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            seed,
            ..Default::default()
        }
    }
}

fn class_indices(labels: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let pos = (0..labels.len()).filter(|&i| labels[i] > 0.0).collect();
    let neg = (0..labels.len()).filter(|&i| labels[i] < 0.0).collect();
    (pos, neg)
}

/// Returns sorted `(train, test)` index sets.
pub fn split_indices(labels: &[f64], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let m = labels.len();
    if m < 2 {
        return Err(Error::InvalidParameter("need at least two samples to split".into()));
    }
    let (mut pos, mut neg) = class_indices(labels);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass(labels[0]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_train = ((m as f64) * spec.train_fraction).round().clamp(1.0, (m - 1) as f64) as usize;

    let (mut train, mut test) = (Vec::new(), Vec::new());
    if spec.stratified {
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let mut pos_train = ((pos.len() as f64) * n_train as f64 / m as f64).round() as usize;
        pos_train = pos_train.min(pos.len());
        let mut neg_train = n_train.saturating_sub(pos_train).min(neg.len());
        // fix rounding so the total matches
        while pos_train + neg_train < n_train && pos_train < pos.len() {
            pos_train += 1;
        }
        while pos_train + neg_train > n_train && neg_train > 0 {
            neg_train -= 1;
        }
        train.extend_from_slice(&pos[..pos_train]);
        train.extend_from_slice(&neg[..neg_train]);
        test.extend_from_slice(&pos[pos_train..]);
        test.extend_from_slice(&neg[neg_train..]);
    } else {
        let mut all: Vec<usize> = (0..m).collect();
        all.shuffle(&mut rng);
        train.extend_from_slice(&all[..n_train]);
        test.extend_from_slice(&all[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified, seeded train/test split.
pub fn train_test_split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.labels(), spec)?;
    Ok((dataset.subset(&train)?, dataset.subset(&test)?))
}

/// Stratified fold id for every sample: each class is shuffled and dealt
/// round-robin, continuing the deal across classes so fold sizes differ by
/// at most one.
pub fn stratified_folds(labels: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::InvalidParameter(format!(
            "{} samples cannot fill {k} folds",
            labels.len()
        )));
    }
    let (mut pos, mut neg) = class_indices(labels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; labels.len()];
    for (slot, &i) in pos.iter().chain(neg.iter()).enumerate() {
        fold[i] = slot % k;
    }
    Ok(fold)
}

/// Fold assignment for `k`-fold cross-validation; every class must have at
/// least `k` members.
pub fn kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    let (p, n) = dataset.class_counts();
    if p < k || n < k {
        return Err(Error::InvalidParameter(format!(
            "each class needs at least {k} members for {k}-fold splitting (have {p} positive, {n} negative)"
        )));
    }
    stratified_folds(dataset.labels(), k, seed)
}
