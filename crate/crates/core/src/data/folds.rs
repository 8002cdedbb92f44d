use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A k-way partition of sample indices. Fold `i` is the held-out test set of
/// split `i`; its complement is the training set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn n_samples(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Training indices of split `fold`, ascending.
    pub fn train(&self, fold: usize) -> Vec<usize> {
        let mut train: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        train.sort_unstable();
        train
    }
}

/// Splits `0..m` into `k` folds whose sizes differ by at most one.
///
/// With `labels`, samples are bucketed into `ceil(sqrt(k))` label-quantile
/// bins, each bin is shuffled, and the concatenation is dealt round-robin so
/// every fold sees a similar label distribution. Without labels the whole
/// index set is shuffled and dealt.
pub fn make_folds(m: usize, k: usize, seed: u64, labels: Option<&[f64]>) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!(
            "k = {k}: cross validation needs at least 2 folds"
        )));
    }
    if k > m {
        return Err(Error::Config(format!("k = {k} exceeds sample count {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match labels {
        Some(y) => {
            if y.len() != m {
                return Err(Error::Config(format!(
                    "{} labels supplied for {m} samples",
                    y.len()
                )));
            }
            let mut by_label: Vec<usize> = (0..m).collect();
            by_label.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
            let bins = (k as f64).sqrt().ceil() as usize;
            let mut order = Vec::with_capacity(m);
            for b in 0..bins {
                let mut bin = by_label[b * m / bins..(b + 1) * m / bins].to_vec();
                bin.shuffle(&mut rng);
                order.extend(bin);
            }
            order
        }
        None => {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            order
        }
    };
    let mut folds = vec![Vec::with_capacity(m / k + 1); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan {
        k,
        folds,
        seed,
        stratified: labels.is_some(),
    })
}
