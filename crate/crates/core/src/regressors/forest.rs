//! Bagged regression trees with per-split feature subsampling.

use super::tree::{RegressionTree, TreeParams};
use crate::error::{Error, Result};
use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<RegressionTree>,
}

impl ForestModel {
    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    /// Arithmetic mean of the tree predictions.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }

    /// Mean decrease in impurity per feature, averaged over trees (unnormalized).
    pub fn impurity_importance(&self) -> Vec<f64> {
        let w = self.trees.first().map_or(0, |t| t.width());
        let mut total = vec![0.0; w];
        for t in &self.trees {
            for (acc, v) in total.iter_mut().zip(t.impurity_importance()) {
                *acc += v;
            }
        }
        total.iter_mut().for_each(|v| *v /= self.trees.len() as f64);
        total
    }
}

/// Number of candidate features per split for a forest over `width` columns.
pub fn max_features(width: usize) -> usize {
    width.div_ceil(3).max(1)
}

pub(crate) fn fit(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    n_trees: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> Result<ForestModel> {
    let m = x.nrows();
    if m == 0 {
        return Err(Error::Fit("empty training set".into()));
    }
    if n_trees == 0 {
        return Err(Error::Config("a forest needs at least one tree".into()));
    }
    let y = y.to_vec();
    let params = TreeParams {
        max_depth,
        max_leaves: None,
        max_features: Some(max_features(x.ncols())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..n_trees)
        .map(|_| {
            let bootstrap: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
            RegressionTree::grow(x, &y, bootstrap, params, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees })
}
