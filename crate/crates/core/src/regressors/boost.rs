//! Gradient boosting on squared error: stage 0 is the target mean, each
//! further stage fits a depth-limited tree to the current residuals and adds
//! it scaled by the learning rate.

use super::tree::{RegressionTree, TreeParams};
use crate::error::{Error, Result};
use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl BoostedModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                self.init
                    + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
            })
            .collect()
    }

    /// Predictions after each stage, starting with the constant stage 0.
    pub fn staged_predict(&self, x: ArrayView2<'_, f64>) -> Vec<Array1<f64>> {
        let mut current = Array1::from_elem(x.nrows(), self.init);
        let mut stages = vec![current.clone()];
        for t in &self.trees {
            for (p, row) in current.iter_mut().zip(x.rows()) {
                *p += self.learning_rate * t.predict_row(row);
            }
            stages.push(current.clone());
        }
        stages
    }

    pub fn n_stages(&self) -> usize {
        self.trees.len()
    }
}

pub(crate) fn fit(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    n_trees: usize,
    learning_rate: f64,
    max_depth: usize,
) -> Result<BoostedModel> {
    let m = x.nrows();
    if m == 0 {
        return Err(Error::Fit("empty training set".into()));
    }
    if n_trees == 0 || !(learning_rate > 0.0) || max_depth == 0 {
        return Err(Error::Config(format!(
            "boosting needs n_trees >= 1, learning_rate > 0, max_depth >= 1 (got {n_trees}, {learning_rate}, {max_depth})"
        )));
    }
    let init = y.sum() / m as f64;
    let params = TreeParams {
        max_depth: Some(max_depth),
        ..Default::default()
    };
    // Unused: trees here never subsample features.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut current = vec![init; m];
    let mut residual = vec![0.0; m];
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        for i in 0..m {
            residual[i] = y[i] - current[i];
        }
        let tree = RegressionTree::grow(x, &residual, (0..m).collect(), params, &mut rng);
        for (i, row) in x.rows().into_iter().enumerate() {
            current[i] += learning_rate * tree.predict_row(row);
        }
        trees.push(tree);
    }
    Ok(BoostedModel {
        init,
        learning_rate,
        trees,
    })
}
