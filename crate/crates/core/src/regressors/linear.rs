//! Elastic-net linear regression by cyclic coordinate descent.
//!
//! Minimizes `sum_i (y_i - w.x_i - b)^2 + alpha2 * |w|_2^2 + alpha1 * |w|_1`
//! with an unpenalized intercept. The data are centered so the intercept
//! drops out, and updates run on the centered Gram matrix:
//!
//! ```text
//! w_j <- soft(c_j - sum_{k != j} G_jk w_k, alpha1 / 2) / (G_jj + alpha2)
//! ```

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

const TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Array1<f64>,
    pub intercept: f64,
    /// Coordinate-descent sweeps used.
    pub sweeps: usize,
}

impl LinearModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&self.weights) + self.intercept
    }

    /// Value of the training objective at this solution.
    pub fn objective(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, alpha1: f64, alpha2: f64) -> f64 {
        elastic_net_objective(x, y, self.weights.view(), self.intercept, alpha1, alpha2)
    }
}

pub fn elastic_net_objective(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    weights: ArrayView1<'_, f64>,
    intercept: f64,
    alpha1: f64,
    alpha2: f64,
) -> f64 {
    let resid = &y - &(x.dot(&weights) + intercept);
    resid.dot(&resid) + alpha2 * weights.dot(&weights) + alpha1 * weights.iter().map(|w| w.abs()).sum::<f64>()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub(crate) fn fit(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, alpha1: f64, alpha2: f64) -> Result<LinearModel> {
    let (m, w) = x.dim();
    if m == 0 {
        return Err(Error::Fit("empty training set".into()));
    }
    if !(alpha1 >= 0.0 && alpha2 >= 0.0) {
        return Err(Error::Config(format!(
            "regularization must be non-negative (alpha1 = {alpha1}, alpha2 = {alpha2})"
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite training data".into()));
    }

    let x_mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(w));
    let y_mean = y.sum() / m as f64;
    let xc: Array2<f64> = &x - &x_mean;
    let yc = y.mapv(|v| v - y_mean);
    let gram = xc.t().dot(&xc);
    let corr = xc.t().dot(&yc);

    let mut weights = Array1::<f64>::zeros(w);
    // q = G w, maintained incrementally.
    let mut q = Array1::<f64>::zeros(w);
    let half_l1 = alpha1 / 2.0;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..w {
            let denom = gram[[j, j]] + alpha2;
            let old = weights[j];
            let new = if denom > 0.0 {
                let rho = corr[j] - (q[j] - gram[[j, j]] * old);
                soft_threshold(rho, half_l1) / denom
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                weights[j] = new;
                q.scaled_add(delta, &gram.column(j));
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < TOLERANCE {
            break;
        }
    }

    let intercept = y_mean - x_mean.dot(&weights);
    Ok(LinearModel {
        weights,
        intercept,
        sweeps,
    })
}
