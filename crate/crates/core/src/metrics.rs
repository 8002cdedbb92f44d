//! Goodness-of-fit metrics used in the comparison tables: Pearson correlation,
//! relative RMSE, MAE and relative MAE, plus aggregation over several targets.

use crate::error::{Error, Result};
use crate::suitability::{OutOfFold, Target};
use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

fn check(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::Shape { expected: y.len(), got: yhat.len() });
    }
    if y.is_empty() {
        return Err(Error::Evaluation("metric over an empty vector".into()));
    }
    Ok(())
}

fn mean(v: ArrayView1<'_, f64>) -> f64 {
    v.sum() / v.len() as f64
}

/// Pearson correlation coefficient between truth and prediction.
pub fn cc(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<f64> {
    check(y, yhat)?;
    if y.len() < 2 {
        return Err(Error::Evaluation("correlation needs at least two samples".into()));
    }
    let (my, mh) = (mean(y), mean(yhat));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mh);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Evaluation("correlation undefined for a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `sqrt(sum (y - yhat)^2 / sum (y - mean(y))^2)`.
pub fn rrmse(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<f64> {
    check(y, yhat)?;
    let my = mean(y);
    let num: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = y.iter().map(|a| (a - my) * (a - my)).sum();
    if den == 0.0 {
        return Err(Error::Evaluation("relative RMSE undefined for constant truth".into()));
    }
    Ok((num / den).sqrt())
}

/// Mean absolute error.
pub fn mae(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<f64> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// `sum |y - yhat| / sum |y - mean(y)|`.
pub fn rmae(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<f64> {
    check(y, yhat)?;
    let my = mean(y);
    let num: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = y.iter().map(|a| (a - my).abs()).sum();
    if den == 0.0 {
        return Err(Error::Evaluation("relative MAE undefined for constant truth".into()));
    }
    Ok(num / den)
}

/// MAE together with rMAE; fails only if both are undefined or the inputs are
/// malformed. Use [`mae`] directly when the truth may be constant.
pub fn mae_rmae(y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<(f64, f64)> {
    Ok((mae(y, yhat)?, rmae(y, yhat)?))
}

/// All four metrics for one target; `None` marks an undefined value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub target: Target,
    pub cc: Option<f64>,
    pub rrmse: Option<f64>,
    pub mae: f64,
    pub rmae: Option<f64>,
}

impl TargetMetrics {
    pub fn compute(target: Target, y: ArrayView1<'_, f64>, yhat: ArrayView1<'_, f64>) -> Result<Self> {
        Ok(Self {
            target,
            mae: mae(y, yhat)?,
            cc: cc(y, yhat).ok(),
            rrmse: rrmse(y, yhat).ok(),
            rmae: rmae(y, yhat).ok(),
        })
    }
}

/// How several targets are summarised into one row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Unweighted mean of the per-target metrics.
    #[default]
    Mean,
    /// Metrics of all residuals concatenated into one vector.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cc: Option<f64>,
    pub rrmse: Option<f64>,
    pub mae: f64,
    pub rmae: Option<f64>,
    pub aggregation: Aggregation,
    pub per_target: Vec<TargetMetrics>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Unweighted mean of each metric over targets. Targets where a metric is
/// undefined are left out of that metric's mean.
pub fn aggregate_multi(per_target: Vec<TargetMetrics>) -> Result<MetricsReport> {
    if per_target.is_empty() {
        return Err(Error::Evaluation("no targets to aggregate".into()));
    }
    let n = per_target.len() as f64;
    Ok(MetricsReport {
        cc: mean_defined(per_target.iter().map(|t| t.cc)),
        rrmse: mean_defined(per_target.iter().map(|t| t.rrmse)),
        mae: per_target.iter().map(|t| t.mae).sum::<f64>() / n,
        rmae: mean_defined(per_target.iter().map(|t| t.rmae)),
        aggregation: Aggregation::Mean,
        per_target,
    })
}

/// Builds a report from out-of-fold predictions of one or more targets.
pub fn report(predictions: &[OutOfFold], aggregation: Aggregation) -> Result<MetricsReport> {
    let per_target = predictions
        .iter()
        .map(|p| TargetMetrics::compute(p.target, p.truth.view(), p.predicted.view()))
        .collect::<Result<Vec<_>>>()?;
    match aggregation {
        Aggregation::Mean => aggregate_multi(per_target),
        Aggregation::Pooled => {
            if predictions.is_empty() {
                return Err(Error::Evaluation("no targets to aggregate".into()));
            }
            let y: ndarray::Array1<f64> = predictions.iter().flat_map(|p| p.truth.iter().copied()).collect();
            let yhat: ndarray::Array1<f64> = predictions.iter().flat_map(|p| p.predicted.iter().copied()).collect();
            Ok(MetricsReport {
                cc: cc(y.view(), yhat.view()).ok(),
                rrmse: rrmse(y.view(), yhat.view()).ok(),
                mae: mae(y.view(), yhat.view())?,
                rmae: rmae(y.view(), yhat.view()).ok(),
                aggregation,
                per_target,
            })
        }
    }
}
