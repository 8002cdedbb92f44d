//! Model-free feature rankings: mutual information, one-way ANOVA F and
//! PCA loadings.

use super::ImportanceVector;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{correlation_matrix, symmetric_eigen};
use crate::suitability::Target;
use ndarray::{Array2, ArrayView1};

/// Default number of equal-width bins for the MI estimate.
pub const MI_BINS: usize = 10;

/// Number of leading principal components whose loadings are summed.
pub const PCA_COMPONENTS: usize = 3;

/// Maximum number of distinct target values treated as categorical groups.
pub const ANOVA_MAX_GROUPS: usize = 10;

fn target_values(dataset: &Dataset, target: Target) -> ArrayView1<'_, f64> {
    match target {
        Target::Label => dataset.labels(),
        Target::Feature(j) => dataset.feature(j),
    }
}

/// Equal-width bin assignment over the observed range of `v`.
fn discretize(v: ArrayView1<'_, f64>, bins: usize) -> Vec<usize> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter()
        .map(|&x| {
            if hi > lo {
                (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
            } else {
                0
            }
        })
        .collect()
}

/// Plug-in mutual information (nats) of two variables on an equal-width
/// `bins x bins` histogram.
pub fn mutual_information(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>, bins: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape { expected: x.len(), got: y.len() });
    }
    if x.is_empty() || bins == 0 {
        return Err(Error::Evaluation("mutual information needs samples and at least one bin".into()));
    }
    let (bx, by) = (discretize(x, bins), discretize(y, bins));
    let mut joint = Array2::<f64>::zeros((bins, bins));
    for (&a, &b) in bx.iter().zip(&by) {
        joint[[a, b]] += 1.0;
    }
    let m = x.len() as f64;
    let px: Vec<f64> = joint.rows().into_iter().map(|r| r.sum() / m).collect();
    let py: Vec<f64> = joint.columns().into_iter().map(|c| c.sum() / m).collect();
    let mut mi = 0.0;
    for ((a, b), &count) in joint.indexed_iter() {
        if count > 0.0 {
            let p = count / m;
            mi += p * (p / (px[a] * py[b])).ln();
        }
    }
    Ok(mi.max(0.0))
}

/// Mean over `targets` of `score(feature, target)`, skipping a feature's own
/// column and targets where the score is undefined.
fn rank_against<F>(dataset: &Dataset, targets: &[Target], method: &str, score: F) -> Result<ImportanceVector>
where
    F: Fn(ArrayView1<'_, f64>, ArrayView1<'_, f64>) -> Result<Option<f64>>,
{
    if targets.is_empty() {
        return Err(Error::Config(format!("{method} ranking needs at least one target")));
    }
    let mut scores = Vec::with_capacity(dataset.n_features());
    let mut any_defined = false;
    for j in 0..dataset.n_features() {
        let (mut sum, mut n) = (0.0, 0usize);
        for &t in targets.iter().filter(|&&t| t != Target::Feature(j)) {
            if let Some(s) = score(dataset.feature(j), target_values(dataset, t))? {
                sum += s;
                n += 1;
            }
        }
        any_defined |= n > 0;
        scores.push(if n > 0 { sum / n as f64 } else { 0.0 });
    }
    if !any_defined && dataset.n_features() > 0 {
        return Err(Error::Evaluation(format!("{method} score undefined for every target")));
    }
    Ok(ImportanceVector::new(method, scores))
}

/// Mutual information of every feature with the targets (mean over targets).
pub fn filter_rank_mi(dataset: &Dataset, targets: &[Target], bins: usize) -> Result<ImportanceVector> {
    rank_against(dataset, targets, "mi", |x, y| mutual_information(x, y, bins).map(Some))
}

/// Group labels for the F-test: exact values when few, equal-width bins otherwise.
fn anova_groups(y: ArrayView1<'_, f64>) -> Vec<usize> {
    let mut distinct: Vec<f64> = y.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= ANOVA_MAX_GROUPS {
        y.iter()
            .map(|v| distinct.partition_point(|d| d < v))
            .collect()
    } else {
        discretize(y, ANOVA_MAX_GROUPS)
    }
}

/// One-way ANOVA F statistic of `x` grouped by `groups`.
///
/// Zero within-group variance with non-zero between-group variance gives
/// `+inf`; a feature that is constant everywhere scores 0.
pub fn anova_f(x: ArrayView1<'_, f64>, groups: &[usize]) -> Result<f64> {
    if x.len() != groups.len() {
        return Err(Error::Shape { expected: x.len(), got: groups.len() });
    }
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let mut sums = vec![0.0; n_groups];
    let mut counts = vec![0usize; n_groups];
    for (&v, &g) in x.iter().zip(groups) {
        sums[g] += v;
        counts[g] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Evaluation("F statistic undefined with a single group".into()));
    }
    let n = x.len() as f64;
    let grand = x.sum() / n;
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
    let ssb: f64 = means
        .iter()
        .zip(&counts)
        .map(|(mu, &c)| c as f64 * (mu - grand) * (mu - grand))
        .sum();
    let ssw: f64 = x.iter().zip(groups).map(|(v, &g)| (v - means[g]) * (v - means[g])).sum();
    let df_between = (present - 1) as f64;
    let df_within = n - present as f64;
    if ssb <= 0.0 {
        return Ok(0.0);
    }
    if ssw <= 0.0 || df_within <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((ssb / df_between) / (ssw / df_within))
}

/// ANOVA F of every feature grouped by each target's values (mean over
/// targets; targets with a single group are skipped).
pub fn filter_rank_anova(dataset: &Dataset, targets: &[Target]) -> Result<ImportanceVector> {
    rank_against(dataset, targets, "anova", |x, y| {
        let groups = anova_groups(y);
        match anova_f(x, &groups) {
            Ok(f) => Ok(Some(f)),
            Err(Error::Evaluation(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

/// `importance_j = sum_{i<3} lambda_i |v_ij|` over the leading eigenpairs of
/// the feature correlation matrix. Constant features score 0 and are left out
/// of the matrix.
pub fn filter_rank_pca(dataset: &Dataset) -> Result<ImportanceVector> {
    let n = dataset.n_features();
    if n < PCA_COMPONENTS {
        return Err(Error::Config(format!("PCA ranking needs at least {PCA_COMPONENTS} features, got {n}")));
    }
    let x = dataset.features();
    let varying: Vec<usize> = (0..n)
        .filter(|&j| {
            let col = x.column(j);
            col.iter().any(|&v| v != col[0])
        })
        .collect();
    let mut scores = vec![0.0; n];
    if !varying.is_empty() {
        let sub = Array2::from_shape_fn((x.nrows(), varying.len()), |(i, c)| x[[i, varying[c]]]);
        let (values, vectors) = symmetric_eigen(&correlation_matrix(&sub));
        for comp in 0..PCA_COMPONENTS.min(varying.len()) {
            let lambda = values[comp].max(0.0);
            for (c, &j) in varying.iter().enumerate() {
                scores[j] += lambda * vectors[[c, comp]].abs();
            }
        }
    }
    Ok(ImportanceVector::new("pca", scores))
}
