//! Mean-decrease-in-impurity importances from a random forest.

use super::ImportanceVector;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::regressors::{self, Fitted, RegressorSpec};
use crate::seeding;
use crate::suitability::Target;
use ndarray::{Array1, Array2};

/// Forest used for MDI rankings unless configured otherwise.
pub fn default_mdi_forest(seed: u64) -> RegressorSpec {
    RegressorSpec::RandomForest { n_trees: 100, max_depth: None, seed }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else if !v.is_empty() {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

/// Impurity importance of each feature for predicting each target, normalised
/// to sum 1 per target and averaged over targets. A feature never predicts
/// itself: for a feature target, that column is left out of the forest and
/// scores 0 for that target.
pub fn embedded_rank_mdi(dataset: &Dataset, targets: &[Target], forest: &RegressorSpec) -> Result<ImportanceVector> {
    let RegressorSpec::RandomForest { seed, .. } = forest else {
        return Err(Error::Config(format!("MDI ranking needs a random forest, got {forest}")));
    };
    if targets.is_empty() {
        return Err(Error::Config("mdi ranking needs at least one target".into()));
    }
    let n = dataset.n_features();
    let x = dataset.features();
    let mut total = vec![0.0; n];
    for &target in targets {
        let (columns, y): (Vec<usize>, Array1<f64>) = match target {
            Target::Label => ((0..n).collect(), dataset.labels().to_owned()),
            Target::Feature(t) => ((0..n).filter(|&j| j != t).collect(), dataset.feature(t).to_owned()),
        };
        if columns.is_empty() {
            continue;
        }
        let sub = Array2::from_shape_fn((x.nrows(), columns.len()), |(i, c)| x[[i, columns[c]]]);
        let stream = match target {
            Target::Label => 0,
            Target::Feature(t) => t as u64 + 1,
        };
        let spec = forest.with_seed(seeding::derive(*seed, &[stream]));
        let model = regressors::fit(&spec, sub.view(), y.view())?;
        let Fitted::Forest(f) = model.fitted() else {
            unreachable!("random forest spec produced another model")
        };
        let imp = normalize(f.impurity_importance());
        for (c, &j) in columns.iter().enumerate() {
            total[j] += imp[c] / targets.len() as f64;
        }
    }
    Ok(ImportanceVector::new("mdi", normalize(total)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureRole;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64, mut label: impl FnMut(&[f64]) -> f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((m, n), |_| rng.random::<f64>());
        let y: Array1<f64> = x.rows().into_iter().map(|r| label(r.as_slice().unwrap())).collect();
        Dataset::new(x, (0..n).map(|j| format!("f{j}")).collect(), vec![FeatureRole::Marker; n], y, true).unwrap()
    }

    #[test]
    fn threshold_feature_dominates() {
        let d = random(2000, 6, 1, |r| if r[2] > 0.4 { 5.0 } else { 1.0 });
        let iv = embedded_rank_mdi(&d, &[Target::Label], &default_mdi_forest(3)).unwrap();
        assert!(iv.scores[2] > 0.9, "{:?}", iv.scores);
        assert!((iv.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noise_label_spreads_importance() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let noise: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() * 6.0).collect();
        let mut i = 0;
        let d = random(5000, 20, 4, |_| {
            i += 1;
            noise[i - 1]
        });
        let spec = default_mdi_forest(1);
        let iv = embedded_rank_mdi(&d, &[Target::Label], &spec).unwrap();
        let max = iv.scores.iter().copied().fold(f64::MIN, f64::max);
        let min = iv.scores.iter().copied().fold(f64::MAX, f64::min);
        assert!(max / min < 3.0, "{:?}", iv.scores);
    }

    #[test]
    fn multi_target_excludes_self_and_sums_to_one() {
        let d = random(80, 4, 2, |r| r[0] * 6.0);
        let targets: Vec<Target> = (0..4).map(Target::Feature).chain([Target::Label]).collect();
        let iv = embedded_rank_mdi(&d, &targets, &RegressorSpec::RandomForest { n_trees: 5, max_depth: None, seed: 0 })
            .unwrap();
        assert!((iv.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(iv.scores.iter().all(|s| s.is_finite() && *s >= 0.0));
    }

    #[test]
    fn needs_forest_spec() {
        let d = random(10, 2, 0, |r| r[0]);
        let spec = RegressorSpec::LinearElastic { alpha1: 0.0, alpha2: 0.0 };
        assert!(matches!(embedded_rank_mdi(&d, &[Target::Label], &spec), Err(Error::Config(_))));
    }
}
