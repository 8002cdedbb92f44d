//! Tabular dataset representation and everything that touches raw samples:
//! ingestion, min-max scaling, fold construction, column projection and
//! synthetic data for verification.

mod folds;
mod ingest;
mod scaling;
mod synth;

pub use folds::{make_folds, FoldPlan};
pub use ingest::{load_csv, parse_csv, write_csv, ColumnRole, Schema};
pub use scaling::{scale_unit_interval, ScalingSpec};
pub use synth::{synth_dataset, synth_with_design_columns};

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

/// Upper end of the Disease Progression Score range.
pub const MAX_DPS: f64 = 6.0;

/// Role a feature column plays in the experiment design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRole {
    /// A measured observable (marker-combination percentage).
    Marker,
    /// Treatment group; excluded from the admissible set when treatment is not allowed.
    Group,
    /// Sample location.
    Location,
}

impl fmt::Display for FeatureRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureRole::Marker => "marker",
            FeatureRole::Group => "group",
            FeatureRole::Location => "location",
        })
    }
}

/// An `m x n` feature table with named, role-tagged columns and a scalar label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    feature_names: Vec<String>,
    feature_roles: Vec<FeatureRole>,
    labels: Array1<f64>,
    scaled: bool,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        feature_names: Vec<String>,
        feature_roles: Vec<FeatureRole>,
        labels: Array1<f64>,
        scaled: bool,
    ) -> Result<Self> {
        let (m, n) = features.dim();
        if feature_names.len() != n || feature_roles.len() != n {
            return Err(Error::Validation(format!(
                "{n} feature columns but {} names and {} roles",
                feature_names.len(),
                feature_roles.len()
            )));
        }
        if labels.len() != m {
            return Err(Error::Validation(format!(
                "{m} samples but {} labels",
                labels.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(((i, j), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {v} at sample {i}, feature `{}`",
                feature_names[j]
            )));
        }
        if let Some((i, y)) = labels
            .iter()
            .enumerate()
            .find(|(_, y)| !(0.0..=MAX_DPS).contains(*y))
        {
            return Err(Error::Validation(format!(
                "label {y} of sample {i} outside [0, {MAX_DPS}]"
            )));
        }
        if scaled {
            if let Some(((i, j), v)) = features
                .indexed_iter()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::Validation(format!(
                    "dataset flagged as scaled but value {v} at sample {i}, feature {j} is outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            features,
            feature_names,
            feature_roles,
            labels,
            scaled,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn feature(&self, j: usize) -> ArrayView1<'_, f64> {
        self.features.column(j)
    }

    pub fn labels(&self) -> ArrayView1<'_, f64> {
        self.labels.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_roles(&self) -> &[FeatureRole] {
        &self.feature_roles
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Indices of columns carrying the given role.
    pub fn indices_with_role(&self, role: FeatureRole) -> Vec<usize> {
        self.feature_roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == role)
            .map(|(j, _)| j)
            .collect()
    }

    pub(crate) fn with_features(&self, features: Array2<f64>, scaled: bool) -> Self {
        Self {
            features,
            feature_names: self.feature_names.clone(),
            feature_roles: self.feature_roles.clone(),
            labels: self.labels.clone(),
            scaled,
        }
    }
}

/// An ordered, duplicate-free selection of feature indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeaturePartition(Vec<usize>);

impl FeaturePartition {
    /// Builds a partition valid for a dataset with `n_features` columns.
    pub fn new(indices: Vec<usize>, n_features: usize) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &j in &indices {
            if j >= n_features {
                return Err(Error::Partition(format!(
                    "index {j} out of range for {n_features} features"
                )));
            }
            if !seen.insert(j) {
                return Err(Error::Partition(format!("duplicate index {j}")));
            }
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Every index `0..n` in natural order.
    pub fn full(n_features: usize) -> Self {
        Self((0..n_features).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Cardinality `w`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.contains(&j)
    }

    /// Appends `j`; fails on duplicates.
    pub fn with(&self, j: usize) -> Result<Self> {
        if self.contains(j) {
            return Err(Error::Partition(format!("duplicate index {j}")));
        }
        let mut next = self.0.clone();
        next.push(j);
        Ok(Self(next))
    }

    /// Same indices in ascending order.
    pub fn sorted(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_unstable();
        Self(v)
    }

    /// Indices of `0..n_features` not in this partition, ascending.
    pub fn complement(&self, n_features: usize) -> Vec<usize> {
        (0..n_features).filter(|j| !self.contains(*j)).collect()
    }
}

/// Read-only view of a dataset restricted to a subset of columns.
#[derive(Debug, Clone)]
pub struct DatasetView<'a> {
    dataset: &'a Dataset,
    columns: Vec<usize>,
}

impl<'a> DatasetView<'a> {
    pub fn n_samples(&self) -> usize {
        self.dataset.n_samples()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn feature_names(&self) -> Vec<&'a str> {
        self.columns
            .iter()
            .map(|&j| self.dataset.feature_names[j].as_str())
            .collect()
    }

    pub fn labels(&self) -> ArrayView1<'a, f64> {
        self.dataset.labels.view()
    }

    pub fn to_matrix(&self) -> Array2<f64> {
        self.dataset.features.select(Axis(1), &self.columns)
    }

    /// Projects this view again; `b` indexes the view's columns.
    pub fn project(&self, b: &FeaturePartition) -> Result<DatasetView<'a>> {
        let columns = b
            .indices()
            .iter()
            .map(|&i| {
                self.columns.get(i).copied().ok_or_else(|| {
                    Error::Partition(format!(
                        "index {i} out of range for a view of width {}",
                        self.columns.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DatasetView {
            dataset: self.dataset,
            columns,
        })
    }
}

/// Projection `P_b`: exposes only the columns of `b`, in the order of `b`.
pub fn project_features<'a>(d: &'a Dataset, b: &FeaturePartition) -> Result<DatasetView<'a>> {
    if let Some(&j) = b.indices().iter().find(|&&j| j >= d.n_features()) {
        return Err(Error::Partition(format!(
            "index {j} out of range for {} features",
            d.n_features()
        )));
    }
    Ok(DatasetView {
        dataset: d,
        columns: b.indices().to_vec(),
    })
}

/// Maps total paw points (0-12) to the Disease Progression Score (0-6).
pub fn dps_from_points(total_points: u32) -> Result<u32> {
    Ok(match total_points {
        0 => 0,
        1 => 1,
        2 => 2,
        3..=4 => 3,
        5..=7 => 4,
        8..=10 => 5,
        11..=12 => 6,
        p => {
            return Err(Error::Validation(format!(
                "total points {p} outside [0, 12]"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn three_columns() -> Dataset {
        Dataset::new(
            array![[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]],
            vec!["a".into(), "b".into(), "c".into()],
            vec![FeatureRole::Marker; 3],
            array![1.0, 2.0],
            true,
        )
        .unwrap()
    }

    #[test]
    fn dps_table() {
        let expected = [0, 1, 2, 3, 3, 4, 4, 4, 5, 5, 5, 6, 6];
        for (p, want) in expected.iter().enumerate() {
            assert_eq!(dps_from_points(p as u32).unwrap(), *want, "points {p}");
        }
        assert!(dps_from_points(13).is_err());
    }

    #[test]
    fn dps_monotone_and_surjective() {
        let scores: Vec<u32> = (0..=12).map(|p| dps_from_points(p).unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] <= w[1]));
        for s in 0..=6 {
            assert!(scores.contains(&s));
        }
    }

    #[test]
    fn rejects_duplicate_names_and_bad_labels() {
        let dup = Dataset::new(
            array![[0.0, 0.0]],
            vec!["a".into(), "a".into()],
            vec![FeatureRole::Marker; 2],
            array![0.0],
            false,
        );
        assert!(matches!(dup, Err(Error::Schema(_))));
        let label = Dataset::new(
            array![[0.0]],
            vec!["a".into()],
            vec![FeatureRole::Marker],
            array![6.5],
            false,
        );
        assert!(matches!(label, Err(Error::Validation(_))));
    }

    #[test]
    fn identity_projection() {
        let d = three_columns();
        let view = project_features(&d, &FeaturePartition::full(3)).unwrap();
        assert_eq!(view.to_matrix(), d.features().to_owned());
        assert_eq!(view.labels(), d.labels());
    }

    #[test]
    fn reordering_projection() {
        let d = three_columns();
        let b = FeaturePartition::new(vec![2, 0], 3).unwrap();
        let view = project_features(&d, &b).unwrap();
        assert_eq!(view.to_matrix(), array![[0.3, 0.1], [0.6, 0.4]]);
        assert_eq!(view.feature_names(), vec!["c", "a"]);
    }

    #[test]
    fn empty_projection_keeps_labels() {
        let d = three_columns();
        let view = project_features(&d, &FeaturePartition::empty()).unwrap();
        assert_eq!(view.to_matrix().dim(), (2, 0));
        assert_eq!(view.labels(), array![1.0, 2.0]);
    }

    #[test]
    fn projection_rejects_out_of_range() {
        let d = three_columns();
        assert!(FeaturePartition::new(vec![3], 3).is_err());
        assert!(FeaturePartition::new(vec![1, 1], 3).is_err());
        let b = FeaturePartition(vec![5]);
        assert!(matches!(project_features(&d, &b), Err(Error::Partition(_))));
    }

    proptest! {
        #[test]
        fn projection_composes(perm in Just(vec![0usize, 1, 2]).prop_shuffle(), w in 0usize..=3) {
            let d = three_columns();
            let b = FeaturePartition::new(perm[..w].to_vec(), 3).unwrap();
            let once = project_features(&d, &b).unwrap();
            let twice = once.project(&FeaturePartition::full(w)).unwrap();
            prop_assert_eq!(once.to_matrix(), twice.to_matrix());
            prop_assert_eq!(once.columns(), twice.columns());
        }
    }
}
