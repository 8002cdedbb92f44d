//! Feature-selection methods: the sequential-forward-selection wrapper,
//! model-free filter rankings, the forest-based embedded ranking, and the
//! shared protocol that scores a fixed selection with every learner family.

mod embedded;
mod filters;
mod sfs;

pub use embedded::{default_mdi_forest, embedded_rank_mdi};
pub use filters::{
    anova_f, filter_rank_anova, filter_rank_mi, filter_rank_pca, mutual_information, ANOVA_MAX_GROUPS, MI_BINS,
    PCA_COMPONENTS,
};
pub use sfs::{sfs, sfs_sweep, sfs_with_evaluator, sfs_with_options, SfsOptions};

use crate::data::{Dataset, FeaturePartition};
use crate::error::{Error, Result};
use crate::metrics::{self, Aggregation, MetricsReport};
use crate::regressors::{HyperGrid, RegressorKind, RegressorSpec};
use crate::suitability::{cost_cmp, EvaluationRecord, Evaluator, SuitabilityConfig, Target};
use serde::{Deserialize, Serialize};
use std::time::Duration;

/// Default number of features kept by filter/embedded methods under MDS.
pub const DEFAULT_W_DISEASE: usize = 12;
/// Default number of features kept under MIS and MIDS.
pub const DEFAULT_W_STATE: usize = 10;

/// One score per feature, tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub method: String,
    #[serde(with = "crate::serde_cost::vec")]
    pub scores: Vec<f64>,
}

impl ImportanceVector {
    pub fn new(method: impl Into<String>, scores: Vec<f64>) -> Self {
        Self { method: method.into(), scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Feature indices from most to least important (ties: lowest index first).
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }
}

/// The `w` highest-scoring features (ties broken by lowest index), sorted.
pub fn top_w(importance: &ImportanceVector, w: usize) -> Result<FeaturePartition> {
    let all: Vec<usize> = (0..importance.len()).collect();
    top_w_among(importance, w, &all)
}

/// Like [`top_w`] but only features in `admissible` may be chosen.
pub fn top_w_among(importance: &ImportanceVector, w: usize, admissible: &[usize]) -> Result<FeaturePartition> {
    if w == 0 || w > admissible.len() {
        return Err(Error::Config(format!(
            "cannot keep {w} features out of {} admissible",
            admissible.len()
        )));
    }
    let mut chosen: Vec<usize> = importance
        .ranking()
        .into_iter()
        .filter(|j| admissible.contains(j))
        .take(w)
        .collect();
    chosen.sort_unstable();
    FeaturePartition::new(chosen, importance.len())
}

/// Targets a ranking is scored against for a configuration: the label when
/// it is a target, plus every feature when reconstruction is weighted.
pub fn ranking_targets(dataset: &Dataset, config: &SuitabilityConfig) -> Vec<Target> {
    let mut targets = Vec::new();
    if config.include_label_target || config.beta1 > 0.0 {
        targets.push(Target::Label);
    }
    if config.beta2 > 0.0 {
        targets.extend((0..dataset.n_features()).map(Target::Feature));
    }
    targets
}

/// Cost of one candidate set during a search step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub feature: usize,
    #[serde(with = "crate::serde_cost")]
    pub j: f64,
}

/// One SFS step: every candidate tried, the feature accepted (if any) and the
/// incumbent J afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub candidates: Vec<CandidateScore>,
    pub accepted: Option<usize>,
    #[serde(with = "crate::serde_cost")]
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    /// Selected features in the order they were accepted.
    pub selected: Vec<usize>,
    /// `J` of the empty set.
    #[serde(with = "crate::serde_cost")]
    pub initial_j: f64,
    pub steps: Vec<StepTrace>,
    pub record: EvaluationRecord,
    pub grid_point: RegressorSpec,
    pub metrics: Option<MetricsReport>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SelectionResult {
    /// `J` after each accepted step.
    pub fn accepted_costs(&self) -> Vec<f64> {
        self.steps.iter().filter(|s| s.accepted.is_some()).map(|s| s.j).collect()
    }

    /// Number of `J` evaluations the search performed (excluding the empty set).
    pub fn candidates_tried(&self) -> usize {
        self.steps.iter().map(|s| s.candidates.len()).sum()
    }
}

/// Best grid point of one learner family for a fixed selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEvaluation {
    pub kind: RegressorKind,
    pub record: EvaluationRecord,
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedSelectionEvaluation {
    #[serde(with = "crate::serde_cost")]
    pub min_j: f64,
    /// Index into `families` of the minimising family.
    pub best: usize,
    pub families: Vec<FamilyEvaluation>,
}

impl FixedSelectionEvaluation {
    pub fn best_family(&self) -> &FamilyEvaluation {
        &self.families[self.best]
    }
}

/// Scores a fixed selection with every grid point of every family; each
/// family keeps its lowest-J point and the overall minimum is reported.
pub fn evaluate_selection(
    dataset: &Dataset,
    b: &FeaturePartition,
    config: &SuitabilityConfig,
    families: &[HyperGrid],
    aggregation: Aggregation,
) -> Result<FixedSelectionEvaluation> {
    if families.is_empty() {
        return Err(Error::Config("no learner families to evaluate with".into()));
    }
    let mut out = Vec::with_capacity(families.len());
    for grid in families {
        let mut best: Option<(EvaluationRecord, Evaluator<'_>)> = None;
        for point in &grid.points {
            let evaluator = Evaluator::new(dataset, config, point.clone())?;
            let record = evaluator.j_cv(b)?;
            if best.as_ref().is_none_or(|(r, _)| cost_cmp(record.j, r.j).is_lt()) {
                best = Some((record, evaluator));
            }
        }
        let (record, evaluator) = best.ok_or_else(|| Error::Config(format!("empty grid for {}", grid.kind)))?;
        let oof = evaluator.out_of_fold(b)?;
        let metrics = if oof.is_empty() { None } else { Some(metrics::report(&oof, aggregation)?) };
        out.push(FamilyEvaluation { kind: grid.kind, record, metrics });
    }
    let best = (0..out.len())
        .min_by(|&a, &b| cost_cmp(out[a].record.j, out[b].record.j).then(a.cmp(&b)))
        .expect("non-empty");
    Ok(FixedSelectionEvaluation { min_j: out[best].record.j, best, families: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_dataset;
    use crate::suitability::{j_cv, preset};

    fn iv(scores: Vec<f64>) -> ImportanceVector {
        ImportanceVector::new("t", scores)
    }

    fn linear() -> RegressorSpec {
        RegressorSpec::LinearElastic { alpha1: 0.0, alpha2: 0.0 }
    }

    fn synth(m: usize, n: usize, relevant: &[usize], sigma: f64, seed: u64) -> Dataset {
        synth_dataset(m, n, &FeaturePartition::new(relevant.to_vec(), n).unwrap(), sigma, seed).unwrap()
    }

    #[test]
    fn top_w_examples() {
        assert_eq!(top_w(&iv(vec![3.0, 1.0, 2.0]), 2).unwrap().indices(), &[0, 2]);
        assert_eq!(top_w(&iv(vec![1.0; 4]), 2).unwrap().indices(), &[0, 1]);
        assert_eq!(top_w(&iv(vec![0.3, 0.1, 0.2]), 3).unwrap().indices(), &[0, 1, 2]);
        assert!(matches!(top_w(&iv(vec![1.0, 2.0]), 3), Err(Error::Config(_))));
        assert!(matches!(top_w(&iv(vec![1.0, 2.0]), 0), Err(Error::Config(_))));
        assert_eq!(top_w_among(&iv(vec![3.0, 1.0, 2.0]), 2, &[1, 2]).unwrap().indices(), &[1, 2]);
        assert_eq!(top_w(&iv(vec![f64::INFINITY, 1.0, 2.0]), 1).unwrap().indices(), &[0]);
    }

    #[test]
    fn sfs_picks_noiseless_feature_first() {
        let data = synth(60, 6, &[3], 0.0, 4);
        let config = preset("mds").unwrap();
        let result = sfs(&data, &config, &linear()).unwrap();
        assert_eq!(result.selected[0], 3);
        assert!(result.selected.len() <= 3);
        // Brute force over single features agrees on the argmin.
        let singles: Vec<f64> = (0..6)
            .map(|j| j_cv(&data, &config, &linear(), &FeaturePartition::new(vec![j], 6).unwrap()).unwrap().j)
            .collect();
        let argmin = (0..6).min_by(|&a, &b| singles[a].total_cmp(&singles[b])).unwrap();
        assert_eq!(argmin, 3);
        assert_eq!(result.steps[0].candidates.iter().map(|c| c.j).collect::<Vec<_>>(), singles);
    }

    #[test]
    fn sfs_trace_strictly_decreases() {
        let data = synth(50, 8, &[0, 4], 0.3, 9);
        let result = sfs(&data, &preset("mds").unwrap(), &linear()).unwrap();
        let costs = result.accepted_costs();
        assert!(costs.windows(2).all(|w| w[1] < w[0]));
        if let Some(first) = costs.first() {
            assert!(*first < result.initial_j);
        }
        assert_eq!(result.record.j, *costs.last().unwrap_or(&result.initial_j));
        let mut distinct = result.selected.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), result.selected.len());
    }

    #[test]
    fn mis_caps_selection_size() {
        let data = synth(30, 14, &[0], 0.1, 2);
        let mut config = preset("mis").unwrap();
        config.cardinality_penalty = crate::suitability::CardinalityPenalty::Threshold { max: 3 };
        let result = sfs(&data, &config, &RegressorSpec::LinearElastic { alpha1: 0.0, alpha2: 0.1 }).unwrap();
        assert!(result.selected.len() <= 3);
    }

    #[test]
    fn group_column_not_admissible_under_mds() {
        let data = crate::data::synth_with_design_columns(36, 6, &FeaturePartition::new(vec![2], 6).unwrap(), 0.1, 1)
            .unwrap();
        let config = preset("mds").unwrap();
        let result = sfs(&data, &config, &linear()).unwrap();
        assert!(!result.selected.contains(&0));
        assert!(result.steps.iter().all(|s| s.candidates.iter().all(|c| c.feature != 0)));
    }

    #[test]
    fn sweep_keeps_lowest_final_cost() {
        let data = synth(40, 5, &[1], 0.2, 6);
        let config = preset("mds").unwrap();
        let grid = HyperGrid::linear(&[0.0, 5.0], &[0.0, 5.0]).unwrap();
        let best = sfs_sweep(&data, &config, &grid, &SfsOptions::default()).unwrap();
        for point in &grid.points {
            let run = sfs(&data, &config, point).unwrap();
            assert!(best.record.j <= run.record.j);
        }
        assert_eq!(best.method, "sfs_linear_elastic");
    }

    #[test]
    fn evaluate_selection_single_family() {
        let data = synth(40, 5, &[1], 0.2, 6);
        let config = preset("mds").unwrap();
        let grid = HyperGrid::linear(&[0.0, 1.0], &[0.0]).unwrap();
        let b = FeaturePartition::new(vec![1, 2], 5).unwrap();
        let eval = evaluate_selection(&data, &b, &config, &[grid.clone()], Aggregation::Mean).unwrap();
        let direct: Vec<f64> = grid.points.iter().map(|p| j_cv(&data, &config, p, &b).unwrap().j).collect();
        assert_eq!(eval.min_j, direct.iter().copied().fold(f64::INFINITY, f64::min));
        assert_eq!(eval.families.len(), 1);
        assert!(eval.best_family().metrics.is_some());
    }

    #[test]
    fn ranking_targets_follow_weights() {
        let data = synth(20, 3, &[0], 0.1, 1);
        assert_eq!(ranking_targets(&data, &preset("mds").unwrap()), vec![Target::Label]);
        assert_eq!(ranking_targets(&data, &preset("mis").unwrap()).len(), 3);
        assert_eq!(ranking_targets(&data, &preset("mids").unwrap()).len(), 4);
    }
}
