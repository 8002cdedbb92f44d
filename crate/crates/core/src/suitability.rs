//! The suitability cost of a feature partition.
//!
//! For a selected set `b` and a train/test fold `g`:
//!
//! * `M1(b, g)` is the held-out RMSE of predicting the label from `P_b(x)`,
//! * `M2(b, g)` is the *sum* over every discarded feature `j` of the held-out
//!   RMSE of reconstructing feature `j` from `P_b(x)`,
//! * `J'(b, g) = beta1 * M1 + beta2 * M2 + L(|b|)`,
//!
//! and `J(b)` is the mean of `J'` over the folds of a [`FoldPlan`].
//!
//! Costs depend only on the *set* `b`: partitions are sorted before fitting
//! and every model seed is derived from `(model_seed, fold, target)`, so the
//! order in which a search reaches a subset never changes its cost.

use crate::data::{make_folds, Dataset, FeaturePartition, FeatureRole, FoldPlan};
use crate::error::{Error, Result};
use crate::regressors::{self, default_grids, HyperGrid, RegressorKind, RegressorSpec, TrainedModel};
use crate::seeding;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

/// Cardinality penalty `L(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CardinalityPenalty {
    /// `L(w) = 0` for every `w`.
    Zero,
    /// `L(w) = 0` for `w <= max`, infinite above.
    Threshold { max: usize },
}

impl CardinalityPenalty {
    pub fn eval(self, w: usize) -> f64 {
        match self {
            CardinalityPenalty::Zero => 0.0,
            CardinalityPenalty::Threshold { max } if w > max => f64::INFINITY,
            CardinalityPenalty::Threshold { .. } => 0.0,
        }
    }

    /// Largest admissible cardinality, if any.
    pub fn max_size(self) -> Option<usize> {
        match self {
            CardinalityPenalty::Zero => None,
            CardinalityPenalty::Threshold { max } => Some(max),
        }
    }
}

/// The three weightings of the suitability cost used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Minimal disease state: predict the label only.
    Mds,
    /// Minimal immune state: reconstruct the discarded features only.
    Mis,
    /// Minimal immune and disease state: both.
    Mids,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Mds => "mds",
            Preset::Mis => "mis",
            Preset::Mids => "mids",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mds" => Ok(Preset::Mds),
            "mis" => Ok(Preset::Mis),
            "mids" => Ok(Preset::Mids),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected mds, mis or mids)"))),
        }
    }
}

/// Cardinality cap used by the MIS and MIDS presets.
pub const STATE_SIZE_LIMIT: usize = 10;

/// Default number of cross-validation folds.
pub const DEFAULT_FOLDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub cardinality_penalty: CardinalityPenalty,
    pub k: usize,
    pub fold_seed: u64,
    pub model_seed: u64,
    /// Balance label quantiles across folds.
    pub stratified: bool,
    /// Learner grids swept by the outer driver.
    pub grids: Vec<HyperGrid>,
    /// Whether treatment-group columns may be selected.
    pub include_treatment: bool,
    /// Whether the label counts as a target for rankings and reported metrics.
    pub include_label_target: bool,
}

impl SuitabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 >= 0.0 && self.beta2 >= 0.0 && self.beta1.is_finite() && self.beta2.is_finite()) {
            return Err(Error::Config(format!(
                "weights must be finite and non-negative (beta1 = {}, beta2 = {})",
                self.beta1, self.beta2
            )));
        }
        if self.beta1 + self.beta2 <= 0.0 {
            return Err(Error::Config("beta1 + beta2 must be positive".into()));
        }
        if !self.cardinality_penalty.eval(0).is_finite() {
            return Err(Error::Config("cardinality penalty must be finite at 0".into()));
        }
        if self.k < 2 {
            return Err(Error::Config(format!("k = {} leaves no held-out data; need k >= 2", self.k)));
        }
        for grid in &self.grids {
            HyperGrid::new(grid.kind, grid.points.clone())?;
        }
        Ok(())
    }

    /// The grid swept for `kind`: the configured one if present, else the default.
    pub fn grid_for(&self, kind: RegressorKind) -> Result<HyperGrid> {
        match self.grids.iter().find(|g| g.kind == kind) {
            Some(g) => Ok(g.clone()),
            None => default_grids(kind),
        }
    }

    /// Features a search may select.
    pub fn admissible(&self, dataset: &Dataset) -> Vec<usize> {
        (0..dataset.n_features())
            .filter(|&j| self.include_treatment || dataset.feature_roles()[j] != FeatureRole::Group)
            .collect()
    }

    /// Targets whose held-out predictions are scored for `b`.
    pub fn targets(&self, dataset: &Dataset, b: &FeaturePartition) -> Vec<Target> {
        let mut out = Vec::new();
        if self.beta1 > 0.0 {
            out.push(Target::Label);
        }
        if self.beta2 > 0.0 {
            out.extend(b.complement(dataset.n_features()).into_iter().map(Target::Feature));
        }
        out
    }
}

/// Returns the exact weights and penalty of a named preset, with the default
/// learner grids, `k = 4` and seeds 0.
pub fn preset(name: &str) -> Result<SuitabilityConfig> {
    Ok(preset_config(name.parse()?))
}

pub fn preset_config(preset: Preset) -> SuitabilityConfig {
    let (beta1, beta2, cardinality_penalty, include_treatment, include_label_target) = match preset {
        Preset::Mds => (1.0, 0.0, CardinalityPenalty::Zero, false, true),
        Preset::Mis => (0.0, 1.0, CardinalityPenalty::Threshold { max: STATE_SIZE_LIMIT }, true, false),
        Preset::Mids => (1.0, 1.0, CardinalityPenalty::Threshold { max: STATE_SIZE_LIMIT }, true, true),
    };
    let grids = [
        RegressorKind::LinearElastic,
        RegressorKind::Svr,
        RegressorKind::RandomForest,
        RegressorKind::BoostedTrees,
    ]
    .into_iter()
    .map(|kind| default_grids(kind).expect("built-in grid"))
    .collect();
    SuitabilityConfig {
        beta1,
        beta2,
        cardinality_penalty,
        k: DEFAULT_FOLDS,
        fold_seed: 0,
        model_seed: 0,
        stratified: true,
        grids,
        include_treatment,
        include_label_target,
    }
}

/// What a regressor is asked to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Label,
    Feature(usize),
}

impl Target {
    fn stream(self) -> u64 {
        match self {
            Target::Label => 0,
            Target::Feature(j) => j as u64 + 1,
        }
    }
}

/// Root-mean-square error of `model` on `(x, y)`.
pub fn rmse(model: &TrainedModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.nrows() == 0 {
        return Err(Error::Evaluation("RMSE over an empty test set".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Evaluation(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    rmse_of(model.predict(x)?.view(), y)
}

/// Root-mean-square residual between predictions and truth.
pub fn rmse_of(pred: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Evaluation("RMSE over an empty test set".into()));
    }
    if pred.len() != y.len() {
        return Err(Error::Shape { expected: y.len(), got: pred.len() });
    }
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / y.len() as f64).sqrt())
}

/// Per-target summary inside an [`EvaluationRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDiagnostics {
    pub target: Target,
    /// Held-out RMSE on each fold.
    pub fold_rmse: Vec<f64>,
    pub mean_rmse: f64,
}

/// Cross-validated cost of one feature set under one learner grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    /// The evaluated set, sorted ascending.
    pub partition: FeaturePartition,
    /// Per-fold `M1`; absent when `beta1 = 0` or the penalty is infinite.
    pub m1: Option<Vec<f64>>,
    /// Per-fold `M2`; absent when `beta2 = 0` or the penalty is infinite.
    pub m2: Option<Vec<f64>>,
    #[serde(with = "crate::serde_cost")]
    pub penalty: f64,
    #[serde(with = "crate::serde_cost::vec")]
    pub j_prime: Vec<f64>,
    #[serde(with = "crate::serde_cost")]
    pub j: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// M2 targets and their per-fold errors (diagnostics only).
    pub m2_targets: Vec<TargetDiagnostics>,
    pub grid_point: RegressorSpec,
}

impl EvaluationRecord {
    /// Mean over targets of the reconstruction error, for reporting.
    pub fn m2_mean_per_target(&self) -> Option<f64> {
        if self.m2_targets.is_empty() {
            return None;
        }
        Some(self.m2_targets.iter().map(|t| t.mean_rmse).sum::<f64>() / self.m2_targets.len() as f64)
    }
}

/// Out-of-fold predictions for one target, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutOfFold {
    pub target: Target,
    pub truth: Array1<f64>,
    pub predicted: Array1<f64>,
}

#[derive(Debug)]
struct Evaluation {
    record: EvaluationRecord,
    oof: Vec<OutOfFold>,
}

/// Suitability evaluator bound to one dataset, configuration, fold plan and
/// learner grid point. Results are memoised per feature set.
#[derive(Debug)]
pub struct Evaluator<'a> {
    dataset: &'a Dataset,
    config: &'a SuitabilityConfig,
    spec: RegressorSpec,
    folds: FoldPlan,
    cache: Mutex<HashMap<Vec<usize>, Arc<Evaluation>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(dataset: &'a Dataset, config: &'a SuitabilityConfig, spec: RegressorSpec) -> Result<Self> {
        config.validate()?;
        spec.validate()?;
        let labels = config.stratified.then(|| dataset.labels().to_vec());
        let folds = make_folds(dataset.n_samples(), config.k, config.fold_seed, labels.as_deref())?;
        Ok(Self {
            dataset,
            config,
            spec,
            folds,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn config(&self) -> &SuitabilityConfig {
        self.config
    }

    pub fn spec(&self) -> &RegressorSpec {
        &self.spec
    }

    pub fn folds(&self) -> &FoldPlan {
        &self.folds
    }

    /// Number of distinct feature sets evaluated so far.
    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }

    fn target_values(&self, target: Target) -> ArrayView1<'_, f64> {
        match target {
            Target::Label => self.dataset.labels(),
            Target::Feature(j) => self.dataset.feature(j),
        }
    }

    /// Held-out predictions of `target` from columns `b` on one fold.
    fn fold_predictions(&self, b: &[usize], fold: usize, target: Target) -> Result<Array1<f64>> {
        let x = self.dataset.features();
        let y = self.target_values(target);
        let train = self.folds.train(fold);
        let test = self.folds.test(fold);
        if test.is_empty() {
            return Err(Error::Evaluation(format!("fold {fold} has no held-out samples")));
        }
        let y_train: Array1<f64> = train.iter().map(|&i| y[i]).collect();
        if b.is_empty() {
            let mean = y_train.mean().ok_or_else(|| Error::Evaluation("empty training fold".into()))?;
            return Ok(Array1::from_elem(test.len(), mean));
        }
        let x_train = Array2::from_shape_fn((train.len(), b.len()), |(r, c)| x[[train[r], b[c]]]);
        let x_test = Array2::from_shape_fn((test.len(), b.len()), |(r, c)| x[[test[r], b[c]]]);
        let seed = seeding::derive(self.config.model_seed, &[fold as u64, target.stream()]);
        let model = regressors::fit(&self.spec.with_seed(seed), x_train.view(), y_train.view())?;
        model.predict(x_test.view())
    }

    fn fold_rmse(&self, b: &[usize], fold: usize, target: Target) -> Result<(f64, Array1<f64>)> {
        let pred = self.fold_predictions(b, fold, target)?;
        let y = self.target_values(target);
        let truth: Array1<f64> = self.folds.test(fold).iter().map(|&i| y[i]).collect();
        Ok((rmse_of(pred.view(), truth.view())?, pred))
    }

    fn check_fold(&self, fold: usize) -> Result<()> {
        if fold >= self.folds.k {
            return Err(Error::Config(format!("fold {fold} out of range for k = {}", self.folds.k)));
        }
        Ok(())
    }

    /// Held-out label RMSE on `fold`.
    pub fn m1(&self, b: &FeaturePartition, fold: usize) -> Result<f64> {
        self.check_fold(fold)?;
        Ok(self.fold_rmse(b.sorted().indices(), fold, Target::Label)?.0)
    }

    /// Summed held-out reconstruction RMSE of every discarded feature on `fold`.
    pub fn m2(&self, b: &FeaturePartition, fold: usize) -> Result<f64> {
        self.check_fold(fold)?;
        let sorted = b.sorted();
        let targets = sorted.complement(self.dataset.n_features());
        let terms: Vec<f64> = targets
            .par_iter()
            .map(|&j| self.fold_rmse(sorted.indices(), fold, Target::Feature(j)).map(|r| r.0))
            .collect::<Result<_>>()?;
        Ok(terms.iter().sum())
    }

    /// `beta1 * M1 + beta2 * M2 + L(|b|)` on `fold`; zero-weight terms are skipped.
    pub fn j_prime(&self, b: &FeaturePartition, fold: usize) -> Result<f64> {
        self.check_fold(fold)?;
        let penalty = self.config.cardinality_penalty.eval(b.len());
        if penalty.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let m1 = if self.config.beta1 > 0.0 { self.m1(b, fold)? } else { 0.0 };
        let m2 = if self.config.beta2 > 0.0 { self.m2(b, fold)? } else { 0.0 };
        Ok(self.config.beta1 * m1 + self.config.beta2 * m2 + penalty)
    }

    /// Cross-validated cost `J(b)` with per-fold details.
    pub fn j_cv(&self, b: &FeaturePartition) -> Result<EvaluationRecord> {
        Ok(self.evaluate(b)?.record.clone())
    }

    /// Out-of-fold predictions for every scored target of `b` (empty when the
    /// penalty is infinite).
    pub fn out_of_fold(&self, b: &FeaturePartition) -> Result<Vec<OutOfFold>> {
        Ok(self.evaluate(b)?.oof.clone())
    }

    fn evaluate(&self, b: &FeaturePartition) -> Result<Arc<Evaluation>> {
        let n = self.dataset.n_features();
        if let Some(&bad) = b.indices().iter().find(|&&j| j >= n) {
            return Err(Error::Partition(format!("feature index {bad} out of range for {n} features")));
        }
        let sorted = b.sorted();
        let key = sorted.indices().to_vec();
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let evaluation = Arc::new(self.compute(&sorted)?);
        let mut cache = self.cache.lock().expect("cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(evaluation)))
    }

    fn compute(&self, b: &FeaturePartition) -> Result<Evaluation> {
        let k = self.folds.k;
        let (beta1, beta2) = (self.config.beta1, self.config.beta2);
        let penalty = self.config.cardinality_penalty.eval(b.len());
        if penalty.is_infinite() {
            return Ok(Evaluation {
                record: EvaluationRecord {
                    partition: b.clone(),
                    m1: None,
                    m2: None,
                    penalty,
                    j_prime: vec![f64::INFINITY; k],
                    j: f64::INFINITY,
                    beta1,
                    beta2,
                    m2_targets: Vec::new(),
                    grid_point: self.spec.clone(),
                },
                oof: Vec::new(),
            });
        }

        let targets = self.config.targets(self.dataset, b);
        let tasks: Vec<(usize, usize)> = (0..targets.len()).flat_map(|t| (0..k).map(move |f| (t, f))).collect();
        let results: Vec<(f64, Array1<f64>)> = tasks
            .par_iter()
            .map(|&(t, fold)| self.fold_rmse(b.indices(), fold, targets[t]))
            .collect::<Result<_>>()?;

        let m = self.dataset.n_samples();
        let mut oof = Vec::with_capacity(targets.len());
        let mut per_target = Vec::with_capacity(targets.len());
        for (t, &target) in targets.iter().enumerate() {
            let mut predicted = Array1::zeros(m);
            let mut fold_rmse = Vec::with_capacity(k);
            for fold in 0..k {
                let (err, pred) = &results[t * k + fold];
                fold_rmse.push(*err);
                for (&i, &p) in self.folds.test(fold).iter().zip(pred) {
                    predicted[i] = p;
                }
            }
            oof.push(OutOfFold {
                target,
                truth: self.target_values(target).to_owned(),
                predicted,
            });
            per_target.push(fold_rmse);
        }

        let label_slot = targets.iter().position(|&t| t == Target::Label);
        let m1 = label_slot.map(|t| per_target[t].clone());
        let m2_targets: Vec<TargetDiagnostics> = targets
            .iter()
            .zip(&per_target)
            .filter(|(t, _)| matches!(t, Target::Feature(_)))
            .map(|(&target, fold_rmse)| TargetDiagnostics {
                target,
                mean_rmse: fold_rmse.iter().sum::<f64>() / k as f64,
                fold_rmse: fold_rmse.clone(),
            })
            .collect();
        let m2 = (beta2 > 0.0).then(|| {
            (0..k)
                .map(|fold| m2_targets.iter().map(|t| t.fold_rmse[fold]).sum::<f64>())
                .collect::<Vec<f64>>()
        });

        let j_prime: Vec<f64> = (0..k)
            .map(|fold| {
                let a = m1.as_ref().map_or(0.0, |v| v[fold]);
                let c = m2.as_ref().map_or(0.0, |v| v[fold]);
                beta1 * a + beta2 * c + penalty
            })
            .collect();
        let j = j_prime.iter().sum::<f64>() / k as f64;

        Ok(Evaluation {
            record: EvaluationRecord {
                partition: b.clone(),
                m1,
                m2,
                penalty,
                j_prime,
                j,
                beta1,
                beta2,
                m2_targets,
                grid_point: self.spec.clone(),
            },
            oof,
        })
    }
}

/// Cross-validated cost of `b` under one learner grid point.
pub fn j_cv(
    dataset: &Dataset,
    config: &SuitabilityConfig,
    spec: &RegressorSpec,
    b: &FeaturePartition,
) -> Result<EvaluationRecord> {
    Evaluator::new(dataset, config, spec.clone())?.j_cv(b)
}

/// Orders costs with infinity above every finite value (NaN never occurs).
pub fn cost_cmp(a: f64, b: f64) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}
