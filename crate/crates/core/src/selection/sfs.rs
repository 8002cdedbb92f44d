//! Sequential forward selection over the suitability cost.

use super::{CandidateScore, SelectionResult, StepTrace};
use crate::data::{Dataset, FeaturePartition};
use crate::error::{Error, Result};
use crate::metrics::{self, Aggregation};
use crate::regressors::{HyperGrid, RegressorSpec};
use crate::suitability::{cost_cmp, Evaluator, SuitabilityConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfsOptions {
    /// A candidate is accepted only if it lowers J by more than
    /// `relative_floor * |J|`; 0 means any strict decrease.
    pub relative_floor: f64,
    pub aggregation: Aggregation,
}

impl Default for SfsOptions {
    fn default() -> Self {
        Self { relative_floor: 0.0, aggregation: Aggregation::Mean }
    }
}

/// Greedy forward selection with one learner grid point.
pub fn sfs(dataset: &Dataset, config: &SuitabilityConfig, grid_point: &RegressorSpec) -> Result<SelectionResult> {
    sfs_with_options(dataset, config, grid_point, &SfsOptions::default())
}

pub fn sfs_with_options(
    dataset: &Dataset,
    config: &SuitabilityConfig,
    grid_point: &RegressorSpec,
    options: &SfsOptions,
) -> Result<SelectionResult> {
    let evaluator = Evaluator::new(dataset, config, grid_point.clone())?;
    sfs_with_evaluator(&evaluator, options)
}

/// Runs the search on an existing evaluator (sharing its cache).
pub fn sfs_with_evaluator(evaluator: &Evaluator<'_>, options: &SfsOptions) -> Result<SelectionResult> {
    if !(options.relative_floor >= 0.0) {
        return Err(Error::Config("relative improvement floor must be >= 0".into()));
    }
    let start = Instant::now();
    let dataset = evaluator.dataset();
    let config = evaluator.config();
    let n = dataset.n_features();
    let admissible = config.admissible(dataset);
    if admissible.is_empty() {
        return Err(Error::Config("no admissible features to select from".into()));
    }

    let mut selected: Vec<usize> = Vec::new();
    let mut incumbent = evaluator.j_cv(&FeaturePartition::empty())?.j;
    let initial_j = incumbent;
    let mut steps = Vec::new();

    loop {
        if config.cardinality_penalty.eval(selected.len() + 1).is_infinite() {
            break;
        }
        let candidates: Vec<usize> = admissible.iter().copied().filter(|j| !selected.contains(j)).collect();
        if candidates.is_empty() {
            break;
        }
        let scores: Vec<CandidateScore> = candidates
            .par_iter()
            .map(|&feature| {
                let mut b = selected.clone();
                b.push(feature);
                let j = evaluator.j_cv(&FeaturePartition::new(b, n)?)?.j;
                Ok(CandidateScore { feature, j })
            })
            .collect::<Result<_>>()?;
        let best = scores
            .iter()
            .min_by(|a, b| cost_cmp(a.j, b.j).then(a.feature.cmp(&b.feature)))
            .copied()
            .expect("non-empty candidate set");
        let improves = best.j < incumbent && incumbent - best.j > options.relative_floor * incumbent.abs();
        let accepted = improves.then_some(best.feature);
        if let Some(f) = accepted {
            selected.push(f);
            incumbent = best.j;
        }
        steps.push(StepTrace { candidates: scores, accepted, j: incumbent });
        if accepted.is_none() {
            break;
        }
    }

    let partition = FeaturePartition::new(selected.clone(), n)?;
    let record = evaluator.j_cv(&partition)?;
    let oof = evaluator.out_of_fold(&partition)?;
    let metrics = if oof.is_empty() { None } else { Some(metrics::report(&oof, options.aggregation)?) };
    Ok(SelectionResult {
        method: format!("sfs_{}", evaluator.spec().kind()),
        selected,
        initial_j,
        steps,
        record,
        grid_point: evaluator.spec().clone(),
        metrics,
        wall_time: start.elapsed(),
    })
}

/// Runs SFS once per grid point and keeps the run with the lowest final J
/// (the earliest grid point wins ties).
pub fn sfs_sweep(
    dataset: &Dataset,
    config: &SuitabilityConfig,
    grid: &HyperGrid,
    options: &SfsOptions,
) -> Result<SelectionResult> {
    let start = Instant::now();
    let runs: Vec<SelectionResult> = grid
        .points
        .iter()
        .map(|point| sfs_with_options(dataset, config, point, options))
        .collect::<Result<_>>()?;
    let mut best = runs
        .into_iter()
        .reduce(|best, run| if cost_cmp(run.record.j, best.record.j).is_lt() { run } else { best })
        .ok_or_else(|| Error::Config(format!("empty grid for {}", grid.kind)))?;
    best.wall_time = start.elapsed();
    Ok(best)
}
