//! Optional TOML configuration file layered over a preset.
//!
//! ```toml
//! preset = "mids"
//! methods = ["sfs_linear", "filter_mi"]   # or "all"
//! w = 10
//! matrix_threshold = 3
//! aggregation = "mean"                    # or "pooled"
//!
//! [suitability]
//! beta1 = 1.0
//! beta2 = 1.0
//! max_features = 10                       # or "none" for no size cap
//! k = 4
//!
//! [grids.linear]
//! alpha1 = [0.0, 0.1]
//! alpha2 = [0.0, 1.0]
//! ```
//!
//! Grid sections replace the default grid of that learner family only.

use anyhow::{bail, Context, Result};
use obsel_core::experiment::{parse_methods, ExperimentPlan, Method};
use obsel_core::metrics::Aggregation;
use obsel_core::regressors::{HyperGrid, Kernel, RegressorKind};
use obsel_core::suitability::{CardinalityPenalty, Preset};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub methods: Option<MethodList>,
    pub w: Option<usize>,
    pub matrix_threshold: Option<usize>,
    pub aggregation: Option<Aggregation>,
    pub mi_bins: Option<usize>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub suitability: SuitabilitySection,
    #[serde(default)]
    pub grids: GridsSection,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MethodList {
    Text(String),
    List(Vec<Method>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SizeCap {
    Max(usize),
    Keyword(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuitabilitySection {
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub max_features: Option<SizeCap>,
    pub k: Option<usize>,
    pub fold_seed: Option<u64>,
    pub model_seed: Option<u64>,
    pub stratified: Option<bool>,
    pub include_treatment: Option<bool>,
    pub include_label_target: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSection {
    pub linear: Option<LinearGrid>,
    pub svr: Option<SvrGrid>,
    pub random_forest: Option<ForestGrid>,
    pub boosted_trees: Option<BoostGrid>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrGrid {
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub kernels: Vec<Kernel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostGrid {
    pub n_trees: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: usize,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Applies every setting present in the file to `plan`.
    pub fn apply(&self, plan: &mut ExperimentPlan) -> Result<()> {
        match &self.methods {
            Some(MethodList::Text(text)) => plan.methods = parse_methods(text)?,
            Some(MethodList::List(list)) => plan.methods = list.clone(),
            None => {}
        }
        if let Some(w) = self.w {
            plan.w = w;
        }
        if let Some(t) = self.matrix_threshold {
            plan.matrix_threshold = t;
        }
        if let Some(a) = self.aggregation {
            plan.aggregation = a;
            plan.sfs.aggregation = a;
        }
        if let Some(bins) = self.mi_bins {
            plan.mi_bins = bins;
        }

        let s = &self.suitability;
        let cfg = &mut plan.suitability;
        if let Some(v) = s.beta1 {
            cfg.beta1 = v;
        }
        if let Some(v) = s.beta2 {
            cfg.beta2 = v;
        }
        match &s.max_features {
            Some(SizeCap::Max(max)) => cfg.cardinality_penalty = CardinalityPenalty::Threshold { max: *max },
            Some(SizeCap::Keyword(k)) if k == "none" => cfg.cardinality_penalty = CardinalityPenalty::Zero,
            Some(SizeCap::Keyword(k)) => bail!("max_features must be an integer or \"none\", got \"{k}\""),
            None => {}
        }
        if let Some(v) = s.k {
            cfg.k = v;
        }
        if let Some(v) = s.fold_seed {
            cfg.fold_seed = v;
        }
        if let Some(v) = s.model_seed {
            cfg.model_seed = v;
        }
        if let Some(v) = s.stratified {
            cfg.stratified = v;
        }
        if let Some(v) = s.include_treatment {
            cfg.include_treatment = v;
        }
        if let Some(v) = s.include_label_target {
            cfg.include_label_target = v;
        }

        let g = &self.grids;
        let mut replace = |grid: HyperGrid| {
            cfg.grids.retain(|existing| existing.kind != grid.kind);
            cfg.grids.push(grid);
        };
        if let Some(l) = &g.linear {
            replace(HyperGrid::linear(&l.alpha1, &l.alpha2)?);
        }
        if let Some(s) = &g.svr {
            replace(HyperGrid::svr(&s.c, s.epsilon, &s.kernels)?);
        }
        if let Some(f) = &g.random_forest {
            replace(HyperGrid::forest(&f.n_trees, &f.max_depth)?);
        }
        if let Some(b) = &g.boosted_trees {
            replace(HyperGrid::boosted(&b.n_trees, &b.learning_rate, b.max_depth)?);
        }
        // Keep the family order stable regardless of which sections were given.
        cfg.grids.sort_by_key(|grid| family_order(grid.kind));
        Ok(())
    }
}

fn family_order(kind: RegressorKind) -> usize {
    match kind {
        RegressorKind::LinearElastic => 0,
        RegressorKind::Svr => 1,
        RegressorKind::RandomForest => 2,
        RegressorKind::BoostedTrees => 3,
        RegressorKind::Tree => 4,
        RegressorKind::ExternalPlugin => 5,
    }
}
