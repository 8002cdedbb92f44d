//! Batch experiments: run a list of selection methods under one suitability
//! configuration, collect a ranking table, a selection matrix and per-method
//! records, and persist them as a directory bundle.

mod render;

pub use render::{render_selection_matrix, render_table, TableFormat};

use crate::data::{load_csv, scale_unit_interval, Dataset, FeaturePartition, Schema};
use crate::error::{Error, Result};
use crate::metrics::{Aggregation, MetricsReport};
use crate::regressors::{HyperGrid, RegressorKind, RegressorSpec};
use crate::selection::{
    self, default_mdi_forest, evaluate_selection, ranking_targets, top_w_among, ImportanceVector, SelectionResult,
    SfsOptions, StepTrace, DEFAULT_W_DISEASE, DEFAULT_W_STATE, MI_BINS,
};
use crate::suitability::{cost_cmp, preset_config, EvaluationRecord, Preset, SuitabilityConfig};
use crate::seeding;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

/// A selection method that can appear as a row of the ranking table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    SfsLinear,
    SfsSvr,
    SfsRf,
    SfsBoost,
    /// SFS with a learner registered through the plugin slot.
    SfsPlugin(String),
    FilterMi,
    FilterAnova,
    FilterPca,
    EmbeddedMdi,
}

impl Method {
    /// The eight built-in methods in table order: wrappers, then baselines.
    pub const ALL: [Method; 8] = [
        Method::SfsLinear,
        Method::SfsSvr,
        Method::SfsRf,
        Method::SfsBoost,
        Method::FilterMi,
        Method::FilterAnova,
        Method::FilterPca,
        Method::EmbeddedMdi,
    ];

    pub fn is_sfs(&self) -> bool {
        matches!(
            self,
            Method::SfsLinear | Method::SfsSvr | Method::SfsRf | Method::SfsBoost | Method::SfsPlugin(_)
        )
    }

    /// The learner family searched by an SFS method.
    pub fn learner(&self) -> Option<RegressorKind> {
        match self {
            Method::SfsLinear => Some(RegressorKind::LinearElastic),
            Method::SfsSvr => Some(RegressorKind::Svr),
            Method::SfsRf => Some(RegressorKind::RandomForest),
            Method::SfsBoost => Some(RegressorKind::BoostedTrees),
            Method::SfsPlugin(_) => Some(RegressorKind::ExternalPlugin),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SfsLinear => f.write_str("sfs_linear"),
            Method::SfsSvr => f.write_str("sfs_svr"),
            Method::SfsRf => f.write_str("sfs_rf"),
            Method::SfsBoost => f.write_str("sfs_boost"),
            Method::SfsPlugin(name) => write!(f, "sfs_plugin:{name}"),
            Method::FilterMi => f.write_str("filter_mi"),
            Method::FilterAnova => f.write_str("filter_anova"),
            Method::FilterPca => f.write_str("filter_pca"),
            Method::EmbeddedMdi => f.write_str("embedded_mdi"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sfs_linear" => Method::SfsLinear,
            "sfs_svr" => Method::SfsSvr,
            "sfs_rf" => Method::SfsRf,
            "sfs_boost" => Method::SfsBoost,
            "filter_mi" => Method::FilterMi,
            "filter_anova" => Method::FilterAnova,
            "filter_pca" => Method::FilterPca,
            "embedded_mdi" => Method::EmbeddedMdi,
            other => match other.strip_prefix("sfs_plugin:") {
                Some(name) if !name.is_empty() => Method::SfsPlugin(name.to_string()),
                _ => return Err(Error::Config(format!("unknown method `{other}`"))),
            },
        })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// Parses a comma-separated method list; `all` expands to the built-in set.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "all" {
            out.extend(Method::ALL.iter().cloned());
        } else {
            out.push(item.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("method list is empty".into()));
    }
    Ok(out)
}

/// Everything that determines the numbers in a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub preset: Option<Preset>,
    pub suitability: SuitabilityConfig,
    pub methods: Vec<Method>,
    /// Number of features kept by filter and embedded methods.
    pub w: usize,
    pub aggregation: Aggregation,
    pub sfs: SfsOptions,
    pub mi_bins: usize,
    pub mdi_forest: RegressorSpec,
    /// Minimum number of SFS methods selecting a feature for it to be flagged
    /// in the selection matrix.
    pub matrix_threshold: usize,
}

impl ExperimentPlan {
    /// The preset's configuration with every built-in method.
    pub fn from_preset(preset: Preset) -> Self {
        let suitability = preset_config(preset);
        let w = match preset {
            Preset::Mds => DEFAULT_W_DISEASE,
            Preset::Mis | Preset::Mids => DEFAULT_W_STATE,
        };
        Self {
            preset: Some(preset),
            mdi_forest: default_mdi_forest(suitability.model_seed),
            suitability,
            methods: Method::ALL.to_vec(),
            w,
            aggregation: Aggregation::Mean,
            sfs: SfsOptions::default(),
            mi_bins: MI_BINS,
            matrix_threshold: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.suitability.validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("no methods to run".into()));
        }
        if self.w == 0 {
            return Err(Error::Config("w must be at least 1".into()));
        }
        if self.mi_bins == 0 {
            return Err(Error::Config("mi_bins must be at least 1".into()));
        }
        if !matches!(self.mdi_forest, RegressorSpec::RandomForest { .. }) {
            return Err(Error::Config("mdi_forest must be a random_forest spec".into()));
        }
        self.mdi_forest.validate()
    }

    /// Hex SHA-256 of the canonical JSON form of the plan.
    pub fn hash(&self) -> Result<String> {
        Ok(hex(&Sha256::digest(serde_json::to_vec(self)?)))
    }
}

/// A full run request: where the data lives, what to do, where to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub plan: ExperimentPlan,
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub dataset_hash: String,
    pub fold_seed: u64,
    pub model_seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Succeeded(MethodResult),
    Failed { reason: String },
}

/// What one method produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    /// Selected features: acceptance order for SFS, rank order otherwise.
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    #[serde(with = "crate::serde_cost")]
    pub j: f64,
    pub metrics: Option<MetricsReport>,
    /// The record that produced `j`.
    pub record: EvaluationRecord,
    /// Per-family records for filter and embedded methods.
    pub family_records: Vec<EvaluationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: Method,
    #[serde(flatten)]
    pub outcome: Outcome,
}

impl MethodRun {
    pub fn result(&self) -> Option<&MethodResult> {
        match &self.outcome {
            Outcome::Succeeded(r) => Some(r),
            Outcome::Failed { .. } => None,
        }
    }
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub method: Method,
    #[serde(with = "crate::serde_cost::option")]
    pub j: Option<f64>,
    pub mae: Option<f64>,
    pub rrmse: Option<f64>,
    pub rmae: Option<f64>,
    pub cc: Option<f64>,
    pub n_selected: Option<usize>,
    pub failure: Option<String>,
}

/// Search traces and rankings kept alongside the results, one per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTrace {
    pub method: Method,
    pub grid_point: Option<RegressorSpec>,
    #[serde(with = "crate::serde_cost::option")]
    pub initial_j: Option<f64>,
    pub steps: Vec<StepTrace>,
    pub importance: Option<ImportanceVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifactBundle {
    pub provenance: Provenance,
    pub preset: Option<Preset>,
    pub feature_names: Vec<String>,
    pub matrix_threshold: usize,
    /// Sorted ascending by J (ties by method name, failures last).
    pub ranking: Vec<RankingRow>,
    /// Methods in the order they were requested.
    pub runs: Vec<MethodRun>,
    #[serde(skip)]
    pub traces: Vec<MethodTrace>,
    #[serde(skip)]
    pub plan: Option<ExperimentPlan>,
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl RunArtifactBundle {
    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| matches!(r.outcome, Outcome::Failed { .. }))
    }

    pub fn run_for(&self, method: &Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| &r.method == method)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex SHA-256 of a dataset's names, roles and values.
pub fn dataset_hash(d: &Dataset) -> String {
    let mut h = Sha256::new();
    for (name, role) in d.feature_names().iter().zip(d.feature_roles()) {
        h.update(name.as_bytes());
        h.update([0]);
        h.update(role.to_string().as_bytes());
        h.update([0]);
    }
    for v in d.features().iter().chain(d.labels().iter()) {
        h.update(v.to_bits().to_le_bytes());
    }
    hex(&h.finalize())
}

/// Loads the configured dataset, scaling it to [0, 1] if needed.
pub fn load_dataset(dataset: &Path, schema: &Path) -> Result<Dataset> {
    let schema = Schema::from_file(schema)?;
    let raw = load_csv(dataset, &schema)?;
    Ok(scale_unit_interval(&raw)?.0)
}

/// Loads the data, runs every method and, if an output directory is
/// configured, writes the bundle there.
pub fn run(config: &RunConfig) -> Result<RunArtifactBundle> {
    let dataset = load_dataset(&config.dataset, &config.schema)?;
    let bundle = run_dataset(&dataset, &config.plan, config.jobs)?;
    if let Some(out) = &config.out {
        write_bundle(&bundle, out)?;
    }
    Ok(bundle)
}

/// Runs the plan on an in-memory dataset (which must already be scaled).
pub fn run_dataset(dataset: &Dataset, plan: &ExperimentPlan, jobs: Option<usize>) -> Result<RunArtifactBundle> {
    plan.validate()?;
    if !dataset.is_scaled() {
        return Err(Error::Validation("dataset must be scaled to [0, 1] before a run".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let outputs: Vec<(MethodRun, MethodTrace, Duration)> = pool.install(|| {
        plan.methods
            .par_iter()
            .map(|method| {
                let start = Instant::now();
                let (run, trace) = match run_method(dataset, plan, method) {
                    Ok((result, trace)) => (MethodRun { method: method.clone(), outcome: Outcome::Succeeded(result) }, trace),
                    Err(e) => (
                        MethodRun { method: method.clone(), outcome: Outcome::Failed { reason: e.to_string() } },
                        MethodTrace { method: method.clone(), grid_point: None, initial_j: None, steps: Vec::new(), importance: None },
                    ),
                };
                (run, trace, start.elapsed())
            })
            .collect()
    });

    let mut runs = Vec::with_capacity(outputs.len());
    let mut traces = Vec::with_capacity(outputs.len());
    let mut timings = BTreeMap::new();
    for (run, trace, elapsed) in outputs {
        timings.insert(run.method.to_string(), elapsed.as_secs_f64());
        runs.push(run);
        traces.push(trace);
    }
    let ranking = rank(&runs);
    Ok(RunArtifactBundle {
        provenance: Provenance {
            config_hash: plan.hash()?,
            dataset_hash: dataset_hash(dataset),
            fold_seed: plan.suitability.fold_seed,
            model_seed: plan.suitability.model_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        preset: plan.preset,
        feature_names: dataset.feature_names().to_vec(),
        matrix_threshold: plan.matrix_threshold,
        ranking,
        runs,
        traces,
        plan: Some(plan.clone()),
        timings,
    })
}

fn names(dataset: &Dataset, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&j| dataset.feature_names()[j].clone()).collect()
}

/// Feature scores of a filter or embedded method under the plan's
/// configuration. SFS methods produce no ranking and are rejected.
pub fn importance(dataset: &Dataset, plan: &ExperimentPlan, method: &Method) -> Result<ImportanceVector> {
    let config = &plan.suitability;
    let targets = ranking_targets(dataset, config);
    match method {
        Method::FilterMi => selection::filter_rank_mi(dataset, &targets, plan.mi_bins),
        Method::FilterAnova => selection::filter_rank_anova(dataset, &targets),
        Method::FilterPca => selection::filter_rank_pca(dataset),
        Method::EmbeddedMdi => {
            let seed = seeding::derive(config.model_seed, &[u64::from_le_bytes(*b"mdi\0\0\0\0\0")]);
            selection::embedded_rank_mdi(dataset, &targets, &plan.mdi_forest.with_seed(seed))
        }
        other => Err(Error::Config(format!("{other} is a wrapper method and has no feature ranking"))),
    }
}

fn run_method(dataset: &Dataset, plan: &ExperimentPlan, method: &Method) -> Result<(MethodResult, MethodTrace)> {
    let config = &plan.suitability;
    if let Some(kind) = method.learner() {
        let grid = match method {
            Method::SfsPlugin(name) => plugin_grid(config, name)?,
            _ => config.grid_for(kind)?,
        };
        let best: SelectionResult = selection::sfs_sweep(dataset, config, &grid, &plan.sfs)?;
        let trace = MethodTrace {
            method: method.clone(),
            grid_point: Some(best.grid_point.clone()),
            initial_j: Some(best.initial_j),
            steps: best.steps.clone(),
            importance: None,
        };
        let result = MethodResult {
            selected_names: names(dataset, &best.selected),
            selected: best.selected,
            j: best.record.j,
            metrics: best.metrics,
            record: best.record,
            family_records: Vec::new(),
        };
        return Ok((result, trace));
    }

    let importance = importance(dataset, plan, method)?;
    let admissible = config.admissible(dataset);
    let b: FeaturePartition = top_w_among(&importance, plan.w, &admissible)?;
    let families: Vec<HyperGrid> = config.grids.clone();
    let evaluation = evaluate_selection(dataset, &b, config, &families, plan.aggregation)?;
    let best = evaluation.best_family().clone();
    let in_rank_order: Vec<usize> = importance.ranking().into_iter().filter(|j| b.contains(*j)).collect();
    let result = MethodResult {
        selected_names: names(dataset, &in_rank_order),
        selected: in_rank_order,
        j: evaluation.min_j,
        metrics: best.metrics,
        record: best.record,
        family_records: evaluation.families.into_iter().map(|f| f.record).collect(),
    };
    let trace = MethodTrace {
        method: method.clone(),
        grid_point: Some(result.record.grid_point.clone()),
        initial_j: None,
        steps: Vec::new(),
        importance: Some(importance),
    };
    Ok((result, trace))
}

fn plugin_grid(config: &SuitabilityConfig, name: &str) -> Result<HyperGrid> {
    let points: Vec<RegressorSpec> = config
        .grids
        .iter()
        .filter(|g| g.kind == RegressorKind::ExternalPlugin)
        .flat_map(|g| g.points.iter())
        .filter(|p| matches!(p, RegressorSpec::ExternalPlugin { name: n, .. } if n == name))
        .cloned()
        .collect();
    let points = if points.is_empty() {
        vec![RegressorSpec::ExternalPlugin { name: name.to_string(), params: BTreeMap::new() }]
    } else {
        points
    };
    HyperGrid::new(RegressorKind::ExternalPlugin, points)
}

/// Orders rows by J, then method name; failed methods go last.
pub fn rank(runs: &[MethodRun]) -> Vec<RankingRow> {
    let mut rows: Vec<RankingRow> = runs
        .iter()
        .map(|run| match &run.outcome {
            Outcome::Succeeded(r) => {
                let m = r.metrics.as_ref();
                RankingRow {
                    method: run.method.clone(),
                    j: Some(r.j),
                    mae: m.map(|m| m.mae),
                    rrmse: m.and_then(|m| m.rrmse),
                    rmae: m.and_then(|m| m.rmae),
                    cc: m.and_then(|m| m.cc),
                    n_selected: Some(r.selected.len()),
                    failure: None,
                }
            }
            Outcome::Failed { reason } => RankingRow {
                method: run.method.clone(),
                j: None,
                mae: None,
                rrmse: None,
                rmae: None,
                cc: None,
                n_selected: None,
                failure: Some(reason.clone()),
            },
        })
        .collect();
    rows.sort_by(|a, b| match (a.j, b.j) {
        (Some(x), Some(y)) => cost_cmp(x, y).then_with(|| a.method.to_string().cmp(&b.method.to_string())),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.method.to_string().cmp(&b.method.to_string()),
    });
    rows
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// File-system safe name for a method's trace file.
fn trace_file_name(method: &Method) -> String {
    method.to_string().replace(|c: char| !c.is_ascii_alphanumeric() && c != '_' && c != '-', "_") + ".json"
}

/// Writes the bundle directory: `config.json`, `results.json`,
/// `timings.json`, `table.csv`, `table.md`, `selection_matrix.csv` and
/// `traces/<method>.json`.
pub fn write_bundle(bundle: &RunArtifactBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("traces"))?;
    if let Some(plan) = &bundle.plan {
        write_json(&dir.join("config.json"), plan)?;
    }
    write_json(&dir.join("results.json"), bundle)?;
    write_json(&dir.join("timings.json"), &bundle.timings)?;
    fs::write(dir.join("table.csv"), render_table(bundle, TableFormat::Csv)?)?;
    fs::write(dir.join("table.md"), render_table(bundle, TableFormat::Markdown)?)?;
    fs::write(dir.join("selection_matrix.csv"), render_selection_matrix(bundle)?)?;
    for trace in &bundle.traces {
        write_json(&dir.join("traces").join(trace_file_name(&trace.method)), trace)?;
    }
    Ok(())
}

/// Reads `results.json` back from a bundle directory or file path.
pub fn read_bundle(path: &Path) -> Result<RunArtifactBundle> {
    let file = if path.is_dir() { path.join("results.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file)?;
    Ok(serde_json::from_str(&text)?)
}
