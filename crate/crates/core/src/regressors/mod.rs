//! The learner family used to build predictive models from a feature subset:
//! elastic-net linear regression, epsilon-SVR, CART trees, random forests and
//! gradient-boosted trees, plus a slot for externally supplied learners.
//!
//! Every learner is described by a [`RegressorSpec`] and fitted through
//! [`fit`], producing a [`TrainedModel`] that only accepts inputs of the
//! width it was trained on.

mod boost;
mod forest;
mod linear;
mod svr;
mod tree;

pub use boost::BoostedModel;
pub use forest::{max_features as forest_max_features, ForestModel};
pub use linear::{elastic_net_objective, LinearModel};
pub use svr::{Kernel, SvrModel, SMO_TOLERANCE};
pub use tree::RegressionTree;

use crate::error::{Error, Result};
use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

/// Tree depth used by boosting stages unless overridden.
pub const DEFAULT_BOOST_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    LinearElastic,
    Svr,
    Tree,
    RandomForest,
    BoostedTrees,
    ExternalPlugin,
}

impl RegressorKind {
    pub fn name(self) -> &'static str {
        match self {
            RegressorKind::LinearElastic => "linear_elastic",
            RegressorKind::Svr => "svr",
            RegressorKind::Tree => "tree",
            RegressorKind::RandomForest => "random_forest",
            RegressorKind::BoostedTrees => "boosted_trees",
            RegressorKind::ExternalPlugin => "external_plugin",
        }
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_elastic" | "linear" => Ok(RegressorKind::LinearElastic),
            "svr" => Ok(RegressorKind::Svr),
            "tree" => Ok(RegressorKind::Tree),
            "random_forest" | "rf" => Ok(RegressorKind::RandomForest),
            "boosted_trees" | "boost" => Ok(RegressorKind::BoostedTrees),
            "external_plugin" => Ok(RegressorKind::ExternalPlugin),
            other => Err(Error::Config(format!("unknown regressor kind `{other}`"))),
        }
    }
}

/// A learner kind together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorSpec {
    LinearElastic {
        alpha1: f64,
        alpha2: f64,
    },
    Svr {
        kernel: Kernel,
        c: f64,
        epsilon: f64,
    },
    Tree {
        max_depth: Option<usize>,
        max_leaves: Option<usize>,
    },
    RandomForest {
        n_trees: usize,
        max_depth: Option<usize>,
        seed: u64,
    },
    BoostedTrees {
        n_trees: usize,
        learning_rate: f64,
        max_depth: usize,
    },
    /// A learner registered at runtime with [`register_plugin`].
    ExternalPlugin {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl RegressorSpec {
    pub fn kind(&self) -> RegressorKind {
        match self {
            RegressorSpec::LinearElastic { .. } => RegressorKind::LinearElastic,
            RegressorSpec::Svr { .. } => RegressorKind::Svr,
            RegressorSpec::Tree { .. } => RegressorKind::Tree,
            RegressorSpec::RandomForest { .. } => RegressorKind::RandomForest,
            RegressorSpec::BoostedTrees { .. } => RegressorKind::BoostedTrees,
            RegressorSpec::ExternalPlugin { .. } => RegressorKind::ExternalPlugin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match *self {
            RegressorSpec::LinearElastic { alpha1, alpha2 } if !(alpha1 >= 0.0 && alpha2 >= 0.0) => {
                bad(format!("alpha1 = {alpha1}, alpha2 = {alpha2} must be >= 0"))
            }
            RegressorSpec::Svr { c, epsilon, .. } if !(c > 0.0 && epsilon >= 0.0) => {
                bad(format!("SVR needs C > 0 and epsilon >= 0 (C = {c}, epsilon = {epsilon})"))
            }
            RegressorSpec::Tree { max_depth, max_leaves }
                if max_depth == Some(0) || max_leaves.is_some_and(|l| l < 2) =>
            {
                bad("tree needs max_depth >= 1 and max_leaves >= 2".into())
            }
            RegressorSpec::RandomForest { n_trees, max_depth, .. } if n_trees == 0 || max_depth == Some(0) => {
                bad("forest needs n_trees >= 1 and max_depth >= 1".into())
            }
            RegressorSpec::BoostedTrees { n_trees, learning_rate, max_depth }
                if n_trees == 0 || !(learning_rate > 0.0) || max_depth == 0 =>
            {
                bad("boosting needs n_trees >= 1, learning_rate > 0 and max_depth >= 1".into())
            }
            _ => Ok(()),
        }
    }

    /// Copy with the random seed replaced (only forests consume one).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            RegressorSpec::RandomForest { n_trees, max_depth, .. } => RegressorSpec::RandomForest {
                n_trees: *n_trees,
                max_depth: *max_depth,
                seed,
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for RegressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depth = |d: &Option<usize>| d.map_or("none".to_string(), |d| d.to_string());
        match self {
            RegressorSpec::LinearElastic { alpha1, alpha2 } => {
                write!(f, "linear_elastic(alpha1={alpha1}, alpha2={alpha2})")
            }
            RegressorSpec::Svr { kernel, c, epsilon } => write!(f, "svr(kernel={kernel}, C={c}, epsilon={epsilon})"),
            RegressorSpec::Tree { max_depth, max_leaves } => {
                write!(f, "tree(max_depth={}, max_leaves={})", depth(max_depth), depth(max_leaves))
            }
            RegressorSpec::RandomForest { n_trees, max_depth, .. } => {
                write!(f, "random_forest(n_trees={n_trees}, max_depth={})", depth(max_depth))
            }
            RegressorSpec::BoostedTrees { n_trees, learning_rate, max_depth } => write!(
                f,
                "boosted_trees(n_trees={n_trees}, learning_rate={learning_rate}, max_depth={max_depth})"
            ),
            RegressorSpec::ExternalPlugin { name, .. } => write!(f, "external_plugin({name})"),
        }
    }
}

/// A learner supplied from outside this crate.
pub trait ExternalLearner: Send + Sync {
    fn fit(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        params: &BTreeMap<String, f64>,
    ) -> Result<Box<dyn ExternalPredictor>>;
}

pub trait ExternalPredictor: Send + Sync + fmt::Debug {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64>;
}

type Registry = RwLock<HashMap<String, Arc<dyn ExternalLearner>>>;

fn registry() -> &'static Registry {
    static PLUGINS: OnceLock<Registry> = OnceLock::new();
    PLUGINS.get_or_init(Default::default)
}

/// Makes `learner` available as `RegressorSpec::ExternalPlugin { name, .. }`.
pub fn register_plugin(name: impl Into<String>, learner: Arc<dyn ExternalLearner>) {
    registry()
        .write()
        .expect("plugin registry poisoned")
        .insert(name.into(), learner);
}

#[derive(Debug, Clone)]
pub enum Fitted {
    Linear(LinearModel),
    Svr(SvrModel),
    Tree(RegressionTree),
    Forest(ForestModel),
    Boosted(BoostedModel),
    External(Arc<dyn ExternalPredictor>),
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    spec: RegressorSpec,
    width: usize,
    fitted: Fitted,
}

impl TrainedModel {
    pub fn spec(&self) -> &RegressorSpec {
        &self.spec
    }

    /// Number of input columns the model was trained on.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn fitted(&self) -> &Fitted {
        &self.fitted
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.width {
            return Err(Error::Shape {
                expected: self.width,
                got: x.ncols(),
            });
        }
        Ok(match &self.fitted {
            Fitted::Linear(m) => m.predict(x),
            Fitted::Svr(m) => m.predict(x),
            Fitted::Tree(t) => x.rows().into_iter().map(|r| t.predict_row(r)).collect(),
            Fitted::Forest(m) => m.predict(x),
            Fitted::Boosted(m) => m.predict(x),
            Fitted::External(p) => p.predict(x),
        })
    }
}

/// Fits the learner described by `spec` on `(x, y)`.
pub fn fit(spec: &RegressorSpec, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<TrainedModel> {
    spec.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::Fit(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if x.nrows() == 0 {
        return Err(Error::Fit("empty training set".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite training data".into()));
    }
    let fitted = match spec {
        RegressorSpec::LinearElastic { alpha1, alpha2 } => Fitted::Linear(linear::fit(x, y, *alpha1, *alpha2)?),
        RegressorSpec::Svr { kernel, c, epsilon } => Fitted::Svr(svr::fit(x, y, *kernel, *c, *epsilon)?),
        RegressorSpec::Tree { max_depth, max_leaves } => {
            let params = tree::TreeParams {
                max_depth: *max_depth,
                max_leaves: *max_leaves,
                max_features: None,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            Fitted::Tree(RegressionTree::grow(x, &y.to_vec(), (0..x.nrows()).collect(), params, &mut rng))
        }
        RegressorSpec::RandomForest { n_trees, max_depth, seed } => {
            Fitted::Forest(forest::fit(x, y, *n_trees, *max_depth, *seed)?)
        }
        RegressorSpec::BoostedTrees { n_trees, learning_rate, max_depth } => {
            Fitted::Boosted(boost::fit(x, y, *n_trees, *learning_rate, *max_depth)?)
        }
        RegressorSpec::ExternalPlugin { name, params } => {
            let learner = registry()
                .read()
                .expect("plugin registry poisoned")
                .get(name)
                .cloned()
                .ok_or_else(|| Error::Config(format!("no external learner registered as `{name}`")))?;
            Fitted::External(Arc::from(learner.fit(x, y, params)?))
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        width: x.ncols(),
        fitted,
    })
}

pub fn fit_linear_elastic(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, alpha1: f64, alpha2: f64) -> Result<TrainedModel> {
    fit(&RegressorSpec::LinearElastic { alpha1, alpha2 }, x, y)
}

pub fn fit_svr(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, kernel: Kernel, c: f64, epsilon: f64) -> Result<TrainedModel> {
    fit(&RegressorSpec::Svr { kernel, c, epsilon }, x, y)
}

pub fn fit_tree(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    max_depth: Option<usize>,
    max_leaves: Option<usize>,
) -> Result<TrainedModel> {
    fit(&RegressorSpec::Tree { max_depth, max_leaves }, x, y)
}

pub fn fit_random_forest(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    n_trees: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> Result<TrainedModel> {
    fit(&RegressorSpec::RandomForest { n_trees, max_depth, seed }, x, y)
}

pub fn fit_boosted_trees(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    n_trees: usize,
    learning_rate: f64,
    max_depth: usize,
) -> Result<TrainedModel> {
    fit(&RegressorSpec::BoostedTrees { n_trees, learning_rate, max_depth }, x, y)
}

/// Hyperparameter points swept for one learner kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub kind: RegressorKind,
    pub points: Vec<RegressorSpec>,
}

impl HyperGrid {
    pub fn new(kind: RegressorKind, points: Vec<RegressorSpec>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config(format!("empty hyperparameter grid for {kind}")));
        }
        for p in &points {
            if p.kind() != kind {
                return Err(Error::Config(format!("grid for {kind} contains a {} point", p.kind())));
            }
            p.validate()?;
        }
        Ok(Self { kind, points })
    }

    pub fn linear(alpha1: &[f64], alpha2: &[f64]) -> Result<Self> {
        let points = alpha1
            .iter()
            .flat_map(|&a1| alpha2.iter().map(move |&a2| RegressorSpec::LinearElastic { alpha1: a1, alpha2: a2 }))
            .collect();
        Self::new(RegressorKind::LinearElastic, points)
    }

    pub fn svr(c: &[f64], epsilon: f64, kernels: &[Kernel]) -> Result<Self> {
        let points = kernels
            .iter()
            .flat_map(|&kernel| c.iter().map(move |&c| RegressorSpec::Svr { kernel, c, epsilon }))
            .collect();
        Self::new(RegressorKind::Svr, points)
    }

    pub fn forest(n_trees: &[usize], max_depth: &[usize]) -> Result<Self> {
        let points = n_trees
            .iter()
            .flat_map(|&n| {
                max_depth.iter().map(move |&d| RegressorSpec::RandomForest {
                    n_trees: n,
                    max_depth: Some(d),
                    seed: 0,
                })
            })
            .collect();
        Self::new(RegressorKind::RandomForest, points)
    }

    pub fn boosted(n_trees: &[usize], learning_rate: &[f64], max_depth: usize) -> Result<Self> {
        let points = n_trees
            .iter()
            .flat_map(|&n| {
                learning_rate.iter().map(move |&lr| RegressorSpec::BoostedTrees {
                    n_trees: n,
                    learning_rate: lr,
                    max_depth,
                })
            })
            .collect();
        Self::new(RegressorKind::BoostedTrees, points)
    }
}

/// The standard sweep for each learner kind.
pub fn default_grids(kind: RegressorKind) -> Result<HyperGrid> {
    match kind {
        RegressorKind::LinearElastic => HyperGrid::linear(&[0.0, 0.1, 1.0, 5.0], &[0.0, 0.1, 1.0, 5.0]),
        RegressorKind::Svr => HyperGrid::svr(&[1.0, 5.0, 10.0], 0.1, &Kernel::ALL),
        RegressorKind::RandomForest => HyperGrid::forest(&[50, 100, 150], &[5, 10, 20]),
        RegressorKind::BoostedTrees => {
            HyperGrid::boosted(&[50, 100, 150, 250], &[0.01, 0.1, 0.5], DEFAULT_BOOST_DEPTH)
        }
        RegressorKind::Tree | RegressorKind::ExternalPlugin => {
            Err(Error::Config(format!("no default hyperparameter grid for {kind}")))
        }
    }
}
