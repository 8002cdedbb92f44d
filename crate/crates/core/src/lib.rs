//! Feature selection toolkit built around a cross-validated suitability cost.
//!
//! A feature subset `b` is scored by
//!
//! ```text
//! J'(b, fold) = beta1 * M1 + beta2 * M2 + L(|b|)
//! J(b)        = mean over folds of J'
//! ```
//!
//! where `M1` is the held-out RMSE of predicting the label from the selected
//! columns, `M2` is the summed held-out RMSE of reconstructing every discarded
//! column from the selected ones, and `L` is a cardinality penalty. Sequential
//! forward selection searches for the subset minimizing `J`; filter (mutual
//! information, ANOVA, PCA) and embedded (random-forest MDI) rankings are
//! provided as baselines and scored with the same cost.
//!
//! Modules:
//!
//! * [`data`]: datasets, CSV ingestion, scaling, folds, projections, synthetic data.
//! * [`regressors`]: elastic-net, epsilon-SVR, CART, random forest and boosted trees.
//! * [`suitability`]: `M1`, `M2`, `J'` and the k-fold `J`.
//! * [`selection`]: SFS plus the filter and embedded baselines.
//! * [`metrics`]: CC, rRMSE, MAE and rMAE.
//! * [`experiment`]: run orchestration, artifact bundles and rendering.

pub mod data;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod regressors;
pub mod selection;
pub mod suitability;

mod seeding;
mod serde_cost;

pub use error::{Error, Result};
