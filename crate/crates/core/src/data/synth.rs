//! Planted-signal datasets for verification.
//!
//! Features are uniform on `[0, 1]`. The label is the sum of the relevant
//! columns plus Gaussian noise, affinely rescaled onto `[0, 6]`, so with zero
//! noise it is an exact increasing affine function of the relevant columns.

use super::{Dataset, FeaturePartition, FeatureRole, MAX_DPS};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn synth_dataset(
    m: usize,
    n: usize,
    relevant: &FeaturePartition,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    let names = (0..n).map(|j| format!("f{j}")).collect();
    build(m, n, relevant, noise_sigma, seed, names, vec![FeatureRole::Marker; n], |_, _, rng| {
        rng.random::<f64>()
    })
}

/// Like [`synth_dataset`] but column 0 is a treatment group (0, 0.5, 1 after
/// scaling of the levels 0-2) and column 1 a sampling location (levels 1-3,
/// stored scaled). `n` counts every column, so there are `n - 2` markers.
pub fn synth_with_design_columns(
    m: usize,
    n: usize,
    relevant: &FeaturePartition,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 3 {
        return Err(Error::Config("need at least one marker besides group and location".into()));
    }
    if relevant.indices().iter().any(|&j| j < 2) {
        return Err(Error::Config("relevant columns must be markers (index >= 2)".into()));
    }
    let mut names = vec!["group".to_string(), "location".to_string()];
    names.extend((2..n).map(|j| format!("marker{}", j - 2)));
    let mut roles = vec![FeatureRole::Group, FeatureRole::Location];
    roles.extend(std::iter::repeat_n(FeatureRole::Marker, n - 2));
    build(m, n, relevant, noise_sigma, seed, names, roles, |i, j, rng| match j {
        0 => (i % 3) as f64 / 2.0,
        1 => ((i / 3) % 3) as f64 / 2.0,
        _ => rng.random::<f64>(),
    })
}

#[allow(clippy::too_many_arguments)]
fn build(
    m: usize,
    n: usize,
    relevant: &FeaturePartition,
    noise_sigma: f64,
    seed: u64,
    names: Vec<String>,
    roles: Vec<FeatureRole>,
    mut cell: impl FnMut(usize, usize, &mut ChaCha8Rng) -> f64,
) -> Result<Dataset> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::Config(format!("noise sigma {noise_sigma} must be >= 0")));
    }
    let relevant = FeaturePartition::new(relevant.indices().to_vec(), n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            x[[i, j]] = cell(i, j, &mut rng);
        }
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let raw: Vec<f64> = (0..m)
        .map(|i| {
            let signal: f64 = relevant.indices().iter().map(|&j| x[[i, j]]).sum();
            signal + noise.sample(&mut rng)
        })
        .collect();
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let labels: Array1<f64> = raw
        .iter()
        .map(|&v| {
            if hi > lo {
                (MAX_DPS * (v - lo) / (hi - lo)).clamp(0.0, MAX_DPS)
            } else {
                0.0
            }
        })
        .collect();
    Dataset::new(x, names, roles, labels, true)
}
