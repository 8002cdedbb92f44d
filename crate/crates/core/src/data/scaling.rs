use super::Dataset;
use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Per-feature min-max transform onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingSpec {
    /// Records column minima and maxima of `x`.
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let (min, max) = x
            .axis_iter(Axis(1))
            .map(|col| {
                col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .unzip();
        Self { min, max }
    }

    /// Applies the transform. Zero-range columns map to 0. Values outside the
    /// fitted range (unseen test rows) are not clipped.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.min.len() {
            return Err(Error::Shape {
                expected: self.min.len(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            let range = hi - lo;
            if range > 0.0 {
                col.mapv_inplace(|v| (v - lo) / range);
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

/// Min-max scales every feature of `d` using the full dataset.
pub fn scale_unit_interval(d: &Dataset) -> Result<(Dataset, ScalingSpec)> {
    if d.is_scaled() {
        return Err(Error::Config("dataset is already scaled".into()));
    }
    let spec = ScalingSpec::fit(d.features());
    let mut scaled = spec.transform(d.features())?;
    // Guard against 1 ulp overshoot from the affine map.
    scaled.mapv_inplace(|v| v.clamp(0.0, 1.0));
    Ok((d.with_features(scaled, true), spec))
}
