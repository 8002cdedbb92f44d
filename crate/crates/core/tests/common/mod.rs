//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use obsel_core::regressors::{ExternalLearner, ExternalPredictor, Kernel};
use obsel_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |_| rng.random::<f64>())
}

/// Ridge regression with unpenalised intercept via the normal equations on
/// centred data; `alpha = 0` is ordinary least squares.
pub fn ridge(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, alpha: f64) -> (Vec<f64>, f64) {
    let (m, w) = x.dim();
    let xm: Vec<f64> = (0..w).map(|j| x.column(j).sum() / m as f64).collect();
    let ym = y.sum() / m as f64;
    let xc = DMatrix::from_fn(m, w, |i, j| x[[i, j]] - xm[j]);
    let yc = DVector::from_fn(m, |i, _| y[i] - ym);
    let lhs = xc.transpose() * &xc + DMatrix::identity(w, w) * alpha;
    let rhs = xc.transpose() * yc;
    let beta = lhs.lu().solve(&rhs).expect("non-singular normal equations");
    let b = ym - (0..w).map(|j| beta[j] * xm[j]).sum::<f64>();
    (beta.iter().copied().collect(), b)
}

/// Kernel value as documented: RBF uses `exp(-gamma |a-b|^2)`, polynomial
/// `(a.b + 1)^3`.
pub fn kernel(kind: Kernel, a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    match kind {
        Kernel::Linear => dot,
        Kernel::Poly3 => (dot + 1.0).powi(3),
        Kernel::Rbf => (-gamma * a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()).exp(),
    }
}

/// Kernel inputs the SVR is documented to use: RBF divides every column by
/// its population standard deviation.
pub fn svr_inputs(kind: Kernel, x: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    let (m, w) = x.dim();
    let scale: Vec<f64> = (0..w)
        .map(|j| {
            if kind != Kernel::Rbf {
                return 1.0;
            }
            let mean = x.column(j).sum() / m as f64;
            let var = x.column(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
            if var > 0.0 { var.sqrt() } else { 1.0 }
        })
        .collect();
    x.rows().into_iter().map(|r| r.iter().zip(&scale).map(|(v, s)| v / s).collect()).collect()
}

pub fn gram(kind: Kernel, x: ArrayView2<'_, f64>) -> DMatrix<f64> {
    let rows = svr_inputs(kind, x);
    let gamma = 1.0 / x.ncols() as f64;
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| kernel(kind, &rows[i], &rows[j], gamma))
}

/// epsilon-SVR dual objective in difference form,
/// `1/2 b'Kb + eps |b|_1 - y'b`, for coefficients `b = alpha - alpha*`.
pub fn svr_dual_value(k: &DMatrix<f64>, y: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let b = DVector::from_column_slice(beta);
    0.5 * (b.transpose() * k * &b)[(0, 0)] + eps * beta.iter().map(|v| v.abs()).sum::<f64>()
        - y.iter().zip(beta).map(|(p, q)| p * q).sum::<f64>()
}

/// Euclidean projection onto `{a in [0, C]^n : s'a = 0}` by bisection on the
/// multiplier of the hyperplane constraint.
fn project(v: &DVector<f64>, s: &DVector<f64>, c: f64) -> DVector<f64> {
    let at = |lambda: f64| v.zip_map(s, |vi, si| (vi - lambda * si).clamp(0.0, c));
    let g = |lambda: f64| at(lambda).dot(s);
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Minimum of the standard epsilon-SVR dual over `[alpha; alpha*]` by
/// accelerated projected gradient (FISTA) on the box-plus-hyperplane set.
pub fn svr_dual_oracle(k: &DMatrix<f64>, y: &[f64], c: f64, eps: f64, iterations: usize) -> f64 {
    let m = y.len();
    let q = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        let sign = if (i < m) == (j < m) { 1.0 } else { -1.0 };
        sign * k[(i % m, j % m)]
    });
    let p = DVector::from_fn(2 * m, |i, _| if i < m { eps - y[i] } else { eps + y[i - m] });
    let s = DVector::from_fn(2 * m, |i, _| if i < m { 1.0 } else { -1.0 });
    let lipschitz = q.clone().symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lipschitz;
    let mut a = DVector::zeros(2 * m);
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad = &q * &z + &p;
        let next = project(&(&z - grad * step), &s, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &a) * ((t - 1.0) / t_next);
        a = next;
        t = t_next;
    }
    0.5 * (a.transpose() * &q * &a)[(0, 0)] + p.dot(&a)
}

/// Eigenvalues (descending) and unit eigenvectors (columns) of a symmetric matrix.
pub fn eigen(a: &Array2<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let e = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| e.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

/// Sample correlation matrix computed from covariances.
pub fn correlation(x: &Array2<f64>) -> Array2<f64> {
    let (m, n) = x.dim();
    let means: Vec<f64> = (0..n).map(|j| x.column(j).sum() / m as f64).collect();
    let cov = |a: usize, b: usize| {
        (0..m).map(|i| (x[[i, a]] - means[a]) * (x[[i, b]] - means[b])).sum::<f64>() / (m as f64 - 1.0)
    };
    Array2::from_shape_fn((n, n), |(a, b)| cov(a, b) / (cov(a, a) * cov(b, b)).sqrt())
}

/// PCA importance straight from the definition, using the eigen oracle.
pub fn pca_scores(x: &Array2<f64>) -> Vec<f64> {
    let (values, vectors) = eigen(&correlation(x));
    (0..x.ncols())
        .map(|j| (0..3).map(|i| values[i] * vectors[i][j].abs()).sum())
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation via sample covariance and standard deviations.
pub fn pearson(y: &[f64], h: &[f64]) -> f64 {
    let n = y.len() as f64;
    let (my, mh) = (mean(y), mean(h));
    let cov = y.iter().zip(h).map(|(a, b)| (a - my) * (b - mh)).sum::<f64>() / (n - 1.0);
    let sy = (y.iter().map(|a| (a - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sh = (h.iter().map(|b| (b - mh).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sy * sh)
}

pub fn relative_rmse(y: &[f64], h: &[f64]) -> f64 {
    let my = mean(y);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        num += (y[i] - h[i]).powi(2);
        den += (y[i] - my).powi(2);
    }
    (num / den).sqrt()
}

pub fn mean_abs_error(y: &[f64], h: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - h[i]).abs();
    }
    s / y.len() as f64
}

pub fn relative_mae(y: &[f64], h: &[f64]) -> f64 {
    let my = mean(y);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        num += (y[i] - h[i]).abs();
        den += (y[i] - my).abs();
    }
    num / den
}

/// Brute-force k-nearest-neighbour regressor, used to exercise the plugin slot.
pub struct Knn;

#[derive(Debug)]
struct KnnModel {
    x: Array2<f64>,
    y: Array1<f64>,
    k: usize,
}

impl ExternalLearner for Knn {
    fn fit(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        params: &BTreeMap<String, f64>,
    ) -> Result<Box<dyn ExternalPredictor>> {
        let k = params.get("k").map_or(5, |&k| k as usize).clamp(1, x.nrows());
        Ok(Box::new(KnnModel { x: x.to_owned(), y: y.to_owned(), k }))
    }
}

impl ExternalPredictor for KnnModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.rows()
            .into_iter()
            .map(|q| {
                let mut d: Vec<(f64, usize)> = self
                    .x
                    .rows()
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d[..self.k].iter().map(|&(_, i)| self.y[i]).sum::<f64>() / self.k as f64
            })
            .collect()
    }
}
