//! Epsilon-insensitive support vector regression.
//!
//! The dual is solved with SMO on the standard `2m`-variable formulation
//!
//! ```text
//! min  1/2 a'Qa + p'a   s.t.  s'a = 0,  0 <= a_t <= C
//! ```
//!
//! with `a = (alpha, alpha*)`, `s = (+1.., -1..)`, `p = (eps - y, eps + y)` and
//! `Q_ts = s_t s_s K(x_t, x_s)`. Working pairs are chosen by maximal violation
//! with second-order gain, as in LIBSVM. The fitted model is
//! `f(x) = sum_i (alpha_i - alpha*_i) K(x, x_i) + b`.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const TAU: f64 = 1e-12;
/// Stopping tolerance on the maximal KKT violation.
pub const SMO_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `x . x'`
    Linear,
    /// `exp(-gamma |x - x'|^2)` on variance-normalized inputs, `gamma = 1 / width`.
    Rbf,
    /// `(x . x' + 1)^3`
    Poly3,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Linear, Kernel::Rbf, Kernel::Poly3];

    /// Kernel value; `gamma` is only used by the RBF kernel.
    pub fn eval(self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, gamma: f64) -> f64 {
        match self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Poly3 => (a.dot(&b) + 1.0).powi(3),
        }
    }

    /// Gram matrix of the rows of `x`.
    pub fn gram(self, x: ArrayView2<'_, f64>, gamma: f64) -> Array2<f64> {
        let m = x.nrows();
        let mut k = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..=i {
                let v = self.eval(x.row(i), x.row(j), gamma);
                k[[i, j]] = v;
                k[[j, i]] = v;
            }
        }
        k
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Linear => "linear",
            Kernel::Rbf => "rbf",
            Kernel::Poly3 => "poly3",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Kernel::Linear),
            "rbf" => Ok(Kernel::Rbf),
            "poly3" | "poly" => Ok(Kernel::Poly3),
            other => Err(Error::Config(format!("unknown kernel `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    kernel: Kernel,
    gamma: f64,
    /// Per-column divisor applied before the kernel (RBF only; ones otherwise).
    input_scale: Array1<f64>,
    /// Scaled training inputs.
    support: Array2<f64>,
    /// `alpha_i - alpha*_i` per training sample.
    coef: Array1<f64>,
    bias: f64,
    dual_objective: f64,
    max_violation: f64,
    iterations: usize,
}

impl SvrModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let xs = &x / &self.input_scale;
        xs.rows()
            .into_iter()
            .map(|row| {
                self.coef
                    .iter()
                    .zip(self.support.rows())
                    .filter(|(c, _)| **c != 0.0)
                    .map(|(c, sv)| c * self.kernel.eval(row, sv, self.gamma))
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }

    /// Differences `alpha_i - alpha*_i`, each within `[-C, C]`.
    pub fn dual_coefficients(&self) -> ArrayView1<'_, f64> {
        self.coef.view()
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Minimized dual objective `1/2 a'Qa + p'a`.
    pub fn dual_objective(&self) -> f64 {
        self.dual_objective
    }

    /// Final maximal KKT violation `m(a) - M(a)`.
    pub fn max_violation(&self) -> f64 {
        self.max_violation
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Inputs as seen by the kernel.
    pub fn kernel_inputs(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        &x / &self.input_scale
    }
}

pub(crate) fn fit(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    kernel: Kernel,
    c: f64,
    epsilon: f64,
) -> Result<SvrModel> {
    let (m, w) = x.dim();
    if m < 2 {
        return Err(Error::Fit(format!("SVR needs at least 2 samples, got {m}")));
    }
    if !(c > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::Config(format!("SVR needs C > 0 and epsilon >= 0 (C = {c}, epsilon = {epsilon})")));
    }

    let input_scale = match kernel {
        Kernel::Rbf => x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 }),
        _ => Array1::ones(w),
    };
    let gamma = if w > 0 { 1.0 / w as f64 } else { 1.0 };
    let support = &x / &input_scale;
    let k = kernel.gram(support.view(), gamma);
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("kernel Gram matrix has non-finite entries".into()));
    }

    let sol = Smo::new(&k, y, c, epsilon).solve();
    let coef = (0..m).map(|i| sol.alpha[i] - sol.alpha[i + m]).collect();
    Ok(SvrModel {
        kernel,
        gamma,
        input_scale,
        support,
        coef,
        bias: -sol.rho,
        dual_objective: sol.objective,
        max_violation: sol.violation,
        iterations: sol.iterations,
    })
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
    objective: f64,
    violation: f64,
    iterations: usize,
}

struct Smo<'a> {
    k: &'a Array2<f64>,
    m: usize,
    c: f64,
    sign: Vec<f64>,
    p: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    diag: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn new(k: &'a Array2<f64>, y: ArrayView1<'_, f64>, c: f64, epsilon: f64) -> Self {
        let m = y.len();
        let l = 2 * m;
        let sign: Vec<f64> = (0..l).map(|t| if t < m { 1.0 } else { -1.0 }).collect();
        let p: Vec<f64> = (0..l)
            .map(|t| if t < m { epsilon - y[t] } else { epsilon + y[t - m] })
            .collect();
        let diag = (0..l).map(|t| k[[t % m, t % m]]).collect();
        Self {
            k,
            m,
            c,
            sign,
            grad: p.clone(),
            p,
            alpha: vec![0.0; l],
            diag,
        }
    }

    #[inline]
    fn q(&self, t: usize, s: usize) -> f64 {
        self.sign[t] * self.sign[s] * self.k[[t % self.m, s % self.m]]
    }

    fn is_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    fn is_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    /// Returns the working pair, or `None` once the violation is below tolerance,
    /// together with the current violation.
    fn select(&self) -> (Option<(usize, usize)>, f64) {
        let l = self.alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i_best = None;
        for t in 0..l {
            if self.sign[t] > 0.0 {
                if !self.is_upper(t) && -self.grad[t] >= gmax {
                    gmax = -self.grad[t];
                    i_best = Some(t);
                }
            } else if !self.is_lower(t) && self.grad[t] >= gmax {
                gmax = self.grad[t];
                i_best = Some(t);
            }
        }
        let Some(i) = i_best else {
            return (None, 0.0);
        };

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_best = None;
        let mut obj_min = f64::INFINITY;
        for j in 0..l {
            let (grad_diff, quad) = if self.sign[j] > 0.0 {
                if self.is_lower(j) {
                    continue;
                }
                gmax2 = gmax2.max(self.grad[j]);
                (gmax + self.grad[j], self.diag[i] + self.diag[j] - 2.0 * self.sign[i] * self.q(i, j))
            } else {
                if self.is_upper(j) {
                    continue;
                }
                gmax2 = gmax2.max(-self.grad[j]);
                (gmax - self.grad[j], self.diag[i] + self.diag[j] + 2.0 * self.sign[i] * self.q(i, j))
            };
            if grad_diff > 0.0 {
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j_best = Some(j);
                }
            }
        }
        let violation = gmax + gmax2;
        match j_best {
            Some(j) if violation >= SMO_TOLERANCE => (Some((i, j)), violation),
            _ => (None, violation),
        }
    }

    fn solve(mut self) -> Solution {
        let l = self.alpha.len();
        let max_iter = 10_000_000usize.max(100 * l);
        let mut iterations = 0;
        let violation = loop {
            let (pair, violation) = self.select();
            let Some((i, j)) = pair else { break violation };
            if iterations >= max_iter {
                break violation;
            }
            iterations += 1;
            self.update(i, j);
        };
        let rho = self.rho();
        let objective = 0.5
            * self
                .alpha
                .iter()
                .zip(self.grad.iter().zip(&self.p))
                .map(|(a, (g, p))| a * (g + p))
                .sum::<f64>();
        Solution {
            alpha: self.alpha,
            rho,
            objective,
            violation: violation.max(0.0),
            iterations,
        }
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qij = self.q(i, j);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign[i] != self.sign[j] {
            let quad = self.diag[i] + self.diag[j] + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = self.diag[i] + self.diag[j] - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..self.alpha.len() {
            self.grad[t] += self.q(t, i) * di + self.q(t, j) * dj;
        }
    }

    fn rho(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..self.alpha.len() {
            let yg = self.sign[t] * self.grad[t];
            if self.is_upper(t) {
                if self.sign[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.is_lower(t) {
                if self.sign[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        if free > 0 {
            sum_free / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn constant_target_inside_tube() {
        let x = array![[0.1, 0.2], [0.5, 0.9], [0.7, 0.3], [1.0, 0.0]];
        let y = array![2.5, 2.5, 2.5, 2.5];
        for kernel in Kernel::ALL {
            let model = fit(x.view(), y.view(), kernel, 1.0, 0.1).unwrap();
            assert!(model.dual_coefficients().iter().all(|&c| c == 0.0));
            for p in model.predict(array![[0.3, 0.3], [2.0, -1.0]].view()) {
                assert!((p - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_fit_recovers_slope_with_large_c() {
        let x = array![[0.0], [0.25], [0.5], [0.75], [1.0]];
        let y = x.column(0).mapv(|v| 2.0 * v + 1.0);
        let model = fit(x.view(), y.view(), Kernel::Linear, 100.0, 0.01).unwrap();
        let pred = model.predict(x.view());
        for (p, t) in pred.iter().zip(y.iter()) {
            assert!((p - t).abs() <= 0.01 + 1e-5, "{p} vs {t}");
        }
    }

    #[test]
    fn box_constraints_and_balance() {
        let x = array![[0.0], [0.2], [0.4], [0.6], [0.8], [1.0]];
        let y = array![0.0, 3.0, 0.5, 2.5, 0.2, 3.0];
        let model = fit(x.view(), y.view(), Kernel::Rbf, 1.0, 0.1).unwrap();
        let coef = model.dual_coefficients();
        assert!(coef.iter().all(|c| c.abs() <= 1.0 + 1e-12));
        assert!(coef.sum().abs() < 1e-9);
        assert!(model.max_violation() < SMO_TOLERANCE);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = array![[0.0], [1.0]];
        let y = array![0.0, 1.0];
        assert!(fit(x.view(), y.view(), Kernel::Linear, 0.0, 0.1).is_err());
        assert!(fit(x.view(), y.view(), Kernel::Linear, 1.0, -0.1).is_err());
        assert!(fit(array![[0.0]].view(), array![1.0].view(), Kernel::Linear, 1.0, 0.1).is_err());
        let huge = array![[1e200], [1e200]];
        assert!(matches!(fit(huge.view(), y.view(), Kernel::Poly3, 1.0, 0.1), Err(Error::Fit(_))));
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in Kernel::ALL {
            assert_eq!(k.to_string().parse::<Kernel>().unwrap(), k);
        }
        assert!("sigmoid".parse::<Kernel>().is_err());
    }
}
