//! Soft-margin SVM trained by sequential minimal optimization.
//!
//! The solver works on the dual
//!
//! ```text
//! min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! picking the working pair by maximal violation for `i` and second-order
//! gain for `j`, until the maximal KKT violation drops below `tol`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `exp(-gamma * |a - b|^2)`
    Gaussian { gamma: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Gaussian { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Gaussian { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                Error::InvalidArgument(format!("gaussian bandwidth must be positive, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }
}

/// `1 / (d * var)` where `var` is the variance over all feature entries.
pub fn scale_gamma(ds: &Dataset) -> f64 {
    let x = ds.features();
    let count = (x.n_rows() * x.n_cols()) as f64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for row in x.rows() {
        for &v in row {
            sum += v;
            sq += v * v;
        }
    }
    let mean = sum / count;
    let var = sq / count - mean * mean;
    if var > 0.0 {
        1.0 / (x.n_cols() as f64 * var)
    } else {
        1.0
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    /// Iteration cap; `None` means `max(10^7, 100 n)`.
    pub max_iter: Option<usize>,
    pub cache_mb: usize,
}

impl SvmParams {
    pub fn new(kernel: Kernel, c: f64, tol: f64) -> Self {
        Self {
            kernel,
            c,
            tol,
            max_iter: None,
            cache_mb: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    /// Support vectors, row-major with `n_features` columns.
    pub support_vectors: Vec<f64>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub intercept: f64,
    pub n_features: usize,
    /// Confidences are divided by this; 1 unless rescaled.
    #[serde(default = "one")]
    pub scale: f64,
    /// Explicit weight vector, present for the linear kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_weights: Option<Vec<f64>>,
    pub iterations: usize,
    pub kkt_violation: f64,
    pub dual_objective: f64,
}

fn one() -> f64 {
    1.0
}

impl SvmModel {
    pub fn n_support(&self) -> usize {
        self.dual_coef.len()
    }

    pub fn support_vector(&self, k: usize) -> &[f64] {
        &self.support_vectors[k * self.n_features..(k + 1) * self.n_features]
    }

    /// Kernel decision value including the intercept, divided by `scale`.
    pub fn confidence(&self, x: &[f64]) -> f64 {
        self.decision_value(x) / self.scale
    }

    /// Unscaled `sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        if let Some(w) = &self.linear_weights {
            return dot(w, x) + self.intercept;
        }
        let s: f64 = (0..self.n_support())
            .map(|k| self.dual_coef[k] * self.kernel.eval(self.support_vector(k), x))
            .sum();
        s + self.intercept
    }

    pub fn confidences(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.confidence(x.row(i)))
            .collect()
    }

    /// `1/2 |w|^2 + C sum_i max(0, 1 - y_i f(x_i))` on `ds`.
    pub fn primal_objective(&self, ds: &Dataset) -> f64 {
        let m = self.n_support();
        let mut w2 = 0.0;
        for a in 0..m {
            for b in 0..m {
                w2 += self.dual_coef[a]
                    * self.dual_coef[b]
                    * self.kernel.eval(self.support_vector(a), self.support_vector(b));
            }
        }
        let hinge: f64 = (0..ds.n())
            .map(|i| (1.0 - f64::from(ds.labels()[i]) * self.decision_value(ds.row(i))).max(0.0))
            .sum();
        0.5 * w2 + self.c * hinge
    }
}

/// Kernel rows computed on demand and kept in a bounded FIFO cache.
struct KernelRows<'a> {
    x: &'a FeatureMatrix,
    kernel: Kernel,
    norms: Vec<f64>,
    rows: Vec<Option<Box<[f64]>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a FeatureMatrix, kernel: Kernel, cache_mb: usize) -> Self {
        let n = x.n_rows();
        let per_row = (n * std::mem::size_of::<f64>()).max(1);
        let capacity = ((cache_mb << 20) / per_row).max(2).min(n.max(2));
        let norms = x.rows().map(|r| dot(r, r)).collect();
        Self {
            x,
            kernel,
            norms,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity,
        }
    }

    fn diag(&self, i: usize) -> f64 {
        match self.kernel {
            Kernel::Linear => self.norms[i],
            Kernel::Gaussian { .. } => 1.0,
        }
    }

    /// Computes row `i` if absent, never evicting row `keep`.
    fn ensure(&mut self, i: usize, keep: Option<usize>) {
        if self.rows[i].is_some() {
            return;
        }
        if self.order.len() >= self.capacity {
            if let Some(mut old) = self.order.pop_front() {
                if Some(old) == keep {
                    self.order.push_back(old);
                    old = self.order.pop_front().expect("capacity >= 2");
                }
                self.rows[old] = None;
            }
        }
        let xi = self.x.row(i);
        let ni = self.norms[i];
        let row: Box<[f64]> = match self.kernel {
            Kernel::Linear => (0..self.x.n_rows()).map(|t| dot(xi, self.x.row(t))).collect(),
            Kernel::Gaussian { gamma } => (0..self.x.n_rows())
                .map(|t| {
                    let d2 = (ni + self.norms[t] - 2.0 * dot(xi, self.x.row(t))).max(0.0);
                    (-gamma * d2).exp()
                })
                .collect(),
        };
        self.rows[i] = Some(row);
        self.order.push_back(i);
    }

    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i, None);
        self.ensure(j, Some(i));
        (
            self.rows[i].as_deref().expect("cached"),
            self.rows[j].as_deref().expect("cached"),
        )
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.ensure(i, None);
        self.rows[i].as_deref().expect("cached")
    }
}

/// Trains with default iteration cap and cache size.
pub fn train_svm(ds: &Dataset, kernel: Kernel, c: f64, tol: f64) -> Result<SvmModel> {
    train_svm_with(ds, &SvmParams::new(kernel, c, tol))
}

pub fn train_svm_with(ds: &Dataset, params: &SvmParams) -> Result<SvmModel> {
    let SvmParams {
        kernel, c, tol, ..
    } = *params;
    kernel.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("box constraint C must be positive, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = ds.n();
    let positives = ds.positive_count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate("SVM training needs both labels present".into()));
    }
    let max_iter = params.max_iter.unwrap_or_else(|| (100 * n).max(10_000_000));
    let y: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    let mut k = KernelRows::new(ds.features(), kernel, params.cache_mb);
    let diag: Vec<f64> = (0..n).map(|i| k.diag(i)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0usize;
    let mut violation;
    loop {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && v >= gmax {
                gmax = v;
                i_sel = t;
            }
        }
        // j: best second-order gain in I_low; gmax2 tracks -min over I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        if i_sel != usize::MAX {
            let ki = k.row(i_sel);
            for t in 0..n {
                let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= gmax2 {
                    gmax2 = v;
                }
                let diff = gmax + v;
                if diff > 0.0 {
                    let quad = diag[i_sel] + diag[t] - 2.0 * ki[t];
                    let gain = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if gain <= best_gain {
                        best_gain = gain;
                        j_sel = t;
                    }
                }
            }
        }
        violation = gmax + gmax2;
        if violation < tol || j_sel == usize::MAX {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                solver: "smo",
                iterations,
                residual: violation,
                tolerance: tol,
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = {
            let (ki, _) = k.pair(i, j);
            ki[j]
        };
        let quad = {
            let q = diag[i] + diag[j] - 2.0 * kij;
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        let (ki, kj) = k.pair(i, j);
        let (ci, cj) = (y[i] * di, y[j] * dj);
        for t in 0..n {
            grad[t] += y[t] * (ci * ki[t] + cj * kj[t]);
        }
    }

    // intercept from free vectors, or the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let dual_objective = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    let d = ds.d();
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.extend_from_slice(ds.row(t));
            dual_coef.push(alpha[t] * y[t]);
        }
    }
    let linear_weights = matches!(kernel, Kernel::Linear).then(|| {
        let mut w = vec![0.0; d];
        for (k, &coef) in dual_coef.iter().enumerate() {
            for (wj, &xj) in w.iter_mut().zip(&support_vectors[k * d..(k + 1) * d]) {
                *wj += coef * xj;
            }
        }
        w
    });

    Ok(SvmModel {
        kernel,
        c,
        support_vectors,
        dual_coef,
        intercept: -rho,
        n_features: d,
        scale: 1.0,
        linear_weights,
        iterations,
        kkt_violation: violation.max(0.0),
        dual_objective,
    })
}
