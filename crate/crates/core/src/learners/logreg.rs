//! L2-regularized logistic regression fitted by damped Newton iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_REG: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 1e-6;
const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub reg: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LinModel {
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept
    }

    /// `2 phi(<w, x>) - 1`, written as `tanh(z / 2)`.
    pub fn confidence(&self, x: &[f64]) -> f64 {
        logistic_confidence(self.score(x))
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Parameters packed as `[w..., intercept]`.
    pub fn packed(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.intercept);
        p
    }
}

#[inline]
pub fn logistic_confidence(z: f64) -> f64 {
    (0.5 * z).tanh()
}

/// `ln(1 + e^{-m})` without overflow.
#[inline]
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// `1 / (1 + e^{m})`
#[inline]
fn sigmoid_neg(m: f64) -> f64 {
    if m >= 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

fn check_params(ds: &Dataset, params: &[f64]) -> Result<()> {
    if params.len() != ds.d() + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} parameters (weights + intercept), got {}",
            ds.d() + 1,
            params.len()
        )));
    }
    Ok(())
}

#[inline]
fn margin(ds: &Dataset, params: &[f64], i: usize) -> f64 {
    let d = ds.d();
    let z: f64 = params[..d].iter().zip(ds.row(i)).map(|(w, v)| w * v).sum::<f64>() + params[d];
    f64::from(ds.labels()[i]) * z
}

/// Mean logistic loss plus `reg |w|^2 / 2`; the intercept (last entry) is
/// not penalized.
pub fn objective(ds: &Dataset, params: &[f64], reg: f64) -> Result<f64> {
    check_params(ds, params)?;
    let n = ds.n() as f64;
    let d = ds.d();
    let loss: f64 = (0..ds.n()).map(|i| log1p_exp_neg(margin(ds, params, i))).sum::<f64>() / n;
    let penalty = 0.5 * reg * params[..d].iter().map(|w| w * w).sum::<f64>();
    Ok(loss + penalty)
}

pub fn gradient(ds: &Dataset, params: &[f64], reg: f64) -> Result<Vec<f64>> {
    check_params(ds, params)?;
    let n = ds.n() as f64;
    let d = ds.d();
    let mut g = vec![0.0; d + 1];
    for i in 0..ds.n() {
        let y = f64::from(ds.labels()[i]);
        let coef = -y * sigmoid_neg(margin(ds, params, i)) / n;
        for (gj, &xj) in g[..d].iter_mut().zip(ds.row(i)) {
            *gj += coef * xj;
        }
        g[d] += coef;
    }
    for (gj, &w) in g[..d].iter_mut().zip(&params[..d]) {
        *gj += reg * w;
    }
    Ok(g)
}

fn hessian(ds: &Dataset, params: &[f64], reg: f64) -> DMatrix<f64> {
    let n = ds.n() as f64;
    let d = ds.d();
    let p = d + 1;
    let mut h = DMatrix::<f64>::zeros(p, p);
    let mut xt = vec![0.0; p];
    for i in 0..ds.n() {
        let s = sigmoid_neg(margin(ds, params, i));
        let w = s * (1.0 - s) / n;
        if w == 0.0 {
            continue;
        }
        xt[..d].copy_from_slice(ds.row(i));
        xt[d] = 1.0;
        for a in 0..p {
            let wa = w * xt[a];
            if wa == 0.0 {
                continue;
            }
            for b in a..p {
                h[(a, b)] += wa * xt[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    for a in 0..d {
        h[(a, a)] += reg;
    }
    h
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes [`objective`] from `w = 0` until the gradient norm is at most `tol`.
pub fn train_logreg(ds: &Dataset, reg: f64, tol: f64) -> Result<LinModel> {
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularization must be >= 0, got {reg}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if ds.n() == 0 {
        return Err(Error::Degenerate("logistic regression on an empty dataset".into()));
    }
    let p = ds.d() + 1;
    let mut params = vec![0.0; p];
    let mut f = objective(ds, &params, reg)?;
    let mut g = gradient(ds, &params, reg)?;
    let mut gnorm = norm(&g);
    let mut steps = 0usize;

    while gnorm > tol {
        if steps >= MAX_NEWTON_STEPS {
            return Err(Error::NonConvergence {
                solver: "newton",
                iterations: steps,
                residual: gnorm,
                tolerance: tol,
            });
        }
        steps += 1;
        let h = hessian(ds, &params, reg);
        let rhs = DVector::from_column_slice(&g);
        let mut damping = 0.0;
        let direction = loop {
            let mut hd = h.clone();
            for a in 0..p {
                hd[(a, a)] += damping;
            }
            if let Some(chol) = hd.cholesky() {
                break chol.solve(&rhs);
            }
            damping = if damping == 0.0 { 1e-10 } else { damping * 10.0 };
            if damping > 1e6 {
                // fall back to steepest descent
                break rhs.clone();
            }
        };
        // Armijo backtracking along -direction
        let slope: f64 = g.iter().zip(direction.iter()).map(|(a, b)| a * b).sum();
        let mut step = 1.0;
        let mut accepted = false;
        let mut candidate = params.clone();
        for _ in 0..60 {
            for (c, (&w, &dir)) in candidate.iter_mut().zip(params.iter().zip(direction.iter())) {
                *c = w - step * dir;
            }
            let fc = objective(ds, &candidate, reg)?;
            // the full step may be within rounding of f near the optimum
            let flat = step == 1.0 && fc - f <= 1e-13 * f.abs().max(1.0);
            if fc <= f - 1e-4 * step * slope || flat {
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                solver: "newton",
                iterations: steps,
                residual: gnorm,
                tolerance: tol,
            });
        }
        params.copy_from_slice(&candidate);
        g = gradient(ds, &params, reg)?;
        gnorm = norm(&g);
        if !params.iter().all(|v| v.is_finite()) {
            return Err(Error::NonConvergence {
                solver: "newton",
                iterations: steps,
                residual: f64::INFINITY,
                tolerance: tol,
            });
        }
    }

    let intercept = params.pop().expect("intercept");
    Ok(LinModel {
        weights: params,
        intercept,
        reg,
        iterations: steps,
        gradient_norm: gnorm,
    })
}
