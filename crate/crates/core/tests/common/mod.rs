//! Independent oracles and generators shared by the property suites and the
//! acceptance runner.

#![allow(dead_code)]

use fairshift::dataset::Dataset;
use fairshift::error::Error;
use fairshift::fairness::{apply_rr, fit_rr, fit_sdb, shifted_predictions, train_fwl_with, ShiftGroup};
use fairshift::learners::{
    logreg_gradient, logreg_objective, train_adaboost, train_svm, ConfidenceModel, Kernel, SvmModel,
};
use fairshift::metrics::{margin_distribution, signed_bias};
use fairshift::Label;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

pub fn labels_of(bits: &[bool]) -> Vec<Label> {
    bits.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

pub fn base_sign(c: f64) -> Label {
    if c >= 0.0 {
        1
    } else {
        -1
    }
}

fn rate(preds: &[Label], mask: &[bool], want: bool) -> f64 {
    let (mut pos, mut n) = (0usize, 0usize);
    for (&p, &m) in preds.iter().zip(mask) {
        if m == want {
            n += 1;
            pos += usize::from(p == 1);
        }
    }
    pos as f64 / n as f64
}

/// P(+ | not protected) - P(+ | protected), counted directly.
pub fn bias_of(preds: &[Label], protected: &[bool]) -> f64 {
    rate(preds, protected, false) - rate(preds, protected, true)
}

pub fn error_of(preds: &[Label], labels: &[Label]) -> f64 {
    preds.iter().zip(labels).filter(|(p, y)| p != y).count() as f64 / preds.len() as f64
}

// ---- shifted decision boundary ----

#[derive(Debug, Clone)]
pub struct Instance {
    pub confs: Vec<f64>,
    pub labels: Vec<Label>,
    pub protected: Vec<bool>,
    pub epsilon: f64,
}

pub struct Oracle {
    pub error: f64,
    pub bias: f64,
    pub preds: Vec<Label>,
}

/// Exhaustive search: every distinct threshold that changes a prediction of
/// the disadvantaged group, evaluated from the definition of the shifted rule.
pub fn sdb_oracle(confs: &[f64], labels: &[Label], protected: &[bool], epsilon: f64) -> Option<Oracle> {
    let base: Vec<Label> = confs.iter().map(|&c| base_sign(c)).collect();
    let shift_protected = bias_of(&base, protected) >= 0.0;
    let in_group = |i: usize| protected[i] == shift_protected;
    let mut shifts = vec![0.0];
    for (i, &c) in confs.iter().enumerate() {
        if in_group(i) && c < 0.0 && !shifts.contains(&-c) {
            shifts.push(-c);
        }
    }
    shifts.sort_by(f64::total_cmp);
    let mut best: Option<Oracle> = None;
    for &lambda in &shifts {
        let preds: Vec<Label> = (0..confs.len())
            .map(|i| {
                if !in_group(i) {
                    base[i]
                } else if confs[i] >= -lambda {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let bias = bias_of(&preds, protected);
        let error = error_of(&preds, labels);
        if bias.abs() <= epsilon + 1e-12 && best.as_ref().is_none_or(|b| error < b.error) {
            best = Some(Oracle { error, bias, preds });
        }
    }
    best
}

/// Small instances on a coarse confidence grid so ties are common.
pub fn sdb_instance() -> impl Strategy<Value = Instance> {
    (4usize..28).prop_flat_map(|n| {
        (
            prop::collection::vec(-10i32..=10, n),
            prop::collection::vec(prop::bool::ANY, n),
            prop::collection::vec(prop::bool::weighted(0.4), n),
            prop::sample::select(vec![0.0, 0.02, 0.1, 0.25, 0.6]),
        )
            .prop_map(|(c, l, p, epsilon)| Instance {
                confs: c.into_iter().map(|k| k as f64 / 10.0).collect(),
                labels: labels_of(&l),
                protected: p,
                epsilon,
            })
            .prop_filter("both groups present, at most 12 negatives to shift", |inst| {
                let np = inst.protected.iter().filter(|&&p| p).count();
                if np == 0 || np == inst.protected.len() {
                    return false;
                }
                let negs = |want: bool| {
                    inst.confs
                        .iter()
                        .zip(&inst.protected)
                        .filter(|(&c, &p)| p == want && c < 0.0)
                        .count()
                };
                negs(true) <= 12 && negs(false) <= 12
            })
    })
}

pub fn check_sdb_oracle(inst: &Instance) -> Check {
    let got = fit_sdb(&inst.confs, &inst.labels, &inst.protected, inst.epsilon);
    match (sdb_oracle(&inst.confs, &inst.labels, &inst.protected, inst.epsilon), got) {
        (None, Err(Error::InfeasibleShift { .. })) => {}
        (Some(o), Ok(fit)) => {
            prop_assert!((fit.error - o.error).abs() < 1e-12, "error {} vs oracle {}", fit.error, o.error);
            prop_assert!((fit.bias - o.bias).abs() < 1e-12, "bias {} vs oracle {}", fit.bias, o.bias);
            let preds = shifted_predictions(&inst.confs, &inst.protected, fit.lambda, fit.group);
            prop_assert_eq!(preds, o.preds);
        }
        (o, got) => prop_assert!(false, "oracle feasible: {}, fit: {:?}", o.is_some(), got),
    }
    Ok(())
}

pub fn check_shift_locality(inst: &Instance, lambda: f64) -> Check {
    let base: Vec<Label> = inst.confs.iter().map(|&c| base_sign(c)).collect();
    for group in [ShiftGroup::Protected, ShiftGroup::Complement] {
        let preds = shifted_predictions(&inst.confs, &inst.protected, lambda, group);
        for i in 0..preds.len() {
            if !group.contains(inst.protected[i]) {
                prop_assert_eq!(preds[i], base[i]);
            } else {
                prop_assert!(preds[i] >= base[i], "a shift only turns -1 into +1");
            }
        }
    }
    Ok(())
}

pub fn check_shift_monotone(inst: &Instance, lambdas: &[f64]) -> Check {
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let mut last_pos = 0usize;
    let mut last_bias = f64::INFINITY;
    for &l in &lambdas {
        let preds = shifted_predictions(&inst.confs, &inst.protected, l, ShiftGroup::Protected);
        let pos = preds.iter().zip(&inst.protected).filter(|(&p, &m)| m && p == 1).count();
        let bias = bias_of(&preds, &inst.protected);
        prop_assert!(pos >= last_pos);
        prop_assert!(bias <= last_bias);
        last_pos = pos;
        last_bias = bias;
    }
    Ok(())
}

/// Mean bias of randomized relabeling over `draws` seeds on a fixed
/// population of 5000 predictions.
pub fn rr_mean_bias(draws: u64) -> f64 {
    let n = 5000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let protected: Vec<bool> = (0..n).map(|_| rng.random_bool(0.35)).collect();
    let preds: Vec<Label> = protected
        .iter()
        .map(|&p| if rng.random_bool(if p { 0.15 } else { 0.35 }) { 1 } else { -1 })
        .collect();
    let p = fit_rr(&preds, &protected).unwrap();
    assert!(p > 0.0 && p < 1.0);
    (0..draws)
        .map(|seed| bias_of(&apply_rr(p, seed).unwrap().apply(&preds, &protected), &protected))
        .sum::<f64>()
        / draws as f64
}

pub type FwlRows = Vec<(i32, i32, bool, bool)>;

pub fn fwl_case() -> impl Strategy<Value = (FwlRows, usize)> {
    (
        prop::collection::vec((0i32..20, 0i32..5, prop::bool::ANY, prop::bool::weighted(0.4)), 6..60),
        1usize..12,
    )
}

pub fn check_fwl_reduces_to_adaboost(rows: &FwlRows, rounds: usize) -> Check {
    let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0 as f64, r.1 as f64]).collect();
    let labels: Vec<Label> = rows.iter().map(|r| if r.2 { 1 } else { -1 }).collect();
    let protected: Vec<bool> = rows.iter().map(|r| r.3).collect();
    prop_assume!(labels.contains(&1) && labels.contains(&-1));
    let ds = Dataset::from_rows(&x, labels, protected).unwrap();
    match (train_adaboost(&ds, rounds), train_fwl_with(&ds, rounds, 0.0)) {
        (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
        (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
        (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
    }
    Ok(())
}

// ---- learners ----

pub type Rows = Vec<(f64, f64, bool)>;

pub fn dataset(rows: &[(f64, f64, bool)]) -> Dataset {
    let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
    let labels: Vec<Label> = rows.iter().map(|r| if r.2 { 1 } else { -1 }).collect();
    let protected = (0..rows.len()).map(|i| i % 2 == 0).collect();
    Dataset::from_rows(&x, labels, protected).unwrap()
}

pub fn both_labels(rows: &[(f64, f64, bool)]) -> bool {
    rows.iter().any(|r| r.2) && rows.iter().any(|r| !r.2)
}

pub fn rows(n: std::ops::Range<usize>) -> impl Strategy<Value = Rows> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, prop::bool::ANY), n)
}

pub fn check_adaboost_bound(data: &Rows, rounds: usize) -> Check {
    prop_assume!(both_labels(data));
    let ds = dataset(data);
    let m = train_adaboost(&ds, rounds).unwrap();
    let preds = ConfidenceModel::from(m.clone()).predictions(&ds).unwrap();
    let err = error_of(&preds, ds.labels());
    let bound = m.training_error_bound();
    prop_assert!(err <= bound + 1e-12, "error {} bound {}", err, bound);
    Ok(())
}

/// `sum alpha - 1/2 alpha' Q alpha` with `Q_ij = y_i y_j K(x_i, x_j)`.
fn dual_value(q: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    alpha.sum() - 0.5 * (alpha.transpose() * q * alpha)[(0, 0)]
}

/// Maximizes the SVM dual by enumerating, for every variable, whether it
/// sits at 0, at C, or strictly inside; each face is solved from its KKT
/// equations and kept if it is feasible.
pub fn brute_force_dual(ds: &Dataset, kernel: Kernel, c: f64) -> f64 {
    let n = ds.n();
    let y: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * kernel.eval(ds.row(i), ds.row(j)));
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut k = code;
        for s in state.iter_mut() {
            *s = (k % 3) as u8;
            k /= 3;
        }
        let mut alpha = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if free.is_empty() {
            let balance: f64 = (0..n).map(|i| alpha[i] * y[i]).sum();
            if balance.abs() < 1e-12 {
                best = best.max(dual_value(&q, &alpha));
            }
            continue;
        }
        // [Q_FF y_F; y_F' 0] [a_F; nu] = [1 - Q_FB a_B; -y_B' a_B]
        let m = free.len();
        let mut a = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                a[(r, s)] = q[(i, j)];
            }
            a[(r, m)] = y[i];
            a[(m, r)] = y[i];
            rhs[r] = 1.0 - (0..n).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * alpha[j]).sum::<f64>();
        }
        rhs[m] = -(0..n).filter(|j| state[*j] != 2).map(|j| y[j] * alpha[j]).sum::<f64>();
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        if (0..m).any(|r| !(sol[r] >= -1e-12 && sol[r] <= c + 1e-12)) {
            continue;
        }
        for (r, &i) in free.iter().enumerate() {
            alpha[i] = sol[r].clamp(0.0, c);
        }
        best = best.max(dual_value(&q, &alpha));
    }
    best
}

/// The dual objective implied by a trained model's coefficients.
pub fn model_dual(m: &SvmModel) -> f64 {
    let k = m.n_support();
    let mut quad = 0.0;
    for a in 0..k {
        for b in 0..k {
            quad += m.dual_coef[a] * m.dual_coef[b] * m.kernel.eval(m.support_vector(a), m.support_vector(b));
        }
    }
    m.dual_coef.iter().map(|v| v.abs()).sum::<f64>() - 0.5 * quad
}

pub fn svm_case() -> impl Strategy<Value = (Rows, f64, bool)> {
    (rows(6..7), prop::sample::select(vec![0.3, 1.0, 5.0]), prop::bool::ANY)
}

pub fn check_svm_dual(data: &Rows, c: f64, gaussian: bool) -> Check {
    prop_assume!(both_labels(data));
    let ds = dataset(data);
    let kernel = if gaussian { Kernel::Gaussian { gamma: 0.5 } } else { Kernel::Linear };
    let m = train_svm(&ds, kernel, c, 1e-7).unwrap();
    let exact = brute_force_dual(&ds, kernel, c);
    let got = model_dual(&m);
    prop_assert!((exact - got).abs() <= 1e-4, "exhaustive {} smo {}", exact, got);
    let primal = m.primal_objective(&ds);
    prop_assert!(primal >= got - 1e-9);
    let gap = (primal - got) / primal.abs().max(1.0);
    prop_assert!(gap <= 1e-3, "relative duality gap {}", gap);
    Ok(())
}

pub fn gradient_case() -> impl Strategy<Value = (Rows, Vec<f64>, f64)> {
    (
        rows(5..40),
        prop::collection::vec(-2.0f64..2.0, 3),
        prop::sample::select(vec![0.0, 1e-3, 0.5]),
    )
}

pub fn check_logistic_gradient(data: &Rows, params: &[f64], reg: f64) -> Check {
    let ds = dataset(data);
    let g = logreg_gradient(&ds, params, reg).unwrap();
    let h = 1e-5;
    let mut fd = vec![0.0; params.len()];
    for j in 0..params.len() {
        let mut up = params.to_vec();
        let mut down = params.to_vec();
        up[j] += h;
        down[j] -= h;
        fd[j] = (logreg_objective(&ds, &up, reg).unwrap() - logreg_objective(&ds, &down, reg).unwrap()) / (2.0 * h);
    }
    let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = g.iter().map(|a| a.abs()).fold(0.0, f64::max).max(1e-3);
    prop_assert!(diff / scale <= 1e-5, "relative error {}", diff / scale);
    Ok(())
}

// ---- metrics ----

pub fn mask_case() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (2usize..80).prop_flat_map(|n| (prop::collection::vec(prop::bool::ANY, n), prop::collection::vec(prop::bool::ANY, n)))
}

pub fn check_antisymmetry(preds: &[bool], mask: &[bool]) -> Check {
    prop_assume!(mask.iter().any(|&m| m) && mask.iter().any(|&m| !m));
    let preds = labels_of(preds);
    let inverse: Vec<bool> = mask.iter().map(|m| !m).collect();
    let a = signed_bias(&preds, mask);
    let b = signed_bias(&preds, &inverse);
    prop_assert!((a + b).abs() < 1e-15, "{} vs {}", a, b);
    prop_assert!((-1.0..=1.0).contains(&a));
    Ok(())
}

pub fn cdf_case() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, Vec<f64>)> {
    (1usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(prop::bool::ANY, n),
            prop::collection::vec(-1.5f64..1.5, 1..30),
        )
    })
}

pub fn check_cdf(confs: &[f64], ys: &[bool], thetas: &[f64]) -> Check {
    let labels = labels_of(ys);
    let mut thetas = thetas.to_vec();
    thetas.sort_by(f64::total_cmp);
    let cdf = margin_distribution(confs, &labels, &thetas).unwrap();
    prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    prop_assert!(cdf.iter().all(|v| (0.0..=1.0).contains(v)));
    let ends = margin_distribution(confs, &labels, &[-1.01, 1.0]).unwrap();
    prop_assert_eq!(ends, vec![0.0, 1.0]);
    Ok(())
}
