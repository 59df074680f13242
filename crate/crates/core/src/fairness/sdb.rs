//! Shifted decision boundary.
//!
//! `h_lambda(x)` predicts `+1` for a member of the shifted group whenever
//! `conf(x) >= -lambda`, and `sign(conf(x))` for everybody else.

use serde::{Deserialize, Serialize};

use super::ShiftGroup;
use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::learners::ConfidenceModel;
use crate::metrics::{sign, signed_bias};

/// Tolerance added to `epsilon` when comparing biases, so that a bias that
/// is zero up to rounding counts as zero.
const BIAS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdbFit {
    pub lambda: f64,
    pub group: ShiftGroup,
    /// Label error of `h_lambda` on the fitting data.
    pub error: f64,
    /// Signed bias of `h_lambda` on the fitting data, relative to the
    /// original protected mask.
    pub bias: f64,
    /// Whether `|bias| <= epsilon` was reached.
    pub feasible: bool,
    pub candidates: usize,
}

/// Predictions of `h_lambda` from precomputed confidences.
pub fn shifted_predictions(confs: &[f64], protected: &[bool], lambda: f64, group: ShiftGroup) -> Vec<Label> {
    confs
        .iter()
        .zip(protected)
        .map(|(&c, &p)| {
            if group.contains(p) {
                if c >= -lambda {
                    1
                } else {
                    -1
                }
            } else {
                sign(c)
            }
        })
        .collect()
}

/// Candidate shifts in increasing order, starting with 0.
///
/// Each negative confidence `c` of a group member contributes the midpoint
/// between `c` and the next lower distinct member confidence, so the shift
/// turns `c` (and everything above it) positive and nothing below. The
/// lowest confidence has no lower neighbour; it is passed by half the gap to
/// the next higher member confidence (or to 0 if there is none).
pub fn sdb_candidates(confs: &[f64], in_group: &[bool]) -> Vec<f64> {
    let mut values: Vec<f64> = confs
        .iter()
        .zip(in_group)
        .filter(|&(_, &g)| g)
        .map(|(&c, _)| c)
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let negatives = values.partition_point(|&c| c < 0.0);
    let mut out = Vec::with_capacity(negatives + 1);
    out.push(0.0);
    for i in (0..negatives).rev() {
        let c = values[i];
        let lambda = if i > 0 {
            -(values[i - 1] + (c - values[i - 1]) / 2.0)
        } else {
            let above = values.get(1).copied().unwrap_or(0.0);
            -c + (above - c) / 2.0
        };
        out.push(lambda);
    }
    out
}

fn check_inputs(confs: &[f64], labels: &[Label], protected: &[bool], epsilon: f64) -> Result<()> {
    if confs.len() != labels.len() || confs.len() != protected.len() {
        return Err(Error::InvalidArgument(format!(
            "lengths differ: {} confidences, {} labels, {} mask entries",
            confs.len(),
            labels.len(),
            protected.len()
        )));
    }
    if confs.iter().any(|c| c.is_nan()) {
        return Err(Error::InvalidArgument("confidence is NaN".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let n_prot = protected.iter().filter(|&&p| p).count();
    if n_prot == 0 || n_prot == protected.len() {
        return Err(Error::Degenerate(
            "shift fitting needs a non-empty protected group and complement".into(),
        ));
    }
    Ok(())
}

struct Search {
    feasible: Option<SdbFit>,
    closest: SdbFit,
}

fn search(confs: &[f64], labels: &[Label], protected: &[bool], epsilon: f64) -> Result<Search> {
    check_inputs(confs, labels, protected, epsilon)?;
    let base: Vec<Label> = confs.iter().map(|&c| sign(c)).collect();
    let group = if signed_bias(&base, protected) < 0.0 {
        ShiftGroup::Complement
    } else {
        ShiftGroup::Protected
    };
    let in_group: Vec<bool> = protected.iter().map(|&p| group.contains(p)).collect();
    let orientation = if group.swapped() { -1.0 } else { 1.0 };

    let n = confs.len();
    let n_group = in_group.iter().filter(|&&g| g).count();
    let n_rest = n - n_group;
    let rest_rate = (0..n).filter(|&i| !in_group[i] && base[i] == 1).count() as f64 / n_rest as f64;
    let mut group_pos = (0..n).filter(|&i| in_group[i] && base[i] == 1).count();
    let mut errors = (0..n).filter(|&i| base[i] != labels[i]).count();

    // group members predicted -1, highest confidence first
    let mut negatives: Vec<usize> = (0..n).filter(|&i| in_group[i] && base[i] == -1).collect();
    negatives.sort_by(|&a, &b| confs[b].total_cmp(&confs[a]));

    let candidates = sdb_candidates(confs, &in_group);
    let mut next = 0usize;
    let mut feasible: Option<SdbFit> = None;
    let mut closest: Option<SdbFit> = None;
    for &lambda in &candidates {
        while next < negatives.len() && confs[negatives[next]] >= -lambda {
            let i = negatives[next];
            group_pos += 1;
            if labels[i] == 1 {
                errors -= 1;
            } else {
                errors += 1;
            }
            next += 1;
        }
        let bias_group = rest_rate - group_pos as f64 / n_group as f64;
        let fit = SdbFit {
            lambda,
            group,
            error: errors as f64 / n as f64,
            bias: orientation * bias_group,
            feasible: bias_group.abs() <= epsilon + BIAS_SLACK,
            candidates: candidates.len(),
        };
        // strict comparisons keep the smallest lambda among ties
        if fit.feasible && feasible.is_none_or(|f| fit.error < f.error) {
            feasible = Some(fit);
        }
        let better = match closest {
            None => true,
            Some(c) => fit.bias.abs() < c.bias.abs() || (fit.bias.abs() == c.bias.abs() && fit.error < c.error),
        };
        if better {
            closest = Some(fit);
        }
    }
    Ok(Search {
        feasible,
        closest: closest.expect("candidate list always contains 0"),
    })
}

/// Minimal-error shift whose bias on the given data is within `epsilon`.
///
/// If the protected group is advantaged on this data (negative signed bias),
/// the complement is shifted instead and [`SdbFit::group`] records it.
pub fn fit_sdb(confs: &[f64], labels: &[Label], protected: &[bool], epsilon: f64) -> Result<SdbFit> {
    let s = search(confs, labels, protected, epsilon)?;
    s.feasible.ok_or(Error::InfeasibleShift {
        epsilon,
        best_lambda: s.closest.lambda,
        best_bias: s.closest.bias,
        best_error: s.closest.error,
    })
}

/// Like [`fit_sdb`], but when no candidate meets `epsilon` returns the
/// candidate with the smallest `|bias|` (then lowest error) with
/// `feasible = false` instead of failing.
pub fn fit_sdb_closest(confs: &[f64], labels: &[Label], protected: &[bool], epsilon: f64) -> Result<SdbFit> {
    let s = search(confs, labels, protected, epsilon)?;
    Ok(s.feasible.unwrap_or(s.closest))
}

/// A base model with its boundary shifted by `lambda` on one group.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedClassifier<'a> {
    pub base: &'a ConfidenceModel,
    pub lambda: f64,
    pub group: ShiftGroup,
}

impl ShiftedClassifier<'_> {
    pub fn predict(&self, x: &[f64], protected: bool) -> Label {
        let c = self.base.confidence(x);
        if self.group.contains(protected) {
            if c >= -self.lambda {
                1
            } else {
                -1
            }
        } else {
            sign(c)
        }
    }

    pub fn predictions(&self, ds: &Dataset) -> Result<Vec<Label>> {
        let confs = self.base.confidences(ds)?;
        Ok(shifted_predictions(&confs, ds.protected(), self.lambda, self.group))
    }
}

pub fn apply_sdb(model: &ConfidenceModel, lambda: f64, group: ShiftGroup) -> Result<ShiftedClassifier<'_>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("shift must be finite and >= 0, got {lambda}")));
    }
    Ok(ShiftedClassifier {
        base: model,
        lambda,
        group,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LinModel;

    #[test]
    fn flips_both_negatives_when_needed() {
        let confs = [-0.5, -0.2, 0.3, 0.4, 0.6];
        let labels = [1; 5];
        let protected = [true, true, true, false, false];
        let fit = fit_sdb(&confs, &labels, &protected, 0.05).unwrap();
        assert!(fit.lambda > 0.5);
        assert_eq!(fit.error, 0.0);
        assert_eq!(fit.bias, 0.0);
        let preds = shifted_predictions(&confs, &protected, fit.lambda, fit.group);
        assert_eq!(preds, vec![1; 5]);
    }

    #[test]
    fn fair_base_needs_no_shift() {
        let confs = [-0.5, 0.2, -0.1, 0.3];
        let labels = [-1, 1, -1, 1];
        let protected = [true, true, false, false];
        assert_eq!(fit_sdb(&confs, &labels, &protected, 0.0).unwrap().lambda, 0.0);
        let skewed = [-0.5, -0.2, 0.1, 0.3];
        // the base agrees with these labels, so no shift can lower the error
        let agree = [-1, -1, 1, 1];
        assert_eq!(fit_sdb(&skewed, &agree, &protected, 1.0).unwrap().lambda, 0.0);
    }

    #[test]
    fn candidates_are_midpoints_in_increasing_order() {
        let confs = [-0.6, -0.2, -0.2, 0.4, -5.0];
        let group = [true, true, true, true, false];
        let c = sdb_candidates(&confs, &group);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 0.4).abs() < 1e-15);
        assert!((c[2] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_inclusive() {
        let m = ConfidenceModel::Logreg(LinModel {
            weights: vec![1.0],
            intercept: 0.0,
            reg: 0.0,
            iterations: 0,
            gradient_norm: 0.0,
        });
        // logistic confidence of z is tanh(z/2); pick z so conf = -0.3 exactly
        let z = 2.0 * (-0.3f64).atanh();
        let c = m.confidence(&[z]);
        let h = apply_sdb(&m, -c, ShiftGroup::Protected).unwrap();
        assert_eq!(h.predict(&[z], true), 1);
        assert_eq!(h.predict(&[z], false), -1);
        assert!(apply_sdb(&m, -0.1, ShiftGroup::Protected).is_err());
    }

    #[test]
    fn infeasible_reports_best_candidate() {
        // three protected rows can only reach rates 0, 1/3, 2/3, 1
        let confs = [-0.9, -0.8, -0.7, 0.5, 0.5, -0.5, -0.5];
        let labels = [-1, -1, -1, 1, 1, -1, -1];
        let protected = [true, true, true, false, false, false, false];
        match fit_sdb(&confs, &labels, &protected, 0.0) {
            Err(Error::InfeasibleShift { best_bias, .. }) => assert!((best_bias.abs() - 1.0 / 6.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let closest = fit_sdb_closest(&confs, &labels, &protected, 0.0).unwrap();
        assert!(!closest.feasible);
        assert!((closest.bias.abs() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn advantaged_protected_group_is_mirrored() {
        let confs = [0.5, 0.4, -0.3, -0.6];
        let labels = [1, 1, 1, -1];
        let protected = [true, true, false, false];
        let fit = fit_sdb(&confs, &labels, &protected, 0.0).unwrap();
        assert_eq!(fit.group, ShiftGroup::Complement);
        assert_eq!(fit.bias, 0.0);
        let preds = shifted_predictions(&confs, &protected, fit.lambda, fit.group);
        assert_eq!(&preds[..2], &[1, 1]);
        assert_eq!(&preds[2..], &[1, 1]);
    }

    #[test]
    fn rejects_one_sided_masks() {
        assert!(fit_sdb(&[0.1, -0.1], &[1, -1], &[true, true], 0.0).is_err());
        assert!(fit_sdb(&[0.1], &[1, -1], &[true, false], 0.0).is_err());
    }
}
