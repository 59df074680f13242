//! Random relabeling of predictions and random massaging of training labels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::metrics::signed_bias;
use crate::seed;

/// Flip probability that zeroes the expected bias of `labels`.
///
/// `p = bias / (fraction of the protected group labeled -1)`, clamped to
/// `[0, 1]`. A non-positive bias gives `p = 0`.
pub fn fit_rr(labels: &[Label], protected: &[bool]) -> Result<f64> {
    if labels.len() != protected.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} mask entries",
            labels.len(),
            protected.len()
        )));
    }
    let bias = signed_bias(labels, protected);
    if bias <= 0.0 {
        return Ok(0.0);
    }
    let n_prot = protected.iter().filter(|&&p| p).count();
    let prot_neg = labels.iter().zip(protected).filter(|&(&l, &p)| p && l == -1).count();
    if prot_neg == 0 {
        return Err(Error::NoProtectedNegatives { bias });
    }
    Ok((bias / (prot_neg as f64 / n_prot as f64)).clamp(0.0, 1.0))
}

/// Randomized post-processor that turns protected `-1` predictions into `+1`
/// with probability `p`.
///
/// One uniform draw is consumed per protected `-1` entry, in row order, from
/// a generator seeded with `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizedRelabeler {
    pub p: f64,
    pub seed: u64,
}

impl RandomizedRelabeler {
    pub fn apply(&self, predictions: &[Label], protected: &[bool]) -> Vec<Label> {
        let mut rng = seed::rng(self.seed);
        predictions
            .iter()
            .zip(protected)
            .map(|(&l, &p)| {
                if p && l == -1 && rng.random::<f64>() < self.p {
                    1
                } else {
                    l
                }
            })
            .collect()
    }
}

pub fn apply_rr(p: f64, seed: u64) -> Result<RandomizedRelabeler> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("flip probability must be in [0, 1], got {p}")));
    }
    Ok(RandomizedRelabeler { p, seed })
}

/// Copy of `train` whose protected `-1` labels are flipped to `+1` with the
/// probability that gives zero expected bias on the training labels.
pub fn rm_massage(train: &Dataset, seed: u64) -> Result<Dataset> {
    let bias = signed_bias(train.labels(), train.protected());
    if bias < 0.0 {
        return Err(Error::NegativeBias(bias));
    }
    let p = fit_rr(train.labels(), train.protected())?;
    if p == 0.0 {
        return Ok(train.clone());
    }
    let labels = RandomizedRelabeler { p, seed }.apply(train.labels(), train.protected());
    train.with_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_rates_give_expected_p() {
        // 10000 protected rows at 10.93% positive, 10000 others at 30.38%
        let mut labels = Vec::new();
        let mut protected = Vec::new();
        for i in 0..10000 {
            labels.push(if i < 1093 { 1 } else { -1 });
            protected.push(true);
        }
        for i in 0..10000 {
            labels.push(if i < 3038 { 1 } else { -1 });
            protected.push(false);
        }
        let p = fit_rr(&labels, &protected).unwrap();
        let expected = (0.3038 - 0.1093) / (1.0 - 0.1093);
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 0.2184).abs() < 5e-5);
    }

    #[test]
    fn zero_bias_and_full_flip() {
        assert_eq!(fit_rr(&[1, -1, 1, -1], &[true, true, false, false]).unwrap(), 0.0);
        assert_eq!(fit_rr(&[-1, -1, 1, 1], &[true, true, false, false]).unwrap(), 1.0);
        // advantaged protected group
        assert_eq!(fit_rr(&[1, 1, -1, 1], &[true, true, false, false]).unwrap(), 0.0);
    }

    #[test]
    fn extreme_probabilities() {
        let preds = [-1, 1, -1, -1, 1];
        let prot = [true, true, false, true, true];
        assert_eq!(apply_rr(0.0, 3).unwrap().apply(&preds, &prot), preds.to_vec());
        assert_eq!(apply_rr(1.0, 3).unwrap().apply(&preds, &prot), vec![1, 1, -1, 1, 1]);
        assert!(apply_rr(1.5, 3).is_err());
    }

    #[test]
    fn half_flip_rate_concentrates() {
        let preds = vec![-1; 10000];
        let prot = vec![true; 10000];
        let out = apply_rr(0.5, 11).unwrap().apply(&preds, &prot);
        let flipped = out.iter().filter(|&&l| l == 1).count() as f64 / 10000.0;
        assert!((flipped - 0.5).abs() <= 0.02, "{flipped}");
        assert_eq!(out, apply_rr(0.5, 11).unwrap().apply(&preds, &prot));
    }

    #[test]
    fn massage_reaches_parity_and_only_raises_labels() {
        let n = 20000;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let protected: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let labels: Vec<Label> = (0..n)
            .map(|i| if (i % 2 == 0 && i % 10 == 0) || (i % 2 == 1 && i % 6 == 1) { 1 } else { -1 })
            .collect();
        let ds = Dataset::from_rows(&rows, labels, protected).unwrap();
        assert!(signed_bias(ds.labels(), ds.protected()) > 0.1);
        let m = rm_massage(&ds, 5).unwrap();
        assert!(signed_bias(m.labels(), m.protected()).abs() <= 0.02);
        for i in 0..n {
            let (before, after) = (ds.labels()[i], m.labels()[i]);
            if before != after {
                assert!(ds.protected()[i] && before == -1 && after == 1);
            }
        }
    }

    #[test]
    fn massage_of_fair_data_is_identity() {
        let ds = Dataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1, -1, 1, -1],
            vec![true, true, false, false],
        )
        .unwrap();
        assert_eq!(rm_massage(&ds, 1).unwrap(), ds);
        let flipped = ds.with_protected(vec![false, false, true, true]).unwrap();
        let adv = flipped.with_labels(vec![-1, -1, 1, 1]).unwrap();
        assert!(matches!(rm_massage(&adv, 1), Err(Error::NegativeBias(_))));
    }
}
