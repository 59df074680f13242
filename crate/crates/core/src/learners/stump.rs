//! Exhaustive decision-stump search.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};

/// Axis-aligned threshold rule: `polarity` when `x[feature] > threshold`,
/// `-polarity` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: Label,
}

impl Stump {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> Label {
        if x[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpFit {
    pub stump: Stump,
    pub weighted_error: f64,
    /// Unweighted signed bias of the stump's predictions on the search set.
    pub bias: f64,
    pub objective: f64,
}

/// Searches all (feature, midpoint threshold, polarity) triples of a fixed
/// dataset. Column orderings are computed once and reused across calls.
pub struct StumpSearch<'a> {
    ds: &'a Dataset,
    orders: Vec<Vec<u32>>,
    n_protected: usize,
}

impl<'a> StumpSearch<'a> {
    pub fn new(ds: &'a Dataset) -> Result<Self> {
        if ds.n() == 0 {
            return Err(Error::Degenerate("stump search on an empty dataset".into()));
        }
        let x = ds.features();
        let orders = (0..ds.d())
            .map(|j| {
                let mut idx: Vec<u32> = (0..ds.n() as u32).collect();
                idx.sort_by(|&a, &b| x.get(a as usize, j).total_cmp(&x.get(b as usize, j)));
                idx
            })
            .collect();
        Ok(Self {
            ds,
            orders,
            n_protected: ds.protected_count(),
        })
    }

    /// Minimizes `weighted error + bias_weight * |bias|`.
    ///
    /// Ties go to the lowest feature index, then the lowest threshold, then
    /// polarity +1.
    pub fn best(&self, weights: &[f64], bias_weight: f64) -> Result<StumpFit> {
        let ds = self.ds;
        let n = ds.n();
        if weights.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {n} examples",
                weights.len()
            )));
        }
        let labels = ds.labels();
        let protected = ds.protected();
        let x = ds.features();
        let (w_pos, w_neg) = labels.iter().zip(weights).fold((0.0, 0.0), |(p, q), (&y, &w)| {
            if y == 1 {
                (p + w, q)
            } else {
                (p, q + w)
            }
        });
        let n_prot = self.n_protected;
        let n_rest = n - n_prot;
        let has_groups = n_prot > 0 && n_rest > 0;

        let mut best: Option<(Stump, f64, f64)> = None;
        for (j, order) in self.orders.iter().enumerate() {
            let mut left_pos = 0.0;
            let mut left_neg = 0.0;
            let mut left_prot = 0usize;
            for k in 0..n - 1 {
                let i = order[k] as usize;
                if labels[i] == 1 {
                    left_pos += weights[i];
                } else {
                    left_neg += weights[i];
                }
                left_prot += usize::from(protected[i]);
                let here = x.get(i, j);
                let next = x.get(order[k + 1] as usize, j);
                if here >= next {
                    continue;
                }
                let threshold = here + (next - here) / 2.0;
                // polarity +1 predicts +1 right of the threshold
                let bias_plus = if has_groups {
                    let left_rest = k + 1 - left_prot;
                    (n_rest - left_rest) as f64 / n_rest as f64
                        - (n_prot - left_prot) as f64 / n_prot as f64
                } else {
                    0.0
                };
                let penalty = bias_weight * bias_plus.abs();
                for (polarity, err, bias) in [
                    (1, left_pos + (w_neg - left_neg), bias_plus),
                    (-1, left_neg + (w_pos - left_pos), -bias_plus),
                ] {
                    let objective = err + penalty;
                    if best.as_ref().is_none_or(|&(_, o, _)| objective < o) {
                        best = Some((
                            Stump {
                                feature: j,
                                threshold,
                                polarity,
                            },
                            objective,
                            bias,
                        ));
                    }
                }
            }
        }
        let (stump, _, bias) = best.ok_or_else(|| {
            Error::Degenerate("every feature is constant; no stump threshold exists".into())
        })?;
        // Recompute the error directly; the incremental sums drift.
        let weighted_error: f64 = (0..n)
            .filter(|&i| stump.predict(x.row(i)) != labels[i])
            .map(|i| weights[i])
            .sum();
        Ok(StumpFit {
            stump,
            weighted_error,
            bias,
            objective: weighted_error + bias_weight * bias.abs(),
        })
    }
}

/// Minimum weighted 0/1 error stump. `weights` must be non-negative and sum to 1.
pub fn train_stump(ds: &Dataset, weights: &[f64]) -> Result<Stump> {
    check_distribution(weights, ds.n())?;
    Ok(StumpSearch::new(ds)?.best(weights, 0.0)?.stump)
}

pub(crate) fn check_distribution(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidArgument(format!("{} weights for {n} examples", weights.len())));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}
