//! Boosting with a bias-aware weak learner.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::learners::{train_boosting, BoostModel};

pub const DEFAULT_BIAS_WEIGHT: f64 = 1.0;

/// AdaBoost whose stumps minimize weighted error plus the absolute
/// (unweighted) bias of their predictions on `train`.
pub fn train_fwl_adaboost(train: &Dataset, rounds: usize) -> Result<BoostModel> {
    train_fwl_with(train, rounds, DEFAULT_BIAS_WEIGHT)
}

pub fn train_fwl_with(train: &Dataset, rounds: usize, bias_weight: f64) -> Result<BoostModel> {
    train_boosting(train, rounds, bias_weight)
}
