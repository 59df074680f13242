//! AdaBoost over decision stumps.

use serde::{Deserialize, Serialize};

use super::stump::{Stump, StumpSearch};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_ROUNDS: usize = 20;
const EPS_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedStump {
    pub alpha: f64,
    pub stump: Stump,
    /// Weighted error of the stump under its round's distribution, unclamped.
    pub weighted_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub rounds: Vec<WeightedStump>,
    pub total_alpha: f64,
    /// Weight of the weak learner's bias penalty; 0 for plain AdaBoost.
    #[serde(default)]
    pub bias_weight: f64,
    pub n_features: usize,
}

impl BoostModel {
    /// Weighted vote ratio `sum(alpha h(x)) / sum(alpha)`, in `[-1, 1]`.
    pub fn confidence(&self, x: &[f64]) -> f64 {
        if self.total_alpha <= 0.0 {
            return 0.0;
        }
        let vote: f64 = self
            .rounds
            .iter()
            .map(|r| r.alpha * f64::from(r.stump.predict(x)))
            .sum();
        (vote / self.total_alpha).clamp(-1.0, 1.0)
    }

    /// `prod_t 2 sqrt(eps_t (1 - eps_t))`, the AdaBoost bound on training error.
    pub fn training_error_bound(&self) -> f64 {
        self.rounds
            .iter()
            .map(|r| 2.0 * (r.weighted_error * (1.0 - r.weighted_error)).sqrt())
            .product()
    }
}

/// Plain AdaBoost for `rounds` rounds.
pub fn train_adaboost(ds: &Dataset, rounds: usize) -> Result<BoostModel> {
    train_boosting(ds, rounds, 0.0)
}

/// AdaBoost whose weak learner minimizes `weighted error + bias_weight * |bias|`.
///
/// Round weights still come from the weighted error alone:
/// `alpha = ln((1 - eps) / eps) / 2` with `eps` clamped to `[1e-10, 1 - 1e-10]`.
/// Training stops early after a round whose stump has zero weighted error.
pub fn train_boosting(ds: &Dataset, rounds: usize, bias_weight: f64) -> Result<BoostModel> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("boosting needs at least one round".into()));
    }
    if !(bias_weight >= 0.0) {
        return Err(Error::InvalidArgument(format!("bias weight must be >= 0, got {bias_weight}")));
    }
    let n = ds.n();
    let positives = ds.positive_count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate("boosting needs both labels present".into()));
    }
    let search = StumpSearch::new(ds)?;
    let labels = ds.labels();
    let mut weights = vec![1.0 / n as f64; n];
    let mut out = Vec::with_capacity(rounds);
    let mut preds = vec![0i8; n];

    for _ in 0..rounds {
        let fit = search.best(&weights, bias_weight)?;
        let eps = fit.weighted_error.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        out.push(WeightedStump {
            alpha,
            stump: fit.stump,
            weighted_error: fit.weighted_error,
        });
        if fit.weighted_error == 0.0 {
            break;
        }
        for (i, p) in preds.iter_mut().enumerate() {
            *p = fit.stump.predict(ds.row(i));
        }
        let mut total = 0.0;
        for ((w, &y), &p) in weights.iter_mut().zip(labels).zip(&preds) {
            *w *= (-alpha * f64::from(y) * f64::from(p)).exp();
            total += *w;
        }
        for w in &mut weights {
            *w /= total;
        }
    }

    let total_alpha = out.iter().map(|r| r.alpha).sum();
    Ok(BoostModel {
        rounds: out,
        total_alpha,
        bias_weight,
        n_features: ds.d(),
    })
}
