//! Label error, statistical-parity bias, resilience to random bias, and
//! margin diagnostics.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dataset::{inject_random_bias, split, BiasedDataset, Dataset, Label, SplitRatios, SplitTriple};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// `P[+1 | not protected] - P[+1 | protected]`.
///
/// Positive values mean the protected group receives fewer positive
/// outcomes. An empty group or complement yields 0.
pub fn signed_bias(predictions: &[Label], protected: &[bool]) -> f64 {
    debug_assert_eq!(predictions.len(), protected.len());
    let (mut n_prot, mut pos_prot, mut n_rest, mut pos_rest) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &s) in predictions.iter().zip(protected) {
        if s {
            n_prot += 1;
            pos_prot += usize::from(p == 1);
        } else {
            n_rest += 1;
            pos_rest += usize::from(p == 1);
        }
    }
    if n_prot == 0 || n_rest == 0 {
        warn!("bias requested with an empty group ({n_prot} protected, {n_rest} other); reporting 0");
        return 0.0;
    }
    pos_rest as f64 / n_rest as f64 - pos_prot as f64 / n_prot as f64
}

pub fn label_error(predictions: &[Label], labels: &[Label]) -> f64 {
    debug_assert_eq!(predictions.len(), labels.len());
    if labels.is_empty() {
        return 0.0;
    }
    let wrong = predictions.iter().zip(labels).filter(|(p, l)| p != l).count();
    wrong as f64 / labels.len() as f64
}

/// Sign rule shared by every learner: confidence 0 predicts +1.
#[inline]
pub fn sign(conf: f64) -> Label {
    if conf >= 0.0 {
        1
    } else {
        -1
    }
}

/// Metrics of one classifier on one evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub error: f64,
    pub bias: f64,
    pub n: usize,
    pub protected: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rrb: Option<f64>,
}

impl EvalResult {
    pub fn evaluate(predictions: &[Label], ds: &Dataset) -> Self {
        Self {
            error: label_error(predictions, ds.labels()),
            bias: signed_bias(predictions, ds.protected()),
            n: ds.n(),
            protected: ds.protected_count(),
            rrb: None,
        }
    }
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Empirical CDF of the margins `y * conf` at each threshold.
pub fn margin_distribution(confs: &[f64], labels: &[Label], thetas: &[f64]) -> Result<Vec<f64>> {
    if confs.len() != labels.len() {
        return Err(Error::InvalidArgument("confidences and labels differ in length".into()));
    }
    if thetas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("thresholds must be sorted ascending".into()));
    }
    let mut margins: Vec<f64> = confs.iter().zip(labels).map(|(&c, &y)| f64::from(y) * c).collect();
    margins.sort_by(f64::total_cmp);
    let n = margins.len() as f64;
    Ok(thetas
        .iter()
        .map(|&t| {
            if margins.is_empty() {
                return 0.0;
            }
            margins.partition_point(|&m| m <= t) as f64 / n
        })
        .collect())
}

/// Empirical probability terms of the margin bound for a shifted classifier.
///
/// The region is the set of protected examples with `-lambda <= conf <= -theta`,
/// i.e. those whose prediction the shift flips with a margin of at least theta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftRegionTerms {
    pub lambda: f64,
    pub theta: f64,
    pub region_count: usize,
    pub sample_count: usize,
    /// Fraction of the sample inside the region.
    pub region_fraction: f64,
    /// Within the region, fraction with `y * conf >= -theta`.
    pub region_margin_above: f64,
    /// Outside the region, fraction with `y * conf <= theta`.
    pub rest_margin_below: f64,
    /// `region_margin_above * region_fraction + rest_margin_below * (1 - region_fraction)`.
    pub combined: f64,
}

pub fn shift_region_terms(
    confs: &[f64],
    labels: &[Label],
    protected: &[bool],
    lambda: f64,
    theta: f64,
) -> ShiftRegionTerms {
    let mut region = 0usize;
    let mut region_above = 0usize;
    let mut rest_below = 0usize;
    for ((&c, &y), &s) in confs.iter().zip(labels).zip(protected) {
        let margin = f64::from(y) * c;
        if s && -lambda <= c && c <= -theta {
            region += 1;
            region_above += usize::from(margin >= -theta);
        } else {
            rest_below += usize::from(margin <= theta);
        }
    }
    let n = confs.len();
    let rest = n - region;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let region_fraction = ratio(region, n);
    let region_margin_above = ratio(region_above, region);
    let rest_margin_below = ratio(rest_below, rest);
    ShiftRegionTerms {
        lambda,
        theta,
        region_count: region,
        sample_count: n,
        region_fraction,
        region_margin_above,
        rest_margin_below,
        combined: region_margin_above * region_fraction + rest_margin_below * (1.0 - region_fraction),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub count: usize,
    pub mislabeled: usize,
}

/// Equal-width histogram of confidences over `[lo, hi]`, with a second count
/// for misclassified examples. Values outside the range go to the end bins.
pub fn confidence_histogram(confs: &[f64], labels: &[Label], bins: usize, lo: f64, hi: f64) -> Vec<HistogramBin> {
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            left: lo + b as f64 * width,
            count: 0,
            mislabeled: 0,
        })
        .collect();
    if bins == 0 {
        return out;
    }
    for (&c, &y) in confs.iter().zip(labels) {
        let b = (((c - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        out[b].count += 1;
        out[b].mislabeled += usize::from(sign(c) != y);
    }
    out
}

/// A training-plus-fairness procedure evaluated by [`rrb_estimate`].
///
/// Implementations train on `split.train` (whose labels are the biased ones
/// and whose protected mask is the synthetic group), may use
/// `split.model_select`, and return one prediction per `split.test` row.
pub trait Pipeline: Sync {
    fn fit_predict(&self, split: &SplitTriple, seed: u64) -> Result<Vec<Label>>;
}

impl<F> Pipeline for F
where
    F: Fn(&SplitTriple, u64) -> Result<Vec<Label>> + Sync,
{
    fn fit_predict(&self, split: &SplitTriple, seed: u64) -> Result<Vec<Label>> {
        self(split, seed)
    }
}

/// Fraction of test rows in the synthetic group with original label +1
/// that are predicted +1.
pub fn rrb_score(test_predictions: &[Label], test_rows: &[usize], biased: &BiasedDataset) -> Result<f64> {
    let original = biased.base.labels();
    let mut eligible = 0usize;
    let mut recovered = 0usize;
    for (&p, &row) in test_predictions.iter().zip(test_rows) {
        if biased.bits[row] == 0 && original[row] == 1 {
            eligible += 1;
            recovered += usize::from(p == 1);
        }
    }
    if eligible == 0 {
        return Err(Error::NoEligibleRows);
    }
    Ok(recovered as f64 / eligible as f64)
}

/// One resilience trial on an already biased dataset.
pub fn rrb_trial(
    pipeline: &dyn Pipeline,
    biased: &BiasedDataset,
    ratios: SplitRatios,
    split_seed: u64,
    pipeline_seed: u64,
) -> Result<f64> {
    let learn = biased.learning_dataset()?;
    let parts = split(&learn, ratios, split_seed)?;
    let preds = pipeline.fit_predict(&parts, pipeline_seed)?;
    if preds.len() != parts.test.n() {
        return Err(Error::InvalidArgument(format!(
            "pipeline returned {} predictions for {} test rows",
            preds.len(),
            parts.test.n()
        )));
    }
    rrb_score(&preds, &parts.test_rows, biased)
}

/// Monte Carlo estimate of the resilience to random bias at rate `eta`.
///
/// Trial `t` injects fresh bias into the full dataset, splits it, runs the
/// pipeline on the biased training labels, and scores recovery of the
/// original positive labels on the test part.
pub fn rrb_estimate(
    pipeline: &dyn Pipeline,
    ds: &Dataset,
    eta: f64,
    trials: usize,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Stat> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut values = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let trial_seed = seed::derive(seed, Stream::Trial, t);
        let biased = inject_random_bias(ds, eta, seed::derive(trial_seed, Stream::BiasInjection, 0))?;
        values.push(rrb_trial(
            pipeline,
            &biased,
            ratios,
            seed::derive(trial_seed, Stream::Split, 0),
            trial_seed,
        )?);
    }
    Ok(Stat::from_values(&values))
}
