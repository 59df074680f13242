use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// Fractions of rows assigned to train, model selection and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub model_select: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.5,
            model_select: 0.25,
            test: 0.25,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, model_select: f64, test: f64) -> Result<Self> {
        let r = Self {
            train,
            model_select,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.model_select, self.test];
        if all.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::Split(format!("ratios must be positive, got {all:?}")));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("ratios must sum to 1, got {all:?}")));
        }
        Ok(())
    }

    /// Row counts for `n` rows: train and model-select sizes are floored,
    /// test takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
        let train = floor(self.train).min(n);
        let model_select = floor(self.model_select).min(n - train);
        (train, model_select, n - train - model_select)
    }
}

/// Per-column affine standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<usize>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits mean and sample standard deviation (n - 1 denominator) of the
    /// numeric feature columns. Constant columns get scale 1.
    pub fn fit(ds: &Dataset) -> Self {
        let columns: Vec<usize> = ds
            .feature_info()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_numeric())
            .map(|(j, _)| j)
            .collect();
        let n = ds.n() as f64;
        let mut means = Vec::with_capacity(columns.len());
        let mut scales = Vec::with_capacity(columns.len());
        for &j in &columns {
            let mean = ds.features().column(j).sum::<f64>() / n;
            let ss: f64 = ds.features().column(j).map(|v| (v - mean).powi(2)).sum();
            let sd = if ds.n() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
            means.push(mean);
            scales.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
        }
        Self {
            columns,
            means,
            scales,
        }
    }

    pub fn apply(&self, ds: &mut Dataset) {
        for ((&j, &m), &s) in self.columns.iter().zip(&self.means).zip(&self.scales) {
            ds.features_mut().map_column(j, |v| (v - m) / s);
        }
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((&j, &m), &s) in self.columns.iter().zip(&self.means).zip(&self.scales) {
            row[j] = (row[j] - m) / s;
        }
    }
}

/// Disjoint train / model-selection / test partition of a dataset.
#[derive(Debug, Clone)]
pub struct SplitTriple {
    pub train: Dataset,
    pub model_select: Dataset,
    pub test: Dataset,
    /// Row indices into the source dataset, ascending within each part.
    pub train_rows: Vec<usize>,
    pub model_select_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    pub ratios: SplitRatios,
    pub standardizer: Standardizer,
}

/// Uniform random partition; numeric columns are standardized with
/// statistics of the training part.
pub fn split(ds: &Dataset, ratios: SplitRatios, seed: u64) -> Result<SplitTriple> {
    ratios.validate()?;
    let (n_train, n_ms, n_test) = ratios.sizes(ds.n());
    if n_train == 0 || n_ms == 0 || n_test == 0 {
        return Err(Error::Split(format!(
            "{} rows with ratios {:?} leave an empty part ({n_train}, {n_ms}, {n_test})",
            ds.n(),
            [ratios.train, ratios.model_select, ratios.test]
        )));
    }
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut train_rows = order[..n_train].to_vec();
    let mut model_select_rows = order[n_train..n_train + n_ms].to_vec();
    let mut test_rows = order[n_train + n_ms..].to_vec();
    train_rows.sort_unstable();
    model_select_rows.sort_unstable();
    test_rows.sort_unstable();

    let mut train = ds.subset(&train_rows);
    let mut model_select = ds.subset(&model_select_rows);
    let mut test = ds.subset(&test_rows);
    let standardizer = Standardizer::fit(&train);
    standardizer.apply(&mut train);
    standardizer.apply(&mut model_select);
    standardizer.apply(&mut test);

    Ok(SplitTriple {
        train,
        model_select,
        test,
        train_rows,
        model_select_rows,
        test_rows,
        seed,
        ratios,
        standardizer,
    })
}
