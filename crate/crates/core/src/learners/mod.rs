//! Confidence-producing classifiers.
//!
//! Every model maps a feature row to a signed confidence; the prediction is
//! its sign, with a confidence of exactly 0 predicting +1.

mod boost;
mod logreg;
mod stump;
mod svm;

pub use boost::{train_adaboost, train_boosting, BoostModel, WeightedStump, DEFAULT_ROUNDS};
pub use logreg::{
    gradient as logreg_gradient, logistic_confidence, objective as logreg_objective, train_logreg, LinModel,
    DEFAULT_REG, DEFAULT_TOL,
};
pub use stump::{train_stump, Stump, StumpFit, StumpSearch};
pub use svm::{scale_gamma, train_svm, train_svm_with, Kernel, SvmModel, SvmParams};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix, Label};
use crate::error::{Error, Result};
use crate::metrics::sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Boost,
    Svm,
    Logreg,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::Boost, LearnerKind::Svm, LearnerKind::Logreg];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Boost => "boost",
            LearnerKind::Svm => "svm",
            LearnerKind::Logreg => "logreg",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boost" | "adaboost" => Ok(LearnerKind::Boost),
            "svm" => Ok(LearnerKind::Svm),
            "logreg" | "lr" => Ok(LearnerKind::Logreg),
            other => Err(Error::InvalidArgument(format!("unknown learner '{other}'"))),
        }
    }
}

/// A trained model of any of the three kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConfidenceModel {
    Boost(BoostModel),
    Svm(SvmModel),
    Logreg(LinModel),
}

impl ConfidenceModel {
    pub fn kind(&self) -> LearnerKind {
        match self {
            ConfidenceModel::Boost(_) => LearnerKind::Boost,
            ConfidenceModel::Svm(_) => LearnerKind::Svm,
            ConfidenceModel::Logreg(_) => LearnerKind::Logreg,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ConfidenceModel::Boost(m) => m.n_features,
            ConfidenceModel::Svm(m) => m.n_features,
            ConfidenceModel::Logreg(m) => m.n_features(),
        }
    }

    pub fn confidence(&self, x: &[f64]) -> f64 {
        match self {
            ConfidenceModel::Boost(m) => m.confidence(x),
            ConfidenceModel::Svm(m) => m.confidence(x),
            ConfidenceModel::Logreg(m) => m.confidence(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        sign(self.confidence(x))
    }

    pub fn confidences_of(&self, x: &FeatureMatrix) -> Vec<f64> {
        match self {
            ConfidenceModel::Svm(m) => m.confidences(x),
            _ => (0..x.n_rows()).into_par_iter().map(|i| self.confidence(x.row(i))).collect(),
        }
    }

    /// Confidences for every row of `ds`; errors if the feature counts differ.
    pub fn confidences(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.check_features(ds.d())?;
        Ok(self.confidences_of(ds.features()))
    }

    pub fn predictions(&self, ds: &Dataset) -> Result<Vec<Label>> {
        Ok(self.confidences(ds)?.into_iter().map(sign).collect())
    }

    pub fn check_features(&self, d: usize) -> Result<()> {
        if d != self.n_features() {
            return Err(Error::Model(format!(
                "model expects {} features, data has {d}",
                self.n_features()
            )));
        }
        Ok(())
    }
}

impl From<BoostModel> for ConfidenceModel {
    fn from(m: BoostModel) -> Self {
        ConfidenceModel::Boost(m)
    }
}

impl From<SvmModel> for ConfidenceModel {
    fn from(m: SvmModel) -> Self {
        ConfidenceModel::Svm(m)
    }
}

impl From<LinModel> for ConfidenceModel {
    fn from(m: LinModel) -> Self {
        ConfidenceModel::Logreg(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_round_trips_through_strings() {
        for k in LearnerKind::ALL {
            assert_eq!(k.as_str().parse::<LearnerKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{k}\""));
        }
        assert!("tree".parse::<LearnerKind>().is_err());
    }

    #[test]
    fn zero_confidence_predicts_positive() {
        let m = ConfidenceModel::Logreg(LinModel {
            weights: vec![1.0],
            intercept: 0.0,
            reg: 0.0,
            iterations: 0,
            gradient_norm: 0.0,
        });
        assert_eq!(m.confidence(&[0.0]), 0.0);
        assert_eq!(m.predict(&[0.0]), 1);
        assert_eq!(m.predict(&[-0.1]), -1);
    }

    #[test]
    fn model_json_is_tagged() {
        let m = ConfidenceModel::Logreg(LinModel {
            weights: vec![0.5, -2.0],
            intercept: 0.25,
            reg: 1e-4,
            iterations: 3,
            gradient_norm: 1e-9,
        });
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"kind\":\"logreg\""));
        let back: ConfidenceModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn feature_count_is_checked() {
        let ds = Dataset::from_rows(&[vec![0.0, 1.0]], vec![1], vec![false]).unwrap();
        let m = ConfidenceModel::Logreg(LinModel {
            weights: vec![1.0],
            intercept: 0.0,
            reg: 0.0,
            iterations: 0,
            gradient_norm: 0.0,
        });
        assert!(m.confidences(&ds).is_err());
    }
}
