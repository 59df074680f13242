//! Trained models as versioned JSON documents.
//!
//! A document holds everything needed to score new rows of the same
//! dataset: the learner, the fitted post-processing step, the one-hot
//! feature layout and the standardization fitted on the training split.

use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig, FitSplit};
use super::run::{fit_base_model, ordinal, train_learner};
use crate::dataset::{split, Dataset, Label, SplitRatios, SplitTriple, Standardizer};
use crate::error::{Error, Result};
use crate::fairness::{
    apply_rr, fit_rr, fit_sdb_closest, rm_massage, shifted_predictions, train_fwl_with, FairnessMethod, ShiftGroup,
};
use crate::learners::{ConfidenceModel, LearnerKind};
use crate::metrics::{sign, EvalResult};
use crate::seed::{self, Stream};

pub const FORMAT_VERSION: u32 = 1;

/// Post-processing applied on top of the model's confidences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum PostProcess {
    None,
    Sdb {
        lambda: f64,
        group: ShiftGroup,
        /// False when no shift met the tolerance and the closest one was kept.
        feasible: bool,
        epsilon: f64,
    },
    Rr {
        p: f64,
        seed: u64,
    },
    /// The model was trained on massaged labels; scoring is plain.
    Rm {
        massage_seed: u64,
    },
    /// The model is fair-weak-learning boosting; scoring is plain.
    Fwl {
        bias_weight: f64,
    },
}

impl PostProcess {
    pub fn method(&self) -> FairnessMethod {
        match self {
            PostProcess::None => FairnessMethod::None,
            PostProcess::Sdb { .. } => FairnessMethod::Sdb,
            PostProcess::Rr { .. } => FairnessMethod::Rr,
            PostProcess::Rm { .. } => FairnessMethod::Rm,
            PostProcess::Fwl { .. } => FairnessMethod::Fwl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub name: String,
    pub schema: String,
    pub learner: LearnerKind,
    pub post: PostProcess,
    pub model: ConfidenceModel,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub split: SplitRatios,
    pub split_seed: u64,
    pub trial_seed: u64,
    pub fit_split: FitSplit,
    /// Smallest and largest confidence seen on the training split.
    pub confidence_range: [f64; 2],
}

/// Trains one grid cell on the split of trial `trial` (0-based), exactly as
/// the experiment runner does, and keeps the result.
pub fn train_document(cfg: &ExperimentConfig, ds: &Dataset, cell: Cell, trial: usize) -> Result<ModelDocument> {
    cfg.validate()?;
    let trial_seed = seed::derive(cfg.seed, Stream::Trial, trial as u64);
    let split_seed = seed::derive(trial_seed, Stream::Split, 0);
    let parts = split(ds, cfg.split, split_seed)?;
    let fit = match cfg.fairness.fit_split {
        FitSplit::Train => &parts.train,
        FitSplit::ModelSelect => &parts.model_select,
    };
    let kind = cell.learner;
    let (model, post) = match cell.method {
        FairnessMethod::None => (fit_base_model(cfg, kind, &parts, trial_seed)?, PostProcess::None),
        FairnessMethod::Sdb => {
            let model = fit_base_model(cfg, kind, &parts, trial_seed)?;
            let confs = model.confidences(fit)?;
            let f = fit_sdb_closest(&confs, fit.labels(), fit.protected(), cfg.fairness.epsilon)?;
            let post = PostProcess::Sdb {
                lambda: f.lambda,
                group: f.group,
                feasible: f.feasible,
                epsilon: cfg.fairness.epsilon,
            };
            (model, post)
        }
        FairnessMethod::Rr => {
            let model = fit_base_model(cfg, kind, &parts, trial_seed)?;
            let preds = model.predictions(fit)?;
            let p = fit_rr(&preds, fit.protected())?;
            let post = PostProcess::Rr {
                p,
                seed: seed::derive(trial_seed, Stream::Relabel, ordinal(kind)),
            };
            (model, post)
        }
        FairnessMethod::Rm => {
            let massage_seed = seed::derive(trial_seed, Stream::Massage, ordinal(kind));
            let massaged = rm_massage(&parts.train, massage_seed)?;
            let model = train_learner(
                &cfg.learners,
                kind,
                &massaged,
                seed::derive(trial_seed, Stream::Subsample, ordinal(kind)),
            )?;
            (model, PostProcess::Rm { massage_seed })
        }
        FairnessMethod::Fwl => {
            if kind != LearnerKind::Boost {
                return Err(Error::Config("fwl needs the boost learner".into()));
            }
            let w = cfg.fairness.fwl_bias_weight;
            let model = train_fwl_with(&parts.train, cfg.learners.boost.rounds, w)?;
            (model.into(), PostProcess::Fwl { bias_weight: w })
        }
    };
    let train_confs = model.confidences(&parts.train)?;
    let lo = train_confs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = train_confs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ModelDocument {
        format_version: FORMAT_VERSION,
        name: cfg.name(),
        schema: cfg.dataset.schema.clone(),
        learner: kind,
        post,
        model,
        feature_names: ds.feature_names(),
        standardizer: parts.standardizer.clone(),
        split: cfg.split,
        split_seed,
        trial_seed,
        fit_split: cfg.fairness.fit_split,
        confidence_range: [lo, hi],
    })
}

impl ModelDocument {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        match v.get("format_version").and_then(|x| x.as_u64()) {
            Some(n) if n == FORMAT_VERSION as u64 => {}
            Some(n) => return Err(Error::Model(format!("unsupported format_version {n}"))),
            None => return Err(Error::Model("missing format_version".into())),
        }
        let doc: Self = serde_json::from_value(v)?;
        doc.model.check_features(doc.feature_names.len())?;
        Ok(doc)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    fn check_layout(&self, raw: &Dataset) -> Result<()> {
        let names = raw.feature_names();
        if names != self.feature_names {
            return Err(Error::Model(format!(
                "feature layout differs from the training data ({} vs {} columns)",
                names.len(),
                self.feature_names.len()
            )));
        }
        Ok(())
    }

    /// Standardizes rows of the raw (loaded, unstandardized) dataset.
    pub fn prepare(&self, raw: &Dataset) -> Result<Dataset> {
        self.check_layout(raw)?;
        let mut ds = raw.clone();
        self.standardizer.apply(&mut ds);
        Ok(ds)
    }

    /// Re-creates the split the model was trained on.
    pub fn resplit(&self, raw: &Dataset) -> Result<SplitTriple> {
        self.check_layout(raw)?;
        let parts = split(raw, self.split, self.split_seed)?;
        if parts.standardizer != self.standardizer {
            return Err(Error::Model("data does not reproduce the training split".into()));
        }
        Ok(parts)
    }

    /// Predictions on an already standardized dataset.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<Label>> {
        let confs = self.model.confidences(ds)?;
        Ok(match &self.post {
            PostProcess::Sdb { lambda, group, .. } => shifted_predictions(&confs, ds.protected(), *lambda, *group),
            PostProcess::Rr { p, seed } => {
                let preds: Vec<Label> = confs.iter().map(|&c| sign(c)).collect();
                apply_rr(*p, *seed)?.apply(&preds, ds.protected())
            }
            _ => confs.iter().map(|&c| sign(c)).collect(),
        })
    }

    pub fn evaluate(&self, ds: &Dataset) -> Result<EvalResult> {
        Ok(EvalResult::evaluate(&self.predict(ds)?, ds))
    }
}
