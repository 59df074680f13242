//! Aggregated results and their file formats.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, FitSplit};
use super::sweep::TradeoffCurve;
use crate::dataset::Provenance;
use crate::error::{Error, Result};
use crate::fairness::FairnessMethod;
use crate::learners::LearnerKind;
use crate::metrics::{HistogramBin, Stat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stddev: f64,
    /// One value per trial, in trial order.
    pub values: Vec<f64>,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let s = Stat::from_values(&values);
        Self {
            mean: s.mean,
            stddev: s.std,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub learner: LearnerKind,
    pub method: FairnessMethod,
    pub error: Option<MetricSummary>,
    pub bias: Option<MetricSummary>,
    pub rrb: Option<MetricSummary>,
    /// Fitted SDB shift per trial.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    /// Trials in which no shift met the bias tolerance on the fitting split.
    #[serde(default)]
    pub infeasible_trials: usize,
    /// Trials in which the complement, not the protected group, was shifted.
    #[serde(default)]
    pub swapped_trials: usize,
    /// Fitted RR flip probability per trial.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flip_probabilities: Vec<f64>,
    pub failure: Option<String>,
    pub rrb_failure: Option<String>,
}

/// Margin diagnostics of the raw learner on each trial's test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerDiagnostics {
    pub learner: LearnerKind,
    pub mean_abs_confidence: Vec<f64>,
    pub mean_abs_confidence_misclassified: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerCurve {
    pub learner: LearnerKind,
    pub curve: TradeoffCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerHistogram {
    pub learner: LearnerKind,
    pub bins: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub trials: usize,
    pub master_seed: u64,
    pub trial_seeds: Vec<u64>,
    pub fit_split: FitSplit,
    pub rows: Vec<CellResult>,
    pub diagnostics: Vec<LearnerDiagnostics>,
    /// Trade-off curves from the first trial's test split.
    pub curves: Vec<LearnerCurve>,
    /// Confidence histograms from the first trial's test split.
    pub histograms: Vec<LearnerHistogram>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn get(&self, learner: LearnerKind, method: FairnessMethod) -> Option<&CellResult> {
        self.rows.iter().find(|r| r.learner == learner && r.method == method)
    }

    pub fn curve(&self, learner: LearnerKind) -> Option<&TradeoffCurve> {
        self.curves.iter().find(|c| c.learner == learner).map(|c| &c.curve)
    }

    pub fn diagnostics_for(&self, learner: LearnerKind) -> Option<&LearnerDiagnostics> {
        self.diagnostics.iter().find(|d| d.learner == learner)
    }

    /// `learner,method,metric,mean,stddev,trial_1,...` with one row per
    /// metric of each cell. Failed cells print NaN.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["learner".to_string(), "method".into(), "metric".into(), "mean".into(), "stddev".into()];
        header.extend((1..=self.trials).map(|t| format!("trial_{t}")));
        w.write_record(&header)?;
        let with_rrb = self.rows.iter().any(|r| r.rrb.is_some() || r.rrb_failure.is_some());
        for row in &self.rows {
            let mut metrics = vec![("error", &row.error), ("bias", &row.bias)];
            if with_rrb {
                metrics.push(("rrb", &row.rrb));
            }
            for (name, summary) in metrics {
                let mut rec = vec![row.learner.to_string(), row.method.to_string(), name.to_string()];
                match summary {
                    Some(s) => {
                        rec.push(s.mean.to_string());
                        rec.push(s.stddev.to_string());
                        rec.extend(s.values.iter().map(f64::to_string));
                    }
                    None => rec.extend(std::iter::repeat_n("NaN".to_string(), self.trials + 2)),
                }
                w.write_record(&rec)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// `learner,bin_left,count,mislabeled`
    pub fn write_histograms(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["learner", "bin_left", "count", "mislabeled"])?;
        for h in &self.histograms {
            for b in &h.bins {
                w.write_record([
                    h.learner.to_string(),
                    b.left.to_string(),
                    b.count.to_string(),
                    b.mislabeled.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Hex SHA-256 of the config's canonical JSON form.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellManifest {
    pub learner: LearnerKind,
    pub method: FairnessMethod,
    pub failure: Option<String>,
    pub rrb_failure: Option<String>,
    pub lambdas: Vec<f64>,
    pub infeasible_trials: usize,
    pub swapped_trials: usize,
    pub flip_probabilities: Vec<f64>,
}

/// Everything needed to re-run an experiment and check its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub name: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub trial_seeds: Vec<u64>,
    pub fit_split: FitSplit,
    pub dataset: Provenance,
    pub files: Vec<String>,
    pub cells: Vec<CellManifest>,
}

/// Writes the table, histograms, curves and a manifest into `dir`.
/// Returns the paths written, manifest last.
pub fn write_outputs(table: &ResultTable, cfg: &ExperimentConfig, mode: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = &table.name;
    let mut files = Vec::new();

    let table_path = dir.join(format!("{name}_table.csv"));
    table.write_csv(&table_path)?;
    files.push(table_path);

    if !table.histograms.is_empty() {
        let p = dir.join(format!("{name}_histogram.csv"));
        table.write_histograms(&p)?;
        files.push(p);
    }
    for c in &table.curves {
        let p = dir.join(format!("{name}_curve_{}.csv", c.learner));
        c.curve.write_csv(&p)?;
        files.push(p);
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: mode.to_string(),
        name: name.clone(),
        config_sha256: config_hash(cfg),
        config: cfg.clone(),
        master_seed: table.master_seed,
        trial_seeds: table.trial_seeds.clone(),
        fit_split: table.fit_split,
        dataset: table.provenance.clone(),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        cells: table
            .rows
            .iter()
            .map(|r| CellManifest {
                learner: r.learner,
                method: r.method,
                failure: r.failure.clone(),
                rrb_failure: r.rrb_failure.clone(),
                lambdas: r.lambdas.clone(),
                infeasible_trials: r.infeasible_trials,
                swapped_trials: r.swapped_trials,
                flip_probabilities: r.flip_probabilities.clone(),
            })
            .collect(),
    };
    let manifest_path = dir.join(format!("{name}_manifest.json"));
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    files.push(manifest_path);
    Ok(files)
}
