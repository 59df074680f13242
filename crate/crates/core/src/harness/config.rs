//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "census"
//! seed = 2014
//! trials = 10
//! workers = 0              # 0 = one per core
//!
//! [dataset]
//! schema = "census"        # packaged schema name, or a path to a schema file
//! data = ["adult.data", "adult.test"]
//!
//! [split]
//! train = 0.5
//! model_select = 0.25
//! test = 0.25
//!
//! [learners]
//! kinds = ["boost", "svm", "logreg"]
//! boost = { rounds = 20 }
//! svm = { kernel = "gaussian", c = 1.0, subsample = 5000, tol = 1e-3 }
//! logreg = { reg = 1e-4, tol = 1e-6 }
//!
//! [fairness]
//! methods = ["none", "rr", "sdb", "rm", "fwl"]
//! epsilon = 0.0
//! fit_split = "model_select"   # or "train"
//!
//! [rrb]
//! enabled = true
//! eta = 0.2
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative data paths are resolved against a data directory when one is
//! given, otherwise against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::schema::packaged;
use crate::dataset::{DatasetSchema, SplitRatios};
use crate::error::{Error, Result};
use crate::fairness::{FairnessMethod, DEFAULT_BIAS_WEIGHT};
use crate::learners::{LearnerKind, DEFAULT_REG, DEFAULT_ROUNDS, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Worker threads for trials; 0 uses one per core. Results do not depend
    /// on it, so it is left out of the serialized form.
    #[serde(default, skip_serializing)]
    pub workers: usize,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitRatios,
    #[serde(default)]
    pub learners: LearnerGrid,
    #[serde(default)]
    pub fairness: FairnessConfig,
    #[serde(default)]
    pub rrb: RrbConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    /// Where results go; not part of the serialized (hashed) config.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    2014
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub schema: String,
    pub data: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerGrid {
    #[serde(default = "all_learners")]
    pub kinds: Vec<LearnerKind>,
    #[serde(default)]
    pub boost: BoostConfig,
    #[serde(default)]
    pub svm: SvmConfig,
    #[serde(default)]
    pub logreg: LogregConfig,
}

fn all_learners() -> Vec<LearnerKind> {
    LearnerKind::ALL.to_vec()
}

impl Default for LearnerGrid {
    fn default() -> Self {
        Self {
            kinds: all_learners(),
            boost: BoostConfig::default(),
            svm: SvmConfig::default(),
            logreg: LogregConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
}

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self { rounds: DEFAULT_ROUNDS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    #[serde(default = "default_kernel")]
    pub kernel: KernelChoice,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Gaussian bandwidth; defaults to `1 / (d * variance)` of the training data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Train on at most this many uniformly drawn training rows; 0 means all.
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default = "default_svm_tol")]
    pub tol: f64,
    /// Divide confidences by the largest |confidence| on the model-selection split.
    #[serde(default)]
    pub rescale: bool,
}

fn default_kernel() -> KernelChoice {
    KernelChoice::Gaussian
}

fn default_c() -> f64 {
    1.0
}

fn default_subsample() -> usize {
    5000
}

fn default_svm_tol() -> f64 {
    1e-3
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            kernel: default_kernel(),
            c: default_c(),
            gamma: None,
            subsample: default_subsample(),
            tol: default_svm_tol(),
            rescale: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogregConfig {
    #[serde(default = "default_reg")]
    pub reg: f64,
    #[serde(default = "default_lr_tol")]
    pub tol: f64,
}

fn default_reg() -> f64 {
    DEFAULT_REG
}

fn default_lr_tol() -> f64 {
    DEFAULT_TOL
}

impl Default for LogregConfig {
    fn default() -> Self {
        Self {
            reg: DEFAULT_REG,
            tol: DEFAULT_TOL,
        }
    }
}

/// Split on which SDB's shift and RR's flip probability are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSplit {
    Train,
    #[default]
    ModelSelect,
}

impl std::str::FromStr for FitSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(FitSplit::Train),
            "model_select" | "model-select" => Ok(FitSplit::ModelSelect),
            other => Err(Error::InvalidArgument(format!("unknown fit split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessConfig {
    #[serde(default = "all_methods")]
    pub methods: Vec<FairnessMethod>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub fit_split: FitSplit,
    #[serde(default = "default_bias_weight")]
    pub fwl_bias_weight: f64,
}

fn all_methods() -> Vec<FairnessMethod> {
    FairnessMethod::ALL.to_vec()
}

fn default_bias_weight() -> f64 {
    DEFAULT_BIAS_WEIGHT
}

impl Default for FairnessConfig {
    fn default() -> Self {
        Self {
            methods: all_methods(),
            epsilon: 0.0,
            fit_split: FitSplit::ModelSelect,
            fwl_bias_weight: DEFAULT_BIAS_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RrbConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn yes() -> bool {
    true
}

fn default_eta() -> f64 {
    0.2
}

impl Default for RrbConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            eta: default_eta(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Emit a trade-off curve per learner from the first trial.
    #[serde(default = "yes")]
    pub curves: bool,
}

fn default_bins() -> usize {
    40
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            histogram_bins: default_bins(),
            curves: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

/// One (learner, method) cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub learner: LearnerKind,
    pub method: FairnessMethod,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative data paths are joined onto `data_dir`
    /// when given, otherwise onto the config file's directory.
    pub fn from_file(path: &Path, data_dir: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        match (data_dir, path.parent()) {
            (Some(dir), _) => cfg.resolve_data(dir),
            (None, Some(dir)) => cfg.resolve_data(dir),
            (None, None) => {}
        }
        Ok(cfg)
    }

    /// Minimal config for a dataset with every other setting at its default.
    pub fn for_dataset(schema: &str, data: Vec<PathBuf>) -> Self {
        Self {
            name: None,
            seed: default_seed(),
            trials: default_trials(),
            workers: 0,
            dataset: DatasetConfig {
                schema: schema.to_string(),
                data,
            },
            split: SplitRatios::default(),
            learners: LearnerGrid::default(),
            fairness: FairnessConfig::default(),
            rrb: RrbConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Joins relative data paths onto `dir`.
    pub fn resolve_data(&mut self, dir: &Path) {
        for p in &mut self.dataset.data {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        let schema = Path::new(&self.dataset.schema);
        if packaged(&self.dataset.schema).is_none() && schema.is_relative() {
            self.dataset.schema = dir.join(schema).to_string_lossy().into_owned();
        }
    }

    pub fn name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => Path::new(&self.dataset.schema)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "experiment".into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.dataset.data.is_empty() {
            return Err(Error::Config("dataset.data lists no files".into()));
        }
        self.split.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.learners.kinds.is_empty() {
            return Err(Error::Config("learners.kinds is empty".into()));
        }
        if self.fairness.methods.is_empty() {
            return Err(Error::Config("fairness.methods is empty".into()));
        }
        if self.fairness.methods.contains(&FairnessMethod::Fwl) && !self.learners.kinds.contains(&LearnerKind::Boost) {
            return Err(Error::Config("fwl needs the boost learner".into()));
        }
        if !(self.fairness.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.fairness.epsilon)));
        }
        if !(self.fairness.fwl_bias_weight >= 0.0) {
            return Err(Error::Config("fwl_bias_weight must be >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.rrb.eta) {
            return Err(Error::Config(format!("rrb.eta must be in [0, 0.5), got {}", self.rrb.eta)));
        }
        if self.learners.boost.rounds == 0 {
            return Err(Error::Config("boost.rounds must be at least 1".into()));
        }
        let svm = &self.learners.svm;
        if !(svm.c > 0.0) || !(svm.tol > 0.0) || svm.gamma.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::Config("svm c, tol and gamma must be positive".into()));
        }
        if !(self.learners.logreg.reg >= 0.0) || !(self.learners.logreg.tol > 0.0) {
            return Err(Error::Config("logreg reg must be >= 0 and tol > 0".into()));
        }
        if self.diagnostics.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be positive".into()));
        }
        Ok(())
    }

    /// Grid cells in config order; FWL only pairs with boosting.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &learner in &self.learners.kinds {
            for &method in &self.fairness.methods {
                if method == FairnessMethod::Fwl && learner != LearnerKind::Boost {
                    continue;
                }
                let cell = Cell { learner, method };
                if !out.contains(&cell) {
                    out.push(cell);
                }
            }
        }
        out
    }

    pub fn schema(&self) -> Result<DatasetSchema> {
        match packaged(&self.dataset.schema) {
            Some(s) => Ok(s),
            None => DatasetSchema::from_file(Path::new(&self.dataset.schema)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[dataset]
schema = "german"
data = ["german.data"]
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.learners.boost.rounds, 20);
        assert_eq!(cfg.fairness.epsilon, 0.0);
        assert_eq!(cfg.fairness.fit_split, FitSplit::ModelSelect);
        assert_eq!(cfg.rrb.eta, 0.2);
        assert_eq!(cfg.split, SplitRatios::default());
        // 5 boosting cells, 4 each for svm and logreg
        assert_eq!(cfg.cells().len(), 13);
        assert_eq!(cfg.name(), "german");
    }

    #[test]
    fn rejects_invalid_settings() {
        let bad = format!("trials = 0\n{MINIMAL}");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let fwl = format!("{MINIMAL}[learners]\nkinds = [\"svm\"]\n[fairness]\nmethods = [\"fwl\"]\n");
        assert!(matches!(ExperimentConfig::from_toml(&fwl), Err(Error::Config(_))));
        let eta = format!("{MINIMAL}[rrb]\neta = 0.5\n");
        assert!(ExperimentConfig::from_toml(&eta).is_err());
        let typo = format!("{MINIMAL}[fairness]\nepsilom = 0.1\n");
        assert!(ExperimentConfig::from_toml(&typo).is_err());
    }

    #[test]
    fn relative_paths_resolve_against_a_directory() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.resolve_data(Path::new("/data"));
        assert_eq!(cfg.dataset.data, vec![PathBuf::from("/data/german.data")]);
        assert_eq!(cfg.dataset.schema, "german");
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }
}
