//! Experiment orchestration: trials over the (learner x method) grid, shift
//! sweeps, and reproduction of the published tables.

mod config;
mod document;
mod reproduce;
mod run;
mod sweep;
mod table;

pub use config::{
    BoostConfig, Cell, DatasetConfig, DiagnosticsConfig, ExperimentConfig, FairnessConfig, FitSplit, KernelChoice,
    LearnerGrid, LogregConfig, OutputConfig, RrbConfig, SvmConfig,
};
pub use document::{train_document, ModelDocument, PostProcess, FORMAT_VERSION};
pub use reproduce::{
    compare, external_baselines, reference_cells, reproduce_config, reproduce_table, write_comparison,
    ComparisonRow, ExternalBaseline, PaperDataset, ReferenceCell, Reported, Reproduction,
};
pub use run::{
    cell_pipeline, load_experiment_data, run_experiment, run_learner, run_on_dataset, train_learner, CellOutput,
    LearnerRun,
};
pub use sweep::{sweep_confidences, sweep_lambda, CurvePoint, LambdaGrid, TradeoffCurve};
pub use table::{
    config_hash, write_outputs, CellManifest, CellResult, LearnerCurve, LearnerDiagnostics, LearnerHistogram,
    MetricSummary, ResultTable, RunManifest,
};
