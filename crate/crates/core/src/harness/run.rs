//! Multi-trial execution of the (learner x method) grid.

use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::{Cell, ExperimentConfig, FitSplit, KernelChoice, LearnerGrid};
use super::sweep::{sweep_confidences, LambdaGrid};
use super::table::{CellResult, LearnerCurve, LearnerDiagnostics, LearnerHistogram, MetricSummary, ResultTable};
use crate::dataset::{inject_random_bias, load_files, split, Dataset, Label, SplitTriple};
use crate::error::{Error, Result};
use crate::fairness::{apply_rr, fit_rr, fit_sdb_closest, rm_massage, shifted_predictions, train_fwl_with, FairnessMethod};
use crate::learners::{
    scale_gamma, train_adaboost, train_logreg, train_svm, ConfidenceModel, Kernel, LearnerKind,
};
use crate::metrics::{confidence_histogram, label_error, rrb_score, sign, signed_bias, Pipeline};
use crate::seed::{self, Stream};

fn data_hint(schema: &str) -> String {
    match schema {
        "census" => "download adult.data and adult.test from \
                     https://archive.ics.uci.edu/ml/machine-learning-databases/adult/"
            .into(),
        "german" => "download german.data from \
                     https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/german/"
            .into(),
        "singles" => "the file is the marketing survey data distributed with The Elements of \
                      Statistical Learning (marketing.data)"
            .into(),
        _ => "check dataset.data in the config or pass --data-dir".into(),
    }
}

/// Loads the configured data files, reporting missing ones with a hint.
pub fn load_experiment_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    let schema = cfg.schema()?;
    for p in &cfg.dataset.data {
        if !p.exists() {
            return Err(Error::MissingData {
                path: p.clone(),
                hint: data_hint(&cfg.dataset.schema),
            });
        }
    }
    load_files(&cfg.dataset.data, &schema)
}

pub(crate) fn ordinal(kind: LearnerKind) -> u64 {
    match kind {
        LearnerKind::Boost => 0,
        LearnerKind::Svm => 1,
        LearnerKind::Logreg => 2,
    }
}

fn subsample(ds: &Dataset, cap: usize, seed: u64) -> Dataset {
    if cap == 0 || ds.n() <= cap {
        return ds.clone();
    }
    let mut idx: Vec<usize> = (0..ds.n()).collect();
    idx.shuffle(&mut seed::rng(seed));
    idx.truncate(cap);
    idx.sort_unstable();
    ds.subset(&idx)
}

/// Trains one learner on `train`; `seed` only matters for the SVM subsample.
pub fn train_learner(grid: &LearnerGrid, kind: LearnerKind, train: &Dataset, seed: u64) -> Result<ConfidenceModel> {
    Ok(match kind {
        LearnerKind::Boost => train_adaboost(train, grid.boost.rounds)?.into(),
        LearnerKind::Logreg => train_logreg(train, grid.logreg.reg, grid.logreg.tol)?.into(),
        LearnerKind::Svm => {
            let svm = &grid.svm;
            let sub = subsample(train, svm.subsample, seed);
            let kernel = match svm.kernel {
                KernelChoice::Linear => Kernel::Linear,
                KernelChoice::Gaussian => Kernel::Gaussian {
                    gamma: svm.gamma.unwrap_or_else(|| scale_gamma(&sub)),
                },
            };
            train_svm(&sub, kernel, svm.c, svm.tol)?.into()
        }
    })
}

/// Test predictions of one cell plus the fitted post-processing parameters.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub predictions: Vec<Label>,
    pub lambda: Option<f64>,
    pub feasible: Option<bool>,
    pub swapped: Option<bool>,
    pub flip_probability: Option<f64>,
}

impl CellOutput {
    fn plain(predictions: Vec<Label>) -> Self {
        Self {
            predictions,
            lambda: None,
            feasible: None,
            swapped: None,
            flip_probability: None,
        }
    }
}

/// Everything one learner produced on one split.
pub struct LearnerRun {
    pub learner: LearnerKind,
    /// Raw model's confidences on the test part, when training succeeded.
    pub test_confidences: Option<Vec<f64>>,
    pub cells: Vec<(FairnessMethod, Result<CellOutput>)>,
}

struct Base {
    test_confs: Vec<f64>,
    fit_confs: Vec<f64>,
}

/// The raw learner of a trial, with the optional SVM rescaling applied.
pub(crate) fn fit_base_model(cfg: &ExperimentConfig, kind: LearnerKind, parts: &SplitTriple, seed: u64) -> Result<ConfidenceModel> {
    let mut model = train_learner(&cfg.learners, kind, &parts.train, seed::derive(seed, Stream::Subsample, ordinal(kind)))?;
    if let ConfidenceModel::Svm(m) = &mut model {
        if cfg.learners.svm.rescale {
            let raw = m.confidences(parts.model_select.features());
            let top = raw.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            if top > 0.0 {
                m.scale = top;
            }
        }
    }
    Ok(model)
}

fn train_base(cfg: &ExperimentConfig, kind: LearnerKind, parts: &SplitTriple, seed: u64) -> Result<Base> {
    let model = fit_base_model(cfg, kind, parts, seed)?;
    let test_confs = model.confidences(&parts.test)?;
    let fit = match cfg.fairness.fit_split {
        FitSplit::Train => &parts.train,
        FitSplit::ModelSelect => &parts.model_select,
    };
    let fit_confs = model.confidences(fit)?;
    Ok(Base { test_confs, fit_confs })
}

/// Runs `methods` for one learner on one split.
///
/// Seeds for the SVM subsample, RR draws and RM massaging are derived from
/// `seed` and the learner kind only, so a cell gives the same answer whether
/// it runs alone or alongside the rest of the grid.
pub fn run_learner(
    cfg: &ExperimentConfig,
    kind: LearnerKind,
    methods: &[FairnessMethod],
    parts: &SplitTriple,
    seed: u64,
) -> LearnerRun {
    let fit = match cfg.fairness.fit_split {
        FitSplit::Train => &parts.train,
        FitSplit::ModelSelect => &parts.model_select,
    };
    let needs_base = methods
        .iter()
        .any(|m| matches!(m, FairnessMethod::None | FairnessMethod::Sdb | FairnessMethod::Rr));
    let base = if needs_base {
        Some(train_base(cfg, kind, parts, seed))
    } else {
        None
    };
    let base_err = |b: &Result<Base>| match b {
        Err(e) => Some(Error::Model(format!("{kind} training failed: {e}"))),
        Ok(_) => None,
    };

    let mut cells = Vec::with_capacity(methods.len());
    for &method in methods {
        let out = match method {
            FairnessMethod::None | FairnessMethod::Sdb | FairnessMethod::Rr => {
                let b = base.as_ref().expect("base trained");
                match b {
                    Err(_) => Err(base_err(b).expect("error")),
                    Ok(b) => post_process(cfg, method, b, fit, parts, kind, seed),
                }
            }
            FairnessMethod::Rm => rm_cell(cfg, kind, parts, seed),
            FairnessMethod::Fwl => {
                if kind != LearnerKind::Boost {
                    Err(Error::Config("fwl needs the boost learner".into()))
                } else {
                    train_fwl_with(&parts.train, cfg.learners.boost.rounds, cfg.fairness.fwl_bias_weight)
                        .and_then(|m| ConfidenceModel::from(m).predictions(&parts.test))
                        .map(CellOutput::plain)
                }
            }
        };
        if let Err(e) = &out {
            debug!("{kind}/{method}: {e}");
        }
        cells.push((method, out));
    }
    LearnerRun {
        learner: kind,
        test_confidences: base.and_then(|b| b.ok()).map(|b| b.test_confs),
        cells,
    }
}

fn post_process(
    cfg: &ExperimentConfig,
    method: FairnessMethod,
    base: &Base,
    fit: &Dataset,
    parts: &SplitTriple,
    kind: LearnerKind,
    seed: u64,
) -> Result<CellOutput> {
    let test_prot = parts.test.protected();
    match method {
        FairnessMethod::None => Ok(CellOutput::plain(base.test_confs.iter().map(|&c| sign(c)).collect())),
        FairnessMethod::Sdb => {
            let f = fit_sdb_closest(&base.fit_confs, fit.labels(), fit.protected(), cfg.fairness.epsilon)?;
            if !f.feasible {
                debug!("{kind}/sdb: epsilon {} unreachable, closest bias {}", cfg.fairness.epsilon, f.bias);
            }
            Ok(CellOutput {
                predictions: shifted_predictions(&base.test_confs, test_prot, f.lambda, f.group),
                lambda: Some(f.lambda),
                feasible: Some(f.feasible),
                swapped: Some(f.group.swapped()),
                flip_probability: None,
            })
        }
        FairnessMethod::Rr => {
            let fit_preds: Vec<Label> = base.fit_confs.iter().map(|&c| sign(c)).collect();
            let p = fit_rr(&fit_preds, fit.protected())?;
            let rr = apply_rr(p, seed::derive(seed, Stream::Relabel, ordinal(kind)))?;
            let test_preds: Vec<Label> = base.test_confs.iter().map(|&c| sign(c)).collect();
            Ok(CellOutput {
                predictions: rr.apply(&test_preds, test_prot),
                lambda: None,
                feasible: None,
                swapped: None,
                flip_probability: Some(p),
            })
        }
        _ => unreachable!("not a post-processing method"),
    }
}

fn rm_cell(cfg: &ExperimentConfig, kind: LearnerKind, parts: &SplitTriple, seed: u64) -> Result<CellOutput> {
    let massaged = rm_massage(&parts.train, seed::derive(seed, Stream::Massage, ordinal(kind)))?;
    let model = train_learner(&cfg.learners, kind, &massaged, seed::derive(seed, Stream::Subsample, ordinal(kind)))?;
    Ok(CellOutput::plain(model.predictions(&parts.test)?))
}

/// A single grid cell as an RRB pipeline.
pub fn cell_pipeline(cfg: &ExperimentConfig, cell: Cell) -> impl Pipeline + '_ {
    move |parts: &SplitTriple, seed: u64| -> Result<Vec<Label>> {
        let mut run = run_learner(cfg, cell.learner, &[cell.method], parts, seed);
        run.cells.pop().expect("one cell").1.map(|o| o.predictions)
    }
}

struct CellTrial {
    main: std::result::Result<(f64, f64, CellOutput), String>,
    rrb: Option<std::result::Result<f64, String>>,
}

struct TrialRecord {
    cells: Vec<CellTrial>,
    diagnostics: Vec<(LearnerKind, Option<(f64, f64)>)>,
    curves: Vec<LearnerCurve>,
    histograms: Vec<LearnerHistogram>,
}

fn mean_abs(confs: &[f64], labels: &[Label]) -> (f64, f64) {
    let all = confs.iter().map(|c| c.abs()).sum::<f64>() / confs.len().max(1) as f64;
    let wrong: Vec<f64> = confs
        .iter()
        .zip(labels)
        .filter(|&(&c, &y)| sign(c) != y)
        .map(|(c, _)| c.abs())
        .collect();
    let wrong_mean = if wrong.is_empty() {
        f64::NAN
    } else {
        wrong.iter().sum::<f64>() / wrong.len() as f64
    };
    (all, wrong_mean)
}

fn methods_for(cells: &[Cell], learner: LearnerKind) -> Vec<FairnessMethod> {
    cells.iter().filter(|c| c.learner == learner).map(|c| c.method).collect()
}

fn learner_order(cells: &[Cell]) -> Vec<LearnerKind> {
    let mut out: Vec<LearnerKind> = Vec::new();
    for c in cells {
        if !out.contains(&c.learner) {
            out.push(c.learner);
        }
    }
    out
}

fn run_split(cfg: &ExperimentConfig, cells: &[Cell], parts: &SplitTriple, seed: u64) -> Vec<LearnerRun> {
    learner_order(cells)
        .into_iter()
        .map(|kind| run_learner(cfg, kind, &methods_for(cells, kind), parts, seed))
        .collect()
}

fn lookup(runs: &[LearnerRun], cell: Cell) -> &Result<CellOutput> {
    let run = runs.iter().find(|r| r.learner == cell.learner).expect("learner ran");
    &run.cells.iter().find(|(m, _)| *m == cell.method).expect("method ran").1
}

fn run_trial(cfg: &ExperimentConfig, ds: &Dataset, cells: &[Cell], t: usize) -> TrialRecord {
    let trial_seed = seed::derive(cfg.seed, Stream::Trial, t as u64);
    let split_seed = seed::derive(trial_seed, Stream::Split, 0);
    info!("trial {} (seed {trial_seed:#018x})", t + 1);

    let mut record = TrialRecord {
        cells: Vec::with_capacity(cells.len()),
        diagnostics: Vec::new(),
        curves: Vec::new(),
        histograms: Vec::new(),
    };

    let runs = split(ds, cfg.split, split_seed).map(|parts| {
        let runs = run_split(cfg, cells, &parts, trial_seed);
        (parts, runs)
    });

    let rrb_runs = if cfg.rrb.enabled {
        let r = inject_random_bias(ds, cfg.rrb.eta, seed::derive(trial_seed, Stream::BiasInjection, 0)).and_then(|biased| {
            let learn = biased.learning_dataset()?;
            let parts = split(&learn, cfg.split, split_seed)?;
            let runs = run_split(cfg, cells, &parts, trial_seed);
            Ok((biased, parts, runs))
        });
        Some(r)
    } else {
        None
    };

    for &cell in cells {
        let main = match &runs {
            Err(e) => Err(e.to_string()),
            Ok((parts, runs)) => match lookup(runs, cell) {
                Err(e) => Err(e.to_string()),
                Ok(out) => Ok((
                    label_error(&out.predictions, parts.test.labels()),
                    signed_bias(&out.predictions, parts.test.protected()),
                    out.clone(),
                )),
            },
        };
        let rrb = rrb_runs.as_ref().map(|r| match r {
            Err(e) => Err(e.to_string()),
            Ok((biased, parts, runs)) => match lookup(runs, cell) {
                Err(e) => Err(e.to_string()),
                Ok(out) => rrb_score(&out.predictions, &parts.test_rows, biased).map_err(|e| e.to_string()),
            },
        });
        record.cells.push(CellTrial { main, rrb });
    }

    if let Ok((parts, runs)) = &runs {
        for run in runs {
            let diag = run.test_confidences.as_ref().map(|c| mean_abs(c, parts.test.labels()));
            record.diagnostics.push((run.learner, diag));
            if t == 0 {
                if let Some(confs) = &run.test_confidences {
                    if cfg.diagnostics.curves {
                        match sweep_confidences(confs, parts.test.labels(), parts.test.protected(), &LambdaGrid::Auto) {
                            Ok(curve) => record.curves.push(LearnerCurve {
                                learner: run.learner,
                                curve,
                            }),
                            Err(e) => warn!("{} trade-off curve skipped: {e}", run.learner),
                        }
                    }
                    record.histograms.push(LearnerHistogram {
                        learner: run.learner,
                        bins: confidence_histogram(confs, parts.test.labels(), cfg.diagnostics.histogram_bins, -1.0, 1.0),
                    });
                }
            }
        }
    }
    record
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Loads the data and runs every trial of the grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let ds = load_experiment_data(cfg)?;
    run_on_dataset(cfg, &ds)
}

/// [`run_experiment`] on an already loaded dataset.
///
/// Trial `t` uses seed `derive(master, Trial, t)` for everything it does,
/// so the table does not depend on the worker count or execution order.
/// A failing cell is recorded in its row and does not stop the others.
pub fn run_on_dataset(cfg: &ExperimentConfig, ds: &Dataset) -> Result<ResultTable> {
    cfg.validate()?;
    let cells = cfg.cells();
    let pool = worker_pool(cfg.workers)?;
    let records: Vec<TrialRecord> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, ds, &cells, t)).collect());

    let mut rows = Vec::with_capacity(cells.len());
    for (k, &cell) in cells.iter().enumerate() {
        let trials: Vec<&CellTrial> = records.iter().map(|r| &r.cells[k]).collect();
        let failure = trials
            .iter()
            .enumerate()
            .find_map(|(t, c)| c.main.as_ref().err().map(|e| format!("trial {}: {e}", t + 1)));
        let mut row = CellResult {
            learner: cell.learner,
            method: cell.method,
            error: None,
            bias: None,
            rrb: None,
            lambdas: Vec::new(),
            infeasible_trials: 0,
            swapped_trials: 0,
            flip_probabilities: Vec::new(),
            failure: failure.clone(),
            rrb_failure: None,
        };
        if let Some(f) = &failure {
            warn!("{}/{} failed: {f}", cell.learner, cell.method);
        } else {
            let ok: Vec<&(f64, f64, CellOutput)> = trials.iter().map(|c| c.main.as_ref().expect("checked")).collect();
            row.error = Some(MetricSummary::from_values(ok.iter().map(|o| o.0).collect()));
            row.bias = Some(MetricSummary::from_values(ok.iter().map(|o| o.1).collect()));
            row.lambdas = ok.iter().filter_map(|o| o.2.lambda).collect();
            row.infeasible_trials = ok.iter().filter(|o| o.2.feasible == Some(false)).count();
            row.swapped_trials = ok.iter().filter(|o| o.2.swapped == Some(true)).count();
            row.flip_probabilities = ok.iter().filter_map(|o| o.2.flip_probability).collect();
        }
        if cfg.rrb.enabled {
            let rrb_failure = trials.iter().enumerate().find_map(|(t, c)| match &c.rrb {
                Some(Err(e)) => Some(format!("trial {}: {e}", t + 1)),
                _ => None,
            });
            match rrb_failure {
                Some(f) => {
                    warn!("{}/{} rrb failed: {f}", cell.learner, cell.method);
                    row.rrb_failure = Some(f);
                }
                None => {
                    let values = trials
                        .iter()
                        .map(|c| *c.rrb.as_ref().expect("enabled").as_ref().expect("checked"))
                        .collect();
                    row.rrb = Some(MetricSummary::from_values(values));
                }
            }
        }
        rows.push(row);
    }

    let mut diagnostics: Vec<LearnerDiagnostics> = Vec::new();
    for kind in learner_order(&cells) {
        let mut all = Vec::new();
        let mut wrong = Vec::new();
        for r in &records {
            if let Some((_, Some((a, w)))) = r.diagnostics.iter().find(|(k, _)| *k == kind) {
                all.push(*a);
                wrong.push(*w);
            }
        }
        if !all.is_empty() {
            diagnostics.push(LearnerDiagnostics {
                learner: kind,
                mean_abs_confidence: all,
                mean_abs_confidence_misclassified: wrong,
            });
        }
    }
    let first = records.into_iter().next().expect("at least one trial");

    Ok(ResultTable {
        name: cfg.name(),
        trials: cfg.trials,
        master_seed: cfg.seed,
        trial_seeds: (0..cfg.trials as u64).map(|t| seed::derive(cfg.seed, Stream::Trial, t)).collect(),
        fit_split: cfg.fairness.fit_split,
        rows,
        diagnostics,
        curves: first.curves,
        histograms: first.histograms,
        provenance: ds.provenance().clone(),
    })
}
