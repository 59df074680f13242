use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use fairshift::harness::{
    config_hash, load_experiment_data, reproduce_config, reproduce_table, sweep_lambda, train_document,
    write_comparison, write_outputs, Cell, ExperimentConfig, FitSplit, LambdaGrid, ModelDocument, PaperDataset,
};
use fairshift::fairness::FairnessMethod;
use fairshift::metrics::signed_bias;
use fairshift::{Error, LearnerKind, Result};
use log::info;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "fairshift", version, about = "Fairness-aware learning experiments")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset and print its size, protected fraction and label bias.
    Inspect {
        #[command(flatten)]
        source: Source,
    },
    /// Train one (learner, method) cell on one trial's split and save the model.
    Train {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "boost")]
        learner: LearnerKind,
        #[arg(long, default_value = "none")]
        method: FairnessMethod,
        /// 1-based trial whose split is used.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        trial: u64,
    },
    /// Score a saved model on its test split or on the whole dataset.
    Evaluate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        on: EvalSet,
    },
    /// Trade-off curve of one learner as its protected-group shift grows.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "boost")]
        learner: LearnerKind,
        /// Comma-separated shifts; defaults to every distinct candidate.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        trial: u64,
    },
    /// Resilience to random bias of every cell in the grid.
    Rrb {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Every trial of the grid: error, bias, and (if enabled) resilience.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-run a published table and compare against the reported numbers.
    Reproduce {
        dataset: PaperDataset,
        #[arg(long, env = "FAIRSHIFT_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "input")]
struct SourceChoice {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Packaged dataset with its usual file names under the data directory.
    #[arg(long)]
    dataset: Option<PaperDataset>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    choice: SourceChoice,
    /// Directory that relative data paths are resolved against.
    #[arg(long, env = "FAIRSHIFT_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Bias tolerance for the shifted boundary.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Flip rate of the injected bias.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_parser = parse_fit_split)]
    fit_split: Option<FitSplit>,
    /// Worker threads; 0 uses every core, 1 runs serially.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<LearnerKind>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<FairnessMethod>>,
    #[arg(long, env = "FAIRSHIFT_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EvalSet {
    Test,
    All,
}

fn parse_fit_split(s: &str) -> std::result::Result<FitSplit, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Source {
    fn config(&self) -> Result<ExperimentConfig> {
        match (&self.choice.config, self.choice.dataset) {
            (Some(path), _) => ExperimentConfig::from_file(path, self.data_dir.as_deref()),
            (None, Some(ds)) => {
                let dir = self.data_dir.clone().unwrap_or_else(|| PathBuf::from("data"));
                let files = ds.files().iter().map(|f| dir.join(f)).collect();
                let mut cfg = ExperimentConfig::for_dataset(ds.as_str(), files);
                cfg.name = Some(ds.as_str().to_string());
                Ok(cfg)
            }
            (None, None) => unreachable!("clap requires one input"),
        }
    }
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t as usize;
        }
        if let Some(e) = self.epsilon {
            cfg.fairness.epsilon = e;
        }
        if let Some(e) = self.eta {
            cfg.rrb.eta = e;
        }
        if let Some(f) = self.fit_split {
            cfg.fairness.fit_split = f;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(l) = &self.learners {
            cfg.learners.kinds = l.clone();
        }
        if let Some(m) = &self.methods {
            cfg.fairness.methods = m.clone();
        }
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        cfg.validate()
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Manifest for the single-model commands: config, arguments, and files.
fn write_command_manifest(
    dir: &Path,
    stem: &str,
    mode: &str,
    cfg: &ExperimentConfig,
    args: serde_json::Value,
    files: &[PathBuf],
) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}_manifest.json"));
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": mode,
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "args": args,
        "files": names,
    });
    write_json(&path, &manifest)?;
    Ok(path)
}

// Write errors on stdout (a closed pipe, say) are not worth failing a run over.
fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json value");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_files(files: &[PathBuf]) {
    let mut out = std::io::stdout().lock();
    for f in files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
}

fn inspect(source: &Source) -> Result<()> {
    let cfg = source.config()?;
    let ds = load_experiment_data(&cfg)?;
    let n = ds.n();
    let prot = ds.protected_count();
    print_json(&json!({
        "name": cfg.name(),
        "n": n,
        "features": ds.d(),
        "positive": ds.positive_count(),
        "protected": prot,
        "protected_fraction": prot as f64 / n as f64,
        "label_bias": signed_bias(ds.labels(), ds.protected()),
        "provenance": ds.provenance(),
    }));
    Ok(())
}

fn train(source: &Source, ov: &Overrides, learner: LearnerKind, method: FairnessMethod, trial: u64) -> Result<()> {
    let mut cfg = source.config()?;
    ov.apply(&mut cfg)?;
    let ds = load_experiment_data(&cfg)?;
    let doc = train_document(&cfg, &ds, Cell { learner, method }, trial as usize - 1)?;
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let stem = format!("{}_{learner}_{method}", cfg.name());
    let path = dir.join(format!("{stem}.model.json"));
    doc.write(&path)?;
    let args = json!({ "learner": learner, "method": method, "trial": trial });
    let manifest = write_command_manifest(dir, &stem, "train", &cfg, args, std::slice::from_ref(&path))?;
    print_files(&[path, manifest]);
    Ok(())
}

fn evaluate(source: &Source, ov: &Overrides, model: &Path, on: EvalSet) -> Result<()> {
    let mut cfg = source.config()?;
    ov.apply(&mut cfg)?;
    let doc = ModelDocument::read(model)?;
    let raw = load_experiment_data(&cfg)?;
    let eval = match on {
        EvalSet::Test => doc.resplit(&raw)?.test,
        EvalSet::All => doc.prepare(&raw)?,
    };
    let result = doc.evaluate(&eval)?;
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let stem = format!("{}_{}_{}_eval", doc.name, doc.learner, doc.post.method());
    let path = dir.join(format!("{stem}.json"));
    let report = json!({
        "learner": doc.learner,
        "method": doc.post.method(),
        "on": on,
        "result": result,
    });
    write_json(&path, &report)?;
    let args = json!({ "model": model, "on": on });
    let manifest = write_command_manifest(dir, &stem, "evaluate", &cfg, args, std::slice::from_ref(&path))?;
    print_json(&report);
    print_files(&[path, manifest]);
    Ok(())
}

fn sweep(source: &Source, ov: &Overrides, learner: LearnerKind, lambdas: Option<&[f64]>, trial: u64) -> Result<()> {
    let mut cfg = source.config()?;
    ov.apply(&mut cfg)?;
    let ds = load_experiment_data(&cfg)?;
    let doc = train_document(&cfg, &ds, Cell { learner, method: FairnessMethod::None }, trial as usize - 1)?;
    let test = doc.resplit(&ds)?.test;
    let grid = match lambdas {
        Some(v) => LambdaGrid::Values(v.to_vec()),
        None => LambdaGrid::Auto,
    };
    let curve = sweep_lambda(&doc.model, &test, &grid)?;
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let stem = format!("{}_sweep_{learner}", cfg.name());
    let path = dir.join(format!("{stem}.csv"));
    curve.write_csv(&path)?;
    let args = json!({ "learner": learner, "lambdas": lambdas, "trial": trial });
    let manifest = write_command_manifest(dir, &stem, "sweep", &cfg, args, std::slice::from_ref(&path))?;
    info!("{} points, monotone: {}", curve.points.len(), curve.is_monotone());
    print_files(&[path, manifest]);
    Ok(())
}

fn grid(source: &Source, ov: &Overrides, rrb: bool) -> Result<()> {
    let mut cfg = source.config()?;
    if rrb {
        cfg.rrb.enabled = true;
    }
    ov.apply(&mut cfg)?;
    let table = fairshift::harness::run_experiment(&cfg)?;
    let files = write_outputs(&table, &cfg, if rrb { "rrb" } else { "run" }, &cfg.output.dir)?;
    print_files(&files);
    Ok(())
}

fn reproduce(dataset: PaperDataset, data_dir: &Path, ov: &Overrides) -> Result<()> {
    let mut cfg = reproduce_config(dataset, data_dir);
    ov.apply(&mut cfg)?;
    let rep = reproduce_table(dataset, &cfg)?;
    let dir = &cfg.output.dir;
    let comparison = dir.join(format!("{}_comparison.csv", rep.table.name));
    create_dir(dir)?;
    write_comparison(&rep.comparison, &comparison)?;
    let mut files = write_outputs(&rep.table, &cfg, "reproduce", dir)?;
    files.insert(0, comparison);
    print_files(&files);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Inspect { source } => inspect(source),
        Command::Train {
            source,
            overrides,
            learner,
            method,
            trial,
        } => train(source, overrides, *learner, *method, *trial),
        Command::Evaluate {
            source,
            overrides,
            model,
            on,
        } => evaluate(source, overrides, model, *on),
        Command::Sweep {
            source,
            overrides,
            learner,
            lambdas,
            trial,
        } => sweep(source, overrides, *learner, lambdas.as_deref(), *trial),
        Command::Rrb { source, overrides } => grid(source, overrides, true),
        Command::Run { source, overrides } => grid(source, overrides, false),
        Command::Reproduce {
            dataset,
            data_dir,
            overrides,
        } => reproduce(*dataset, data_dir, overrides),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
