//! `prakriti` — command-line front end for the categorical ML toolkit.
//!
//! Subcommands cover every pipeline stage (synth, select, cluster, train,
//! predict, evaluate) plus the full experiment sweep. All randomness flows
//! from `--seed` (fixed default, never time-based), so identical invocations
//! produce byte-identical artifacts. One summary line goes to stdout;
//! diagnostics go to stderr. Exit codes: 0 success, 1 data/model error,
//! 2 sweep with failed cells, 64 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use prakriti_core::dataset::{self, IngestOptions};
use prakriti_core::dtree::{self, TreeModel};
use prakriti_core::experiment::{self, ExperimentConfig};
use prakriti_core::feature_selection::{scores_to_csv, select_k_best};
use prakriti_core::kmodes::{self, ClusterModel};
use prakriti_core::metrics::{confusion_named, report};
use prakriti_core::mnb::MnbModel;
use prakriti_core::rng::DEFAULT_SEED;
use prakriti_core::synth::{CategoryCounts, GeneratorSpec};
use prakriti_core::{Error, TreeParams64};

#[derive(Parser)]
#[command(
    name = "prakriti",
    version,
    about = "Categorical ML toolkit for seven-class dosha classification"
)]
struct Cli {
    /// Master seed; every stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Directory for output artifacts.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Artifact format for reports and plot data.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Experiment configuration file (TOML); used by `sweep`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Mnb,
    Dtree,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic categorical dataset with planted class structure.
    Synth(SynthArgs),
    /// Rank features by chi-square score and optionally reduce the table.
    Select(SelectArgs),
    /// Cluster rows with k-modes.
    Cluster(ClusterArgs),
    /// Train a classifier and write its JSON model.
    Train(TrainArgs),
    /// Predict classes for new rows with a saved model.
    Predict(PredictArgs),
    /// Evaluate a saved model against labeled rows.
    Evaluate(EvaluateArgs),
    /// Run the full metrics sweep over test sizes and feature counts.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long, default_value_t = 147)]
    features: usize,
    #[arg(long, default_value_t = 3)]
    categories: usize,
    #[arg(long, default_value_t = 20)]
    informative: usize,
    #[arg(long, default_value_t = 0.9)]
    signal: f64,
    #[arg(long, default_value_t = 0.0)]
    missing_rate: f64,
    #[arg(long, default_value = "dosha")]
    label_column: String,
    /// Output CSV path (default: `<output-dir>/synthetic.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "dosha")]
    label_column: String,
    /// Tokens treated as missing (repeatable).
    #[arg(long = "missing-token")]
    missing_tokens: Vec<String>,
    /// Ranked-scores CSV path (default: `<output-dir>/ranked.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the reduced table here.
    #[arg(long)]
    reduced_out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    #[arg(long, default_value_t = 7)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Label column, used to name clusters by majority vote when present.
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long = "missing-token")]
    missing_tokens: Vec<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    /// Model JSON path (default: `<output-dir>/model.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "dosha")]
    label_column: String,
    #[arg(long = "missing-token")]
    missing_tokens: Vec<String>,
    /// Laplace smoothing for mnb.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 0.0)]
    min_gain: f64,
    /// Enable reduced-error post-pruning for dtree.
    #[arg(long)]
    prune: bool,
    #[arg(long, default_value_t = 0.2)]
    prune_fraction: f64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    #[arg(long = "missing-token")]
    missing_tokens: Vec<String>,
    /// Predictions CSV path (default: `<output-dir>/predictions.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    #[arg(long, default_value = "dosha")]
    label_column: String,
    #[arg(long = "missing-token")]
    missing_tokens: Vec<String>,
    /// Report path (default: `<output-dir>/evaluation.<format>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Run feature selection after the split (leakage-free variant).
    #[arg(long)]
    select_after_split: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> prakriti_core::Result<ExitCode> {
    std::fs::create_dir_all(&cli.output_dir)?;
    match &cli.command {
        Command::Synth(args) => cmd_synth(&cli, args),
        Command::Select(args) => cmd_select(&cli, args),
        Command::Cluster(args) => cmd_cluster(&cli, args),
        Command::Train(args) => cmd_train(&cli, args),
        Command::Predict(args) => cmd_predict(&cli, args),
        Command::Evaluate(args) => cmd_evaluate(&cli, args),
        Command::Sweep(args) => cmd_sweep(&cli, args),
    }
}

fn ingest_options(label_column: Option<&str>, missing_tokens: &[String]) -> IngestOptions {
    let mut options = IngestOptions {
        label_column: label_column.map(str::to_string),
        ..Default::default()
    };
    if !missing_tokens.is_empty() {
        options.missing_tokens = missing_tokens.to_vec();
    }
    options
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> prakriti_core::Result<ExitCode> {
    let spec = GeneratorSpec {
        rows: args.rows,
        features: args.features,
        categories_per_feature: CategoryCounts::Uniform(args.categories),
        informative_features: args.informative,
        signal: args.signal,
        missing_rate: args.missing_rate,
        label_column: args.label_column.clone(),
        ..Default::default()
    };
    let table = prakriti_core::synth::generate(&spec, cli.seed)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cli.output_dir.join("synthetic.csv"));
    table.write_csv(&out, "")?;
    println!(
        "synth: wrote {} rows x {} features to {}",
        table.row_count(),
        table.column_count(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_select(cli: &Cli, args: &SelectArgs) -> prakriti_core::Result<ExitCode> {
    let options = ingest_options(Some(&args.label_column), &args.missing_tokens);
    let raw = dataset::load_csv(&args.r#in, &options)?;
    let table = dataset::forward_fill(&raw)?;
    let (ranked, reduced) = select_k_best::<f64>(&table, args.k)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cli.output_dir.join("ranked.csv"));
    std::fs::write(&out, scores_to_csv(&ranked[..args.k]))?;
    if let Some(reduced_out) = &args.reduced_out {
        reduced.write_csv(reduced_out, "")?;
    }
    println!(
        "select: top {} of {} features -> {}",
        args.k,
        table.column_count(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_cluster(cli: &Cli, args: &ClusterArgs) -> prakriti_core::Result<ExitCode> {
    let options = ingest_options(args.label_column.as_deref(), &args.missing_tokens);
    let raw = dataset::load_csv(&args.r#in, &options)?;
    let table = dataset::forward_fill(&raw)?;
    let model = kmodes::fit_with_restarts(&table, args.k, cli.seed, args.max_iter, args.restarts)?;

    let naming = table
        .labels()
        .map(|labels| kmodes::name_clusters(&model, &labels.values, &labels.vocabulary))
        .transpose()?;

    let mut assignments_csv = String::from(match &naming {
        Some(_) => "row,cluster,label\n",
        None => "row,cluster\n",
    });
    for (r, &a) in model.assignments().iter().enumerate() {
        match &naming {
            Some(n) => {
                let label = n.clusters[a]
                    .as_ref()
                    .map(|c| c.label.as_str())
                    .unwrap_or("");
                assignments_csv.push_str(&format!("{r},{a},{label}\n"));
            }
            None => assignments_csv.push_str(&format!("{r},{a}\n")),
        }
    }
    let assignments_path = cli.output_dir.join("assignments.csv");
    std::fs::write(&assignments_path, assignments_csv)?;

    let model_path = cli.output_dir.join("kmodes_model.json");
    std::fs::write(&model_path, model.to_json()?)?;

    if let Some(naming) = &naming {
        for warning in &naming.warnings {
            eprintln!("warning: {warning}");
        }
        let named: Vec<serde_json::Value> = naming
            .clusters
            .iter()
            .enumerate()
            .map(|(c, entry)| match entry {
                Some(n) => serde_json::json!({
                    "cluster": c,
                    "label": n.label,
                    "purity": n.purity,
                }),
                None => serde_json::json!({ "cluster": c, "empty": true }),
            })
            .collect();
        std::fs::write(
            cli.output_dir.join("cluster_naming.json"),
            serde_json::to_string_pretty(&named)?,
        )?;
    }

    println!(
        "cluster: k={} converged in {} iterations, final cost {} -> {}",
        model.k(),
        model.iterations_run(),
        model.final_cost(),
        assignments_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> prakriti_core::Result<ExitCode> {
    let options = ingest_options(Some(&args.label_column), &args.missing_tokens);
    let raw = dataset::load_csv(&args.r#in, &options)?;
    let table = dataset::forward_fill(&raw)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cli.output_dir.join("model.json"));
    let kind = match args.model {
        ModelArg::Mnb => {
            let model = prakriti_core::mnb::fit::<f64>(&table, args.alpha)?;
            std::fs::write(&out, model.to_json()?)?;
            "mnb"
        }
        ModelArg::Dtree => {
            let params = TreeParams64 {
                max_depth: args.max_depth,
                min_samples_split: args.min_samples_split,
                min_gain: args.min_gain,
                prune: args.prune,
                prune_fraction: args.prune_fraction,
                seed: cli.seed,
            };
            let model = dtree::fit(&table, &params)?;
            std::fs::write(&out, model.to_json()?)?;
            "dtree"
        }
    };
    println!(
        "train: fitted {kind} on {} rows -> {}",
        table.row_count(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// A loaded model of any kind, unified behind row prediction.
enum AnyModel {
    Mnb(MnbModel<f64>),
    Dtree(TreeModel),
    Kmodes(ClusterModel),
}

impl AnyModel {
    fn load(path: &Path) -> prakriti_core::Result<AnyModel> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let kind = value
            .get("model_type")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Format("model file lacks a model_type field".to_string()))?;
        match kind {
            "mnb" => Ok(AnyModel::Mnb(MnbModel::from_json(&text)?)),
            "dtree" => Ok(AnyModel::Dtree(TreeModel::from_json(&text)?)),
            "kmodes" => Ok(AnyModel::Kmodes(ClusterModel::from_json(&text)?)),
            other => Err(Error::Format(format!("unknown model_type '{other}'"))),
        }
    }

    fn column_names(&self) -> &[String] {
        match self {
            AnyModel::Mnb(m) => m.column_names(),
            AnyModel::Dtree(m) => m.column_names(),
            AnyModel::Kmodes(m) => m.column_names(),
        }
    }

    fn vocabularies(&self) -> &[Vec<String>] {
        match self {
            AnyModel::Mnb(m) => m.vocabularies(),
            AnyModel::Dtree(m) => m.vocabularies(),
            AnyModel::Kmodes(m) => m.vocabularies(),
        }
    }

    fn class_names(&self) -> Option<&[String]> {
        match self {
            AnyModel::Mnb(m) => Some(m.class_names()),
            AnyModel::Dtree(m) => Some(m.class_names()),
            AnyModel::Kmodes(_) => None,
        }
    }

    /// Predicts a display string per row: class names for classifiers,
    /// `cluster_<id>` for k-modes.
    fn predict_name(&self, row: &[Option<usize>]) -> prakriti_core::Result<String> {
        match self {
            AnyModel::Mnb(m) => Ok(m.class_names()[m.predict(row)?].clone()),
            AnyModel::Dtree(m) => Ok(m.class_names()[m.predict(row)?].clone()),
            AnyModel::Kmodes(m) => Ok(format!("cluster_{}", kmodes::predict(m, row)?)),
        }
    }

    fn predict_index(&self, row: &[Option<usize>]) -> prakriti_core::Result<usize> {
        match self {
            AnyModel::Mnb(m) => m.predict(row),
            AnyModel::Dtree(m) => m.predict(row),
            AnyModel::Kmodes(m) => kmodes::predict(m, row),
        }
    }
}

fn cmd_predict(cli: &Cli, args: &PredictArgs) -> prakriti_core::Result<ExitCode> {
    let model = AnyModel::load(&args.model)?;
    let options = ingest_options(None, &args.missing_tokens);
    let table = dataset::load_csv(&args.r#in, &options)?;
    let rows = dataset::reencode_rows(&table, model.column_names(), model.vocabularies())?;
    let mut csv = String::from("row,prediction\n");
    for (r, row) in rows.iter().enumerate() {
        csv.push_str(&format!("{r},{}\n", model.predict_name(row)?));
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cli.output_dir.join("predictions.csv"));
    std::fs::write(&out, csv)?;
    println!("predict: {} rows -> {}", rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(cli: &Cli, args: &EvaluateArgs) -> prakriti_core::Result<ExitCode> {
    let model = AnyModel::load(&args.model)?;
    let class_names = model
        .class_names()
        .ok_or_else(|| {
            Error::Argument("evaluate requires a classifier model (mnb or dtree)".to_string())
        })?
        .to_vec();
    let options = ingest_options(Some(&args.label_column), &args.missing_tokens);
    let table = dataset::load_csv(&args.r#in, &options)?;
    let labels = table
        .labels()
        .ok_or_else(|| Error::Argument("evaluation data has no label column".to_string()))?;
    let truth: Vec<usize> = labels
        .values
        .iter()
        .map(|&v| {
            let name = &labels.vocabulary[v];
            class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Argument(format!("label '{name}' unknown to the model")))
        })
        .collect::<prakriti_core::Result<_>>()?;
    let rows = dataset::reencode_rows(&table, model.column_names(), model.vocabularies())?;
    let predictions: Vec<usize> = rows
        .iter()
        .map(|row| model.predict_index(row))
        .collect::<prakriti_core::Result<_>>()?;
    let cm = confusion_named(&truth, &predictions, class_names)?;
    let rep = report::<f64>(&cm)?;

    let out = args.out.clone().unwrap_or_else(|| {
        cli.output_dir.join(match cli.format {
            Format::Csv => "evaluation.csv",
            Format::Json => "evaluation.json",
        })
    });
    match cli.format {
        Format::Csv => {
            let csv = format!(
                "accuracy,precision,f_score,recall\n{},{},{},{}\n",
                rep.accuracy, rep.precision_weighted, rep.f1_weighted, rep.recall_weighted
            );
            std::fs::write(&out, csv)?;
        }
        Format::Json => std::fs::write(&out, serde_json::to_string_pretty(&rep)?)?,
    }
    println!(
        "evaluate: accuracy {:.4} on {} rows -> {}",
        rep.accuracy,
        truth.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> prakriti_core::Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => experiment::parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if cli.config.is_none() {
        config.seed = cli.seed;
    }
    if args.select_after_split {
        config.select_after_split = true;
    }

    let result = experiment::run_sweep(&config)?;

    let sweep_path = cli.output_dir.join("sweep.csv");
    std::fs::write(&sweep_path, result.to_csv())?;

    let cells_dir = cli.output_dir.join("cells");
    std::fs::create_dir_all(&cells_dir)?;
    for row in &result.rows {
        let cell = serde_json::json!({
            "model": row.model,
            "test_size": row.test_size,
            "n_features": row.n_features,
            "seed": row.seed,
            "wall_ms": row.wall_ms,
            "report": row.report,
        });
        let name = format!("{}_{}_{}.json", row.model, row.test_size, row.n_features);
        std::fs::write(cells_dir.join(name), serde_json::to_string_pretty(&cell)?)?;
    }

    for &model in &config.models {
        for &test_size in &config.test_sizes {
            if let Ok(plot) = experiment::emit_plot_data(&result, model, test_size) {
                let base = format!("plot_{model}_{test_size}");
                std::fs::write(cli.output_dir.join(format!("{base}.csv")), plot.to_csv())?;
                if cli.format == Format::Json {
                    std::fs::write(cli.output_dir.join(format!("{base}.json")), plot.to_json()?)?;
                }
            }
        }
    }

    if !result.failures.is_empty() {
        std::fs::write(
            cli.output_dir.join("failures.json"),
            serde_json::to_string_pretty(
                &result
                    .failures
                    .iter()
                    .map(|f| {
                        serde_json::json!({
                            "model": f.model,
                            "test_size": f.test_size,
                            "n_features": f.n_features,
                            "error": f.error,
                        })
                    })
                    .collect::<Vec<_>>(),
            )?,
        )?;
        for f in &result.failures {
            eprintln!(
                "cell failed: {} test_size={} n_features={}: {}",
                f.model, f.test_size, f.n_features, f.error
            );
        }
    }

    println!(
        "sweep: {} rows, {} failures -> {}",
        result.rows.len(),
        result.failures.len(),
        sweep_path.display()
    );
    Ok(if result.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
