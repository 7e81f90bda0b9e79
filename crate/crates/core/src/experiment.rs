//! End-to-end pipeline and sweep driver.
//!
//! A sweep runs the full cross product of models, test sizes, and feature
//! counts over one prepared table: load, forward-fill, optional k-modes
//! relabeling, chi-square top-K reduction, seeded split, fit, predict, report.
//! Feature selection runs on the full table before splitting by default
//! (`select_after_split` gives the leakage-free variant). Each cell derives
//! its own seed from the master seed and the cell descriptor, so any cell can
//! be reproduced in isolation.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{self, CategoricalTable, IngestOptions, LabelColumn};
use crate::dtree::{self, TreeParams};
use crate::error::{Error, Result};
use crate::feature_selection::select_k_best;
use crate::kmodes;
use crate::metrics::{confusion_named, report, MetricsReport};
use crate::mnb;
use crate::rng::{seed_for, DEFAULT_SEED};
use crate::synth::{CategoryCounts, GeneratorSpec};

/// Supported configuration schema version.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Where the experiment data comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        options: IngestOptions,
    },
    Synthetic(GeneratorSpec),
}

/// Which column provides the class labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    /// Use the explicit label column.
    Explicit,
    /// Cluster with k-modes, name clusters by majority label, and relabel
    /// every row with its cluster's name.
    KmodesDerived,
}

/// Classifier selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mnb,
    Dtree,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Mnb => write!(f, "mnb"),
            ModelKind::Dtree => write!(f, "dtree"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnb" => Ok(ModelKind::Mnb),
            "dtree" => Ok(ModelKind::Dtree),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// K-modes settings for derived labeling.
#[derive(Debug, Clone)]
pub struct KmodesSettings {
    pub k: usize,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for KmodesSettings {
    fn default() -> Self {
        KmodesSettings {
            k: 7,
            max_iter: kmodes::DEFAULT_MAX_ITER,
            restarts: 1,
        }
    }
}

/// Full experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub label_source: LabelSource,
    pub test_sizes: Vec<f64>,
    pub feature_counts: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub seed: u64,
    pub alpha: f64,
    pub tree: TreeParams<f64>,
    pub stratified: bool,
    pub select_after_split: bool,
    pub kmodes: KmodesSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: DataSource::Synthetic(GeneratorSpec {
                rows: 1000,
                ..Default::default()
            }),
            label_source: LabelSource::Explicit,
            test_sizes: vec![0.1, 0.2],
            feature_counts: vec![20, 40, 60, 80, 100],
            models: vec![ModelKind::Mnb, ModelKind::Dtree],
            seed: DEFAULT_SEED,
            alpha: 1.0,
            tree: TreeParams::default(),
            stratified: false,
            select_after_split: false,
            kmodes: KmodesSettings::default(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.test_sizes.is_empty() || self.feature_counts.is_empty() || self.models.is_empty() {
            return Err(Error::Config(
                "test_sizes, feature_counts, and models must be non-empty".to_string(),
            ));
        }
        if let Some(&bad) = self.test_sizes.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::Config(format!(
                "test sizes must lie in (0, 1), got {bad}"
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// One sweep cell's outcome in table layout.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub test_size: f64,
    pub n_features: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub f_score: f64,
    pub recall: f64,
    pub seed: u64,
    pub wall_ms: f64,
    /// Full per-cell report backing the four headline numbers.
    pub report: MetricsReport<f64>,
}

/// A cell that failed, with the stage-attributed error text.
#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub model: ModelKind,
    pub test_size: f64,
    pub n_features: usize,
    pub error: String,
}

/// Full sweep outcome: rows in table order plus any per-cell failures.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    /// Renders the sweep as CSV with the table column order.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("model,test_size,n_features,accuracy,precision,f_score,recall\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.model,
                row.test_size,
                row.n_features,
                row.accuracy,
                row.precision,
                row.f_score,
                row.recall
            ));
        }
        out
    }
}

/// Grouped-bar data for one (model, test size) selection: one group per
/// feature count, four bars per group.
#[derive(Debug, Clone, Serialize)]
pub struct PlotData {
    pub model: ModelKind,
    pub test_size: f64,
    pub groups: Vec<PlotGroup>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotGroup {
    pub n_features: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub f_score: f64,
    pub recall: f64,
}

impl PlotData {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_features,accuracy,precision,f_score,recall\n");
        for g in &self.groups {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                g.n_features, g.accuracy, g.precision, g.f_score, g.recall
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Extracts the grouped-bar data for one model and test size.
pub fn emit_plot_data(result: &SweepResult, model: ModelKind, test_size: f64) -> Result<PlotData> {
    let groups: Vec<PlotGroup> = result
        .rows
        .iter()
        .filter(|r| r.model == model && r.test_size == test_size)
        .map(|r| PlotGroup {
            n_features: r.n_features,
            accuracy: r.accuracy,
            precision: r.precision,
            f_score: r.f_score,
            recall: r.recall,
        })
        .collect();
    if groups.is_empty() {
        return Err(Error::Selection(format!(
            "no sweep rows for model {model} at test size {test_size}"
        )));
    }
    Ok(PlotData {
        model,
        test_size,
        groups,
    })
}

/// The shared pipeline prefix: loaded, imputed, and labeled data.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub table: CategoricalTable,
}

/// Loads, imputes, and (if configured) relabels the data. Runs once per
/// sweep so every cell sees the same labels.
pub fn prepare(config: &ExperimentConfig) -> Result<PreparedData> {
    config.validate()?;
    let raw = match &config.source {
        DataSource::Csv { path, options } => {
            dataset::load_csv(path, options).map_err(|e| Error::at_stage("load", e))?
        }
        DataSource::Synthetic(spec) => crate::synth::generate(spec, seed_for(config.seed, "data"))
            .map_err(|e| Error::at_stage("load", e))?,
    };
    let filled = dataset::forward_fill(&raw).map_err(|e| Error::at_stage("forward_fill", e))?;
    let table = match config.label_source {
        LabelSource::Explicit => {
            if filled.labels().is_none() {
                return Err(Error::at_stage(
                    "label",
                    Error::Argument("explicit label source requires a label column".to_string()),
                ));
            }
            filled
        }
        LabelSource::KmodesDerived => {
            relabel_by_clusters(&filled, config).map_err(|e| Error::at_stage("label", e))?
        }
    };
    Ok(PreparedData { table })
}

/// Clusters the table and replaces each row's label with its cluster's
/// majority-vote name.
fn relabel_by_clusters(
    table: &CategoricalTable,
    config: &ExperimentConfig,
) -> Result<CategoricalTable> {
    let labels = table.labels().ok_or_else(|| {
        Error::Argument("k-modes labeling needs an explicit label column to vote with".to_string())
    })?;
    let model = kmodes::fit_with_restarts(
        table,
        config.kmodes.k,
        seed_for(config.seed, "labeling"),
        config.kmodes.max_iter,
        config.kmodes.restarts,
    )?;
    let naming = kmodes::name_clusters(&model, &labels.values, &labels.vocabulary)?;
    let values: Vec<usize> = model
        .assignments()
        .iter()
        .map(|&a| {
            let named = naming.clusters[a]
                .as_ref()
                .expect("assigned clusters are non-empty");
            labels
                .vocabulary
                .iter()
                .position(|v| *v == named.label)
                .expect("cluster names come from the label vocabulary")
        })
        .collect();
    table.with_labels(LabelColumn {
        name: labels.name.clone(),
        vocabulary: labels.vocabulary.clone(),
        values,
    })
}

fn cell_seed(
    config: &ExperimentConfig,
    model: ModelKind,
    test_size: f64,
    n_features: usize,
) -> u64 {
    seed_for(
        config.seed,
        &format!("cell/{model}/{test_size}/{n_features}"),
    )
}

/// Runs one pipeline cell on prepared data.
pub fn run_cell(
    prepared: &PreparedData,
    config: &ExperimentConfig,
    test_size: f64,
    n_features: usize,
    model: ModelKind,
) -> Result<MetricsReport<f64>> {
    let table = &prepared.table;
    if n_features > table.column_count() {
        return Err(Error::at_stage(
            "select",
            Error::Argument(format!(
                "{n_features} features requested, {} available",
                table.column_count()
            )),
        ));
    }
    let seed = cell_seed(config, model, test_size, n_features);

    let (train, test) = if config.select_after_split {
        let pair = dataset::train_test_split(table, test_size, seed, config.stratified)
            .map_err(|e| Error::at_stage("split", e))?;
        let (ranked, train_reduced) = select_k_best::<f64>(&pair.train, n_features)
            .map_err(|e| Error::at_stage("select", e))?;
        let mut kept: Vec<usize> = ranked[..n_features]
            .iter()
            .map(|s| {
                pair.test
                    .column_index(&s.feature_name)
                    .expect("train and test share columns")
            })
            .collect();
        kept.sort_unstable();
        let test_reduced = pair
            .test
            .select_columns(&kept)
            .map_err(|e| Error::at_stage("select", e))?;
        (train_reduced, test_reduced)
    } else {
        let (_, reduced) =
            select_k_best::<f64>(table, n_features).map_err(|e| Error::at_stage("select", e))?;
        let pair = dataset::train_test_split(&reduced, test_size, seed, config.stratified)
            .map_err(|e| Error::at_stage("split", e))?;
        (pair.train, pair.test)
    };

    let truth = &test.labels().expect("prepared table carries labels").values;
    let class_names = test.labels().expect("labels present").vocabulary.clone();

    let predictions: Vec<usize> = match model {
        ModelKind::Mnb => {
            let fitted =
                mnb::fit::<f64>(&train, config.alpha).map_err(|e| Error::at_stage("fit", e))?;
            (0..test.row_count())
                .map(|r| fitted.predict(test.row(r)))
                .collect::<Result<_>>()
                .map_err(|e| Error::at_stage("predict", e))?
        }
        ModelKind::Dtree => {
            let params = TreeParams {
                seed: seed_for(seed, "dtree/prune-holdout"),
                ..config.tree.clone()
            };
            let fitted = dtree::fit(&train, &params).map_err(|e| Error::at_stage("fit", e))?;
            (0..test.row_count())
                .map(|r| fitted.predict(test.row(r)))
                .collect::<Result<_>>()
                .map_err(|e| Error::at_stage("predict", e))?
        }
    };

    let cm = confusion_named(truth, &predictions, class_names)
        .map_err(|e| Error::at_stage("report", e))?;
    report::<f64>(&cm).map_err(|e| Error::at_stage("report", e))
}

/// Runs the full pipeline for one cell, from raw data to metrics.
pub fn run_pipeline(
    config: &ExperimentConfig,
    test_size: f64,
    n_features: usize,
    model: ModelKind,
) -> Result<MetricsReport<f64>> {
    let prepared = prepare(config)?;
    run_cell(&prepared, config, test_size, n_features, model)
}

/// Runs the full cross product of models, test sizes, and feature counts.
///
/// Rows come out in table order: models outer, then test sizes, then feature
/// counts. A failing cell is recorded and the sweep continues.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let prepared = prepare(config)?;
    if let Some(&bad) = config
        .feature_counts
        .iter()
        .find(|&&k| k > prepared.table.column_count())
    {
        return Err(Error::Config(format!(
            "feature count {bad} exceeds the {} available features",
            prepared.table.column_count()
        )));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &model in &config.models {
        for &test_size in &config.test_sizes {
            for &n_features in &config.feature_counts {
                let started = Instant::now();
                match run_cell(&prepared, config, test_size, n_features, model) {
                    Ok(report) => rows.push(SweepRow {
                        model,
                        test_size,
                        n_features,
                        accuracy: report.accuracy,
                        precision: report.precision_weighted,
                        f_score: report.f1_weighted,
                        recall: report.recall_weighted,
                        seed: cell_seed(config, model, test_size, n_features),
                        wall_ms: started.elapsed().as_secs_f64() * 1e3,
                        report,
                    }),
                    Err(e) => failures.push(CellFailure {
                        model,
                        test_size,
                        n_features,
                        error: e.to_string(),
                    }),
                }
            }
        }
    }
    Ok(SweepResult { rows, failures })
}

// ---------------------------------------------------------------------------
// Config file (TOML, versioned)
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_test_sizes")]
    test_sizes: Vec<f64>,
    #[serde(default = "default_feature_counts")]
    feature_counts: Vec<usize>,
    #[serde(default = "default_models")]
    models: Vec<String>,
    #[serde(default = "default_label_source")]
    label_source: String,
    #[serde(default)]
    stratified: bool,
    #[serde(default)]
    select_after_split: bool,
    #[serde(default = "default_alpha")]
    alpha: f64,
    data: DataSection,
    #[serde(default)]
    tree: TreeSection,
    #[serde(default)]
    kmodes: KmodesSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_test_sizes() -> Vec<f64> {
    vec![0.1, 0.2]
}

fn default_feature_counts() -> Vec<usize> {
    vec![20, 40, 60, 80, 100]
}

fn default_models() -> Vec<String> {
    vec!["mnb".to_string(), "dtree".to_string()]
}

fn default_label_source() -> String {
    "explicit".to_string()
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    kind: String,
    // CSV source
    path: Option<PathBuf>,
    label_column: Option<String>,
    missing_tokens: Option<Vec<String>>,
    // Synthetic source
    rows: Option<usize>,
    features: Option<usize>,
    categories: Option<usize>,
    informative: Option<usize>,
    signal: Option<f64>,
    missing_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeSection {
    max_depth: Option<usize>,
    min_samples_split: Option<usize>,
    min_gain: Option<f64>,
    prune: Option<bool>,
    prune_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct KmodesSection {
    k: Option<usize>,
    max_iter: Option<usize>,
    restarts: Option<usize>,
}

/// Parses a TOML experiment configuration.
///
/// The file must carry `schema_version = 1`; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {}, expected {CONFIG_SCHEMA_VERSION}",
            file.schema_version
        )));
    }
    let source = match file.data.kind.as_str() {
        "csv" => {
            let path = file
                .data
                .path
                .clone()
                .ok_or_else(|| Error::Config("csv data source requires 'path'".to_string()))?;
            let mut options = IngestOptions {
                label_column: file.data.label_column.clone(),
                ..Default::default()
            };
            if let Some(tokens) = &file.data.missing_tokens {
                options.missing_tokens = tokens.clone();
            }
            DataSource::Csv { path, options }
        }
        "synthetic" => {
            let defaults = GeneratorSpec::default();
            DataSource::Synthetic(GeneratorSpec {
                rows: file.data.rows.unwrap_or(1000),
                features: file.data.features.unwrap_or(defaults.features),
                categories_per_feature: CategoryCounts::Uniform(file.data.categories.unwrap_or(3)),
                informative_features: file
                    .data
                    .informative
                    .unwrap_or(defaults.informative_features),
                signal: file.data.signal.unwrap_or(defaults.signal),
                missing_rate: file.data.missing_rate.unwrap_or(defaults.missing_rate),
                label_column: file
                    .data
                    .label_column
                    .clone()
                    .unwrap_or(defaults.label_column),
                ..defaults
            })
        }
        other => {
            return Err(Error::Config(format!(
                "unknown data kind '{other}' (expected 'csv' or 'synthetic')"
            )))
        }
    };
    let label_source = match file.label_source.as_str() {
        "explicit" => LabelSource::Explicit,
        "kmodes" => LabelSource::KmodesDerived,
        other => {
            return Err(Error::Config(format!(
                "unknown label source '{other}' (expected 'explicit' or 'kmodes')"
            )))
        }
    };
    let models: Vec<ModelKind> = file
        .models
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_>>()?;
    let tree_defaults = TreeParams::<f64>::default();
    let config = ExperimentConfig {
        source,
        label_source,
        test_sizes: file.test_sizes,
        feature_counts: file.feature_counts,
        models,
        seed: file.seed,
        alpha: file.alpha,
        tree: TreeParams {
            max_depth: file.tree.max_depth,
            min_samples_split: file
                .tree
                .min_samples_split
                .unwrap_or(tree_defaults.min_samples_split),
            min_gain: file.tree.min_gain.unwrap_or(0.0),
            prune: file.tree.prune.unwrap_or(false),
            prune_fraction: file
                .tree
                .prune_fraction
                .unwrap_or(tree_defaults.prune_fraction),
            seed: file.seed,
        },
        stratified: file.stratified,
        select_after_split: file.select_after_split,
        kmodes: KmodesSettings {
            k: file.kmodes.k.unwrap_or(7),
            max_iter: file.kmodes.max_iter.unwrap_or(kmodes::DEFAULT_MAX_ITER),
            restarts: file.kmodes.restarts.unwrap_or(1),
        },
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            source: DataSource::Synthetic(GeneratorSpec {
                rows: 120,
                features: 12,
                informative_features: 6,
                signal: 0.95,
                ..Default::default()
            }),
            test_sizes: vec![0.2],
            feature_counts: vec![4, 8],
            ..Default::default()
        }
    }

    #[test]
    fn sweep_emits_full_cross_product_in_table_order() {
        let config = ExperimentConfig {
            test_sizes: vec![0.1, 0.2],
            feature_counts: vec![4, 8, 12],
            ..small_config()
        };
        let result = run_sweep(&config).unwrap();
        assert!(result.failures.is_empty());
        assert_eq!(result.rows.len(), 2 * 2 * 3);
        // Models outer, then test sizes, then feature counts.
        let key: Vec<(String, f64, usize)> = result
            .rows
            .iter()
            .map(|r| (r.model.to_string(), r.test_size, r.n_features))
            .collect();
        let mut expected = Vec::new();
        for model in ["mnb", "dtree"] {
            for ts in [0.1, 0.2] {
                for k in [4usize, 8, 12] {
                    expected.push((model.to_string(), ts, k));
                }
            }
        }
        assert_eq!(key, expected);
        for row in &result.rows {
            assert!((0.0..=1.0).contains(&row.accuracy));
            assert_eq!(row.recall, row.accuracy);
        }
    }

    #[test]
    fn sweep_csv_has_exact_header_and_row_count() {
        let result = run_sweep(&small_config()).unwrap();
        let csv = result.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "model,test_size,n_features,accuracy,precision,f_score,recall"
        );
        assert_eq!(lines.count(), result.rows.len());
    }

    #[test]
    fn rerunning_a_cell_reproduces_its_sweep_row() {
        let config = small_config();
        let result = run_sweep(&config).unwrap();
        for row in &result.rows {
            let report = run_pipeline(&config, row.test_size, row.n_features, row.model).unwrap();
            assert_eq!(report.accuracy, row.accuracy);
            assert_eq!(report.precision_weighted, row.precision);
            assert_eq!(report.f1_weighted, row.f_score);
            assert_eq!(report.recall_weighted, row.recall);
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let config = small_config();
        let a = run_pipeline(&config, 0.2, 6, ModelKind::Mnb).unwrap();
        let b = run_pipeline(&config, 0.2, 6, ModelKind::Mnb).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.f1_weighted, b.f1_weighted);
    }

    #[test]
    fn selecting_all_features_matches_skipping_selection() {
        let config = small_config();
        let prepared = prepare(&config).unwrap();
        let all = prepared.table.column_count();
        let with_selection = run_cell(&prepared, &config, 0.2, all, ModelKind::Mnb).unwrap();

        // Manual composition without the selection stage.
        let seed = cell_seed(&config, ModelKind::Mnb, 0.2, all);
        let pair = dataset::train_test_split(&prepared.table, 0.2, seed, false).unwrap();
        let model = mnb::fit::<f64>(&pair.train, config.alpha).unwrap();
        let truth = &pair.test.labels().unwrap().values;
        let predictions: Vec<usize> = (0..pair.test.row_count())
            .map(|r| model.predict(pair.test.row(r)).unwrap())
            .collect();
        let cm = confusion_named(
            truth,
            &predictions,
            pair.test.labels().unwrap().vocabulary.clone(),
        )
        .unwrap();
        let manual = report::<f64>(&cm).unwrap();
        assert_eq!(with_selection.accuracy, manual.accuracy);
        assert_eq!(with_selection.f1_weighted, manual.f1_weighted);
    }

    #[test]
    fn sweep_cells_are_independent_of_grid_order() {
        let forward = small_config();
        let reversed = ExperimentConfig {
            models: vec![ModelKind::Dtree, ModelKind::Mnb],
            feature_counts: vec![8, 4],
            ..small_config()
        };
        let a = run_sweep(&forward).unwrap();
        let b = run_sweep(&reversed).unwrap();
        for row in &a.rows {
            let twin = b
                .rows
                .iter()
                .find(|r| {
                    r.model == row.model
                        && r.test_size == row.test_size
                        && r.n_features == row.n_features
                })
                .expect("same cells in both grids");
            assert_eq!(twin.accuracy, row.accuracy);
            assert_eq!(twin.precision, row.precision);
            assert_eq!(twin.f_score, row.f_score);
            assert_eq!(twin.recall, row.recall);
        }
    }

    #[test]
    fn select_after_split_runs_the_leakage_free_order() {
        let config = ExperimentConfig {
            select_after_split: true,
            ..small_config()
        };
        let report = run_pipeline(&config, 0.2, 6, ModelKind::Mnb).unwrap();
        assert!((0.0..=1.0).contains(&report.accuracy));
        assert_eq!(report.recall_weighted, report.accuracy);
        // Deterministic like the default order.
        let again = run_pipeline(&config, 0.2, 6, ModelKind::Mnb).unwrap();
        assert_eq!(report.accuracy, again.accuracy);
        assert_eq!(report.f1_weighted, again.f1_weighted);
    }

    #[test]
    fn kmodes_labeling_replaces_labels_with_cluster_names() {
        let config = ExperimentConfig {
            label_source: LabelSource::KmodesDerived,
            ..small_config()
        };
        let prepared = prepare(&config).unwrap();
        let labels = prepared.table.labels().unwrap();
        assert_eq!(labels.values.len(), prepared.table.row_count());
        // Derived labels still use the dosha vocabulary.
        assert_eq!(labels.vocabulary.len(), 7);
    }

    #[test]
    fn strong_signal_pipeline_reaches_high_accuracy() {
        let config = ExperimentConfig {
            source: DataSource::Synthetic(GeneratorSpec {
                rows: 400,
                features: 30,
                informative_features: 10,
                signal: 0.95,
                ..Default::default()
            }),
            ..small_config()
        };
        let report = run_pipeline(&config, 0.2, 10, ModelKind::Mnb).unwrap();
        assert!(report.accuracy >= 0.85, "accuracy {}", report.accuracy);
    }

    #[test]
    fn noiseless_signal_classifies_the_test_split_perfectly() {
        // Deterministic informative cells: 20 selected features carry each
        // class's full signature, so held-out accuracy lands at exactly 1.
        let config = ExperimentConfig {
            source: DataSource::Synthetic(GeneratorSpec {
                rows: 400,
                features: 60,
                informative_features: 20,
                signal: 1.0,
                ..Default::default()
            }),
            ..small_config()
        };
        let report = run_pipeline(&config, 0.2, 20, ModelKind::Mnb).unwrap();
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn plot_data_projects_sweep_rows_exactly() {
        let config = small_config();
        let result = run_sweep(&config).unwrap();
        let plot = emit_plot_data(&result, ModelKind::Mnb, 0.2).unwrap();
        assert_eq!(plot.groups.len(), config.feature_counts.len());
        for (g, row) in plot.groups.iter().zip(
            result
                .rows
                .iter()
                .filter(|r| r.model == ModelKind::Mnb && r.test_size == 0.2),
        ) {
            assert_eq!(g.n_features, row.n_features);
            assert_eq!(g.accuracy, row.accuracy);
            assert_eq!(g.precision, row.precision);
            assert_eq!(g.f_score, row.f_score);
            assert_eq!(g.recall, row.recall);
        }
        assert!(matches!(
            emit_plot_data(&result, ModelKind::Mnb, 0.5),
            Err(Error::Selection(_))
        ));
    }

    #[test]
    fn failing_cells_are_recorded_and_the_sweep_continues() {
        // A test size that rounds to zero rows breaks its cells at the
        // report stage; the other test size still completes.
        let config = ExperimentConfig {
            test_sizes: vec![0.001, 0.2],
            ..small_config()
        };
        let result = run_sweep(&config).unwrap();
        assert_eq!(result.failures.len(), 2 * 2); // both models x both counts
        assert_eq!(result.rows.len(), 2 * 2);
        for failure in &result.failures {
            assert_eq!(failure.test_size, 0.001);
            assert!(failure.error.contains("report"), "{}", failure.error);
        }
        for row in &result.rows {
            assert_eq!(row.test_size, 0.2);
        }
    }

    #[test]
    fn oversized_feature_count_is_a_config_error() {
        let config = ExperimentConfig {
            feature_counts: vec![4, 999],
            ..small_config()
        };
        assert!(matches!(run_sweep(&config), Err(Error::Config(_))));
    }

    #[test]
    fn config_file_round_trip() {
        let text = r#"
schema_version = 1
seed = 7
test_sizes = [0.2]
feature_counts = [4, 8]
models = ["mnb"]

[data]
kind = "synthetic"
rows = 100
features = 12
informative = 5
signal = 0.9
"#;
        let config = parse_config(text).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.models, vec![ModelKind::Mnb]);
        assert_eq!(config.feature_counts, vec![4, 8]);
        match &config.source {
            DataSource::Synthetic(spec) => {
                assert_eq!(spec.rows, 100);
                assert_eq!(spec.features, 12);
            }
            other => panic!("expected synthetic source, got {other:?}"),
        }
    }

    #[test]
    fn config_rejects_unknown_version_and_bad_values() {
        assert!(parse_config("schema_version = 2\n[data]\nkind = \"synthetic\"\n").is_err());
        assert!(parse_config("schema_version = 1\n[data]\nkind = \"nope\"\n").is_err());
        assert!(parse_config(
            "schema_version = 1\ntest_sizes = [1.5]\n[data]\nkind = \"synthetic\"\n"
        )
        .is_err());
        assert!(parse_config(
            "schema_version = 1\nmodels = [\"svm\"]\n[data]\nkind = \"synthetic\"\n"
        )
        .is_err());
    }
}
