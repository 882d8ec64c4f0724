//! End-to-end pipeline stages and artifact files.
//!
//! Every stage is a pure function of (config, prepared data); commands
//! recompute upstream stages deterministically instead of reading their
//! artifacts, so running `select`, `train`, `evaluate` one after another
//! produces byte-identical files to a single [`run_all`] invocation.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! synth/cohort.csv, synth/manifest.json
//! dataset/missing_report.json, split_report.json, dedup_report.json
//! select/encodings.json, variance_report.json, iv_scores.json,
//!        correlation.json, graph.json, graph.dot, cliques.json,
//!        binning_specs.json
//! train/model.json, grid_search.json
//! evaluate/report_<split>.json, roc_<split>.csv, calibration_<split>.csv
//! explain/coefficients.json, shap.csv, consistency.json
//! compare/comparison.json
//! ```
//!
//! Selection statistics (WoE tables, IVs, variance, correlations, binning)
//! are computed on the training split only; transforms apply everywhere.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::binning::{self, BinConstraints, BinningSpec};
use crate::config::PipelineConfig;
use crate::dataset::{
    self, Column, ColumnData, ColumnKind, Dataset, DedupReport, MissingReport, Schema, SplitReport,
    SplitTag, SyntheticManifest,
};
use crate::encoding::{self, VarianceReport, WoeMap};
use crate::error::{Error, Result};
use crate::eval::{self, EvaluationReport, EvaluationSettings, RocPoint};
use crate::explain::{self, CoefficientReport, ConsistencyReport, ShapMatrix};
use crate::graph_select::{self, CliqueReport, CorrelationGraph};
use crate::model::{self, FeatureMatrix, FitOptions, GridSearchResult, LogisticModel};
use crate::par;

/// Cohort after load, cleaning, split, and dedup.
pub struct PreparedData {
    pub dataset: Dataset,
    pub missing: MissingReport,
    pub split: SplitReport,
    pub dedup: Option<DedupReport>,
}

fn build_schema(config: &PipelineConfig) -> Result<Schema> {
    if let Some(path) = &config.manifest {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: SyntheticManifest = serde_json::from_str(&text)?;
        return Ok(manifest.schema);
    }
    if config.numeric_columns.is_empty() && config.categorical_columns.is_empty() {
        return Err(Error::Config(
            "no feature columns declared (set numeric_columns/categorical_columns or manifest)"
                .into(),
        ));
    }
    let mut columns = Vec::new();
    for name in &config.numeric_columns {
        columns.push((name.clone(), ColumnKind::Numeric));
    }
    for name in &config.categorical_columns {
        columns.push((name.clone(), ColumnKind::Categorical));
    }
    Ok(Schema {
        columns,
        target: config.target_column.clone(),
        patient_id: config.patient_id_column.clone(),
        admit_time: config.admit_time_column.clone(),
    })
}

/// Load (or synthesize) the cohort, then clean, split, and dedup it.
pub fn prepare(config: &PipelineConfig) -> Result<PreparedData> {
    let dataset = match &config.input {
        Some(path) => {
            let schema = build_schema(config)?;
            dataset::load_csv(path, &schema).map_err(|e| e.stage("load"))?
        }
        None => {
            let spec = config.to_synthetic_spec();
            dataset::generate_synthetic(&spec)
                .map_err(|e| e.stage("synth"))?
                .0
        }
    };
    let dataset = match &config.age_clip_column {
        Some(column) => dataset::clip_age(&dataset, column).map_err(|e| e.stage("clip_age"))?,
        None => dataset,
    };
    let (dataset, missing) = dataset::handle_missing(&dataset).map_err(|e| e.stage("missing"))?;
    let (dataset, split) =
        dataset::temporal_split(&dataset, config.split, config.stage_seed("split"))
            .map_err(|e| e.stage("split"))?;
    let (dataset, dedup) = if dataset.patient_id.is_some() {
        let (ds, report) = dataset::dedup_patients(&dataset, config.stage_seed("dedup"))
            .map_err(|e| e.stage("dedup"))?;
        (ds, Some(report))
    } else {
        (dataset, None)
    };
    Ok(PreparedData {
        dataset,
        missing,
        split,
        dedup,
    })
}

/// The plain per-feature encoder used before selection.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BasicEncoder {
    /// Categorical: category-level WoE table.
    WoeMap(WoeMap),
    /// Numeric: quantile prebins, one bin each.
    Binning(BinningSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureEncoding {
    pub feature: String,
    pub kind: ColumnKind,
    pub basic: BasicEncoder,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IvScore {
    pub feature: String,
    pub iv: f64,
    pub method: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationArtifact {
    pub names: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

/// Serializable summary of the selection stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectArtifacts {
    pub encodings: Vec<FeatureEncoding>,
    pub variance: VarianceReport,
    pub iv_scores: Vec<IvScore>,
    pub correlation: CorrelationArtifact,
    pub graph: CorrelationGraph,
    pub cliques: CliqueReport,
    pub winner_specs: Vec<BinningSpec>,
}

/// Selection results plus the in-memory encoded columns downstream stages
/// reuse.
pub struct SelectOutcome {
    pub artifacts: SelectArtifacts,
    /// Variance-retained features, plainly encoded, full record length.
    pub basic_encoded: FeatureMatrix,
}

fn subset_rows<T: Clone>(values: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| values[i].clone()).collect()
}

struct EncodedFeature {
    name: String,
    kind: ColumnKind,
    basic: BasicEncoder,
    encoded_full: Vec<f64>,
}

fn encode_feature(
    column: &Column,
    y_train: &[u8],
    train_rows: &[usize],
    config: &PipelineConfig,
) -> Result<EncodedFeature> {
    match &column.data {
        ColumnData::Categorical(values) => {
            let train_values = subset_rows(values, train_rows);
            let map = encoding::woe_map(&column.name, &train_values, y_train, config.smoothing)?;
            let (encoded_full, _) = encoding::apply_woe(values, &map);
            Ok(EncodedFeature {
                name: column.name.clone(),
                kind: ColumnKind::Categorical,
                basic: BasicEncoder::WoeMap(map),
                encoded_full,
            })
        }
        ColumnData::Numeric(values) => {
            let train_values = subset_rows(values, train_rows);
            let prebins =
                binning::prebin_numeric(&train_values, y_train, config.numeric_prebins)?;
            let spec = binning::identity_spec(&column.name, &prebins, config.smoothing)?;
            let (encoded_full, _) = binning::transform(&column.data, &spec)?;
            Ok(EncodedFeature {
                name: column.name.clone(),
                kind: ColumnKind::Numeric,
                basic: BasicEncoder::Binning(spec),
                encoded_full,
            })
        }
    }
}

/// Constraints for the optimal binning of one feature.
fn constraints_for(config: &PipelineConfig, kind: ColumnKind) -> BinConstraints {
    BinConstraints {
        max_bins: config.max_bins,
        min_bin_fraction: config.min_bin_fraction,
        min_class_count: config.min_class_count,
        smoothing: config.smoothing,
        // monotone WoE only makes sense along a numeric axis
        monotonic: match kind {
            ColumnKind::Numeric => config.monotonic,
            ColumnKind::Categorical => None,
        },
    }
}

/// Optimal binning of one feature on the training rows.
fn optimal_binning(
    column: &Column,
    y_train: &[u8],
    train_rows: &[usize],
    config: &PipelineConfig,
) -> Result<BinningSpec> {
    let constraints = constraints_for(config, column.data.kind());
    let prebins = match &column.data {
        ColumnData::Numeric(values) => {
            let train_values = subset_rows(values, train_rows);
            binning::prebin_numeric(&train_values, y_train, config.max_prebins)?
        }
        ColumnData::Categorical(values) => {
            let train_values = subset_rows(values, train_rows);
            binning::prebin_categorical(&train_values, y_train)?
        }
    };
    binning::optimize(&column.name, &prebins, &constraints)
}

/// Run the selection chain: plain WoE encoding, variance filter, IV scoring,
/// correlation graph, maximal cliques, winner selection, and optimal binning
/// of the winners.
pub fn run_select(config: &PipelineConfig, prepared: &PreparedData) -> Result<SelectOutcome> {
    let ds = &prepared.dataset;
    let train_rows = ds.split_indices(SplitTag::Train);
    if train_rows.is_empty() {
        return Err(Error::EmptyInput.stage("select"));
    }
    let y_train: Vec<u8> = train_rows.iter().map(|&i| ds.target[i]).collect();

    // plain encodings, in parallel per feature
    let encoded: Vec<EncodedFeature> = {
        let results = par::map_indexed(ds.columns().len(), |i| {
            encode_feature(&ds.columns()[i], &y_train, &train_rows, config)
        });
        let mut out = Vec::with_capacity(results.len());
        for r in results {
            out.push(r.map_err(|e| e.stage("select:encode"))?);
        }
        out
    };

    // variance filter on the encoded training rows
    let names: Vec<String> = encoded.iter().map(|f| f.name.clone()).collect();
    let train_columns: Vec<Vec<f64>> = encoded
        .iter()
        .map(|f| train_rows.iter().map(|&i| f.encoded_full[i]).collect())
        .collect();
    let variance = encoding::variance_filter(&names, &train_columns, config.variance_threshold);
    let retained: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| variance.retained.contains(n))
        .map(|(i, _)| i)
        .collect();

    // selection IV per retained feature: optimal-binning IV for categorical,
    // quantile-prebin IV for numeric
    let iv_results: Vec<Result<IvScore>> = {
        let retained_refs: Vec<usize> = retained.clone();
        par::map_indexed(retained_refs.len(), |idx| {
            let i = retained_refs[idx];
            let feature = &encoded[i];
            match feature.kind {
                ColumnKind::Numeric => {
                    let BasicEncoder::Binning(spec) = &feature.basic else {
                        unreachable!("numeric features carry a binning encoder")
                    };
                    Ok(IvScore {
                        feature: feature.name.clone(),
                        iv: spec.iv,
                        method: "quantile_prebins".into(),
                    })
                }
                ColumnKind::Categorical => {
                    let column = &ds.columns()[i];
                    let spec = optimal_binning(column, &y_train, &train_rows, config)?;
                    Ok(IvScore {
                        feature: feature.name.clone(),
                        iv: spec.iv,
                        method: "optimal_binning".into(),
                    })
                }
            }
        })
    };
    let mut iv_scores = Vec::with_capacity(iv_results.len());
    for r in iv_results {
        iv_scores.push(r.map_err(|e| e.stage("select:iv"))?);
    }
    iv_scores.sort_by(|a, b| a.feature.cmp(&b.feature));

    // correlation graph over retained encoded columns
    let retained_names: Vec<String> = retained.iter().map(|&i| names[i].clone()).collect();
    let retained_train: Vec<Vec<f64>> =
        retained.iter().map(|&i| train_columns[i].clone()).collect();
    let matrix = if retained.len() >= 2 {
        graph_select::correlation_matrix(&retained_train, &retained_names)
            .map_err(|e| e.stage("select:correlation"))?
    } else {
        vec![vec![1.0; retained.len()]; retained.len()]
    };
    let graph = graph_select::build_graph(
        &matrix,
        &retained_names,
        config.correlation_threshold,
        config.signed_correlation,
    );
    let cliques = graph_select::maximal_cliques(&graph);
    let scores: HashMap<String, f64> = iv_scores
        .iter()
        .map(|s| (s.feature.clone(), s.iv))
        .collect();
    let report = graph_select::select_representatives(&cliques, &scores, config.iv_floor)
        .map_err(|e| e.stage("select:winners"))?;

    // optimal binning of the winners
    let winner_results: Vec<Result<BinningSpec>> = {
        let winner_names: Vec<String> =
            report.winners.iter().map(|w| w.feature.clone()).collect();
        par::map_indexed(winner_names.len(), |idx| {
            let column = ds.column(&winner_names[idx])?;
            optimal_binning(column, &y_train, &train_rows, config)
        })
    };
    let mut winner_specs = Vec::with_capacity(winner_results.len());
    for r in winner_results {
        winner_specs.push(r.map_err(|e| e.stage("select:binning"))?);
    }

    let basic_encoded = FeatureMatrix::new(
        retained_names,
        retained
            .iter()
            .map(|&i| encoded[i].encoded_full.clone())
            .collect(),
    )?;
    let encodings = encoded
        .into_iter()
        .map(|f| FeatureEncoding {
            feature: f.name,
            kind: f.kind,
            basic: f.basic,
        })
        .collect();

    Ok(SelectOutcome {
        artifacts: SelectArtifacts {
            encodings,
            variance,
            iv_scores,
            correlation: CorrelationArtifact {
                names: graph.vertices.clone(),
                matrix,
            },
            graph,
            cliques: report,
            winner_specs,
        },
        basic_encoded,
    })
}

/// A trained model plus everything needed to score raw CSV records.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelBundle {
    pub model: LogisticModel,
    /// One binning per model feature, aligned with `model.feature_names`.
    pub encoders: Vec<BinningSpec>,
    pub schema: Schema,
    pub decision_threshold: f64,
}

pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub grid: GridSearchResult,
}

fn fit_options(config: &PipelineConfig, seed: u64) -> FitOptions {
    FitOptions {
        c: 1.0,
        tol: config.fit_tol,
        max_iter: config.fit_max_iter,
        seed,
    }
}

/// Full-length encoded matrix for the given binnings.
fn encode_with_specs(ds: &Dataset, specs: &[BinningSpec]) -> Result<FeatureMatrix> {
    let mut names = Vec::with_capacity(specs.len());
    let mut columns = Vec::with_capacity(specs.len());
    for spec in specs {
        let column = ds.column(&spec.feature)?;
        let (encoded, _) = binning::transform(&column.data, spec)?;
        names.push(spec.feature.clone());
        columns.push(encoded);
    }
    FeatureMatrix::new(names, columns)
}

/// Grid-search and fit the final model on the winners' optimal encodings.
pub fn run_train(
    config: &PipelineConfig,
    prepared: &PreparedData,
    select: &SelectOutcome,
) -> Result<TrainOutcome> {
    let ds = &prepared.dataset;
    if select.artifacts.winner_specs.is_empty() {
        return Err(Error::EmptyInput.stage("train"));
    }
    let full = encode_with_specs(ds, &select.artifacts.winner_specs)?;
    let train_rows = ds.split_indices(SplitTag::Train);
    let x_train = full.subset(&train_rows);
    let y_train: Vec<u8> = train_rows.iter().map(|&i| ds.target[i]).collect();
    let (grid, model) = model::grid_search(
        &x_train,
        &y_train,
        &config.grid,
        config.cv_folds,
        config.stage_seed("cv"),
        &fit_options(config, config.stage_seed("cv")),
    )
    .map_err(|e| e.stage("train"))?;
    Ok(TrainOutcome {
        bundle: ModelBundle {
            model,
            encoders: select.artifacts.winner_specs.clone(),
            schema: build_schema_for_bundle(config, prepared)?,
            decision_threshold: config.decision_threshold,
        },
        grid,
    })
}

fn build_schema_for_bundle(config: &PipelineConfig, prepared: &PreparedData) -> Result<Schema> {
    // the prepared dataset's own columns are authoritative (they exist for
    // both CSV and synthetic inputs)
    let columns = prepared
        .dataset
        .columns()
        .iter()
        .map(|c| (c.name.clone(), c.data.kind()))
        .collect();
    Ok(Schema {
        columns,
        target: config.target_column.clone(),
        patient_id: config.patient_id_column.clone(),
        admit_time: config.admit_time_column.clone(),
    })
}

pub struct EvaluateOutcome {
    pub report: EvaluationReport,
    pub roc: Vec<RocPoint>,
    pub split: SplitTag,
}

fn split_label(tag: SplitTag) -> &'static str {
    match tag {
        SplitTag::Train => "train",
        SplitTag::Test => "test",
        SplitTag::Validation => "validation",
        SplitTag::Unassigned => "unassigned",
    }
}

/// Score one split and compute the full metric report.
pub fn run_evaluate(
    config: &PipelineConfig,
    prepared: &PreparedData,
    bundle: &ModelBundle,
    split: SplitTag,
) -> Result<EvaluateOutcome> {
    let ds = &prepared.dataset;
    let rows = ds.split_indices(split);
    if rows.is_empty() {
        return Err(Error::EmptyInput.stage("evaluate"));
    }
    let full = encode_with_specs(ds, &bundle.encoders)?;
    let x = full.subset(&rows);
    let y: Vec<u8> = rows.iter().map(|&i| ds.target[i]).collect();
    let p = model::predict_proba(&bundle.model, &x).map_err(|e| e.stage("evaluate"))?;
    let (_, roc) = eval::auc_roc(&y, &p).map_err(|e| e.stage("evaluate"))?;
    let report = eval::evaluation_report(
        &y,
        &p,
        &EvaluationSettings {
            threshold: bundle.decision_threshold,
            bootstrap_iterations: config.bootstrap_iterations,
            level: config.bootstrap_level,
            calibration_bins: config.calibration_bins,
            seed: crate::seed::stage_seed(config.seed, &format!("bootstrap:{}", split_label(split))),
        },
    )
    .map_err(|e| e.stage("evaluate"))?;
    Ok(EvaluateOutcome {
        report,
        roc,
        split,
    })
}

pub struct ExplainOutcome {
    pub coefficients: CoefficientReport,
    pub shap: ShapMatrix,
    pub consistency: ConsistencyReport,
}

/// Coefficient report, SHAP attributions, and their consistency, computed
/// on the training split with the training rows as SHAP background.
pub fn run_explain(
    config: &PipelineConfig,
    prepared: &PreparedData,
    bundle: &ModelBundle,
) -> Result<ExplainOutcome> {
    let _ = config;
    let ds = &prepared.dataset;
    let rows = ds.split_indices(SplitTag::Train);
    let full = encode_with_specs(ds, &bundle.encoders)?;
    let x_train = full.subset(&rows);
    let coefficients = explain::coefficient_report(&bundle.model, &x_train)
        .map_err(|e| e.stage("explain"))?;
    let shap = explain::shap_linear(&bundle.model, &x_train, &x_train)
        .map_err(|e| e.stage("explain"))?;
    let consistency = explain::consistency_check(&coefficients, &shap, &x_train)
        .map_err(|e| e.stage("explain"))?;
    Ok(ExplainOutcome {
        coefficients,
        shap,
        consistency,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
    pub auc_roc: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub feature_count: usize,
    pub features: Vec<String>,
    pub chosen_c: f64,
    pub metrics: ComparisonMetrics,
}

/// Side-by-side comparison of the clique-IV selection, an RFE baseline at
/// the same feature budget, and the variance-filter-only model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub rfe_eliminated: Vec<String>,
    pub evaluated_split: String,
}

fn comparison_metrics(y: &[u8], p: &[f64], threshold: f64) -> Result<ComparisonMetrics> {
    let counts = eval::confusion(y, p, threshold)?;
    let m = eval::threshold_metrics(&counts);
    let auc = eval::auc_roc(y, p).ok().map(|(a, _)| a);
    Ok(ComparisonMetrics {
        accuracy: m.accuracy.value(),
        precision: m.precision.value(),
        recall: m.sensitivity.value(),
        f1: m.f1.value(),
        specificity: m.specificity.value(),
        auc_roc: auc,
    })
}

/// Train and evaluate the three selection strategies on identical splits.
pub fn run_compare(config: &PipelineConfig, prepared: &PreparedData) -> Result<ComparisonReport> {
    let ds = &prepared.dataset;
    let select = run_select(config, prepared)?;
    let train_rows = ds.split_indices(SplitTag::Train);
    let test_rows = ds.split_indices(SplitTag::Test);
    if test_rows.is_empty() {
        return Err(Error::EmptyInput.stage("compare"));
    }
    let y_train: Vec<u8> = train_rows.iter().map(|&i| ds.target[i]).collect();
    let y_test: Vec<u8> = test_rows.iter().map(|&i| ds.target[i]).collect();

    let mut rows = Vec::with_capacity(3);

    // clique-IV winners with optimal binnings
    let clique_full = encode_with_specs(ds, &select.artifacts.winner_specs)?;
    let (clique_grid, clique_model) = model::grid_search(
        &clique_full.subset(&train_rows),
        &y_train,
        &config.grid,
        config.cv_folds,
        config.stage_seed("cv:clique_iv"),
        &fit_options(config, config.stage_seed("cv:clique_iv")),
    )
    .map_err(|e| e.stage("compare:clique_iv"))?;
    let p = model::predict_proba(&clique_model, &clique_full.subset(&test_rows))?;
    rows.push(ComparisonRow {
        model: "clique_iv".into(),
        feature_count: clique_model.feature_names.len(),
        features: clique_model.feature_names.clone(),
        chosen_c: clique_grid.chosen,
        metrics: comparison_metrics(&y_test, &p, config.decision_threshold)?,
    });

    // RFE baseline at the same feature budget, from the variance-retained set
    let budget = config
        .rfe_target
        .unwrap_or(select.artifacts.winner_specs.len())
        .min(select.basic_encoded.n_features());
    let basic_train = select.basic_encoded.subset(&train_rows);
    let (rfe_model_initial, eliminated) = model::rfe_baseline(
        &basic_train,
        &y_train,
        budget,
        &fit_options(config, config.stage_seed("rfe")),
    )
    .map_err(|e| e.stage("compare:rfe"))?;
    let rfe_features = rfe_model_initial.feature_names.clone();
    let rfe_train = basic_train.select(&rfe_features)?;
    let (rfe_grid, rfe_model) = model::grid_search(
        &rfe_train,
        &y_train,
        &config.grid,
        config.cv_folds,
        config.stage_seed("cv:rfe"),
        &fit_options(config, config.stage_seed("cv:rfe")),
    )
    .map_err(|e| e.stage("compare:rfe"))?;
    let rfe_test = select.basic_encoded.subset(&test_rows).select(&rfe_features)?;
    let p = model::predict_proba(&rfe_model, &rfe_test)?;
    rows.push(ComparisonRow {
        model: "rfe".into(),
        feature_count: rfe_features.len(),
        features: rfe_features,
        chosen_c: rfe_grid.chosen,
        metrics: comparison_metrics(&y_test, &p, config.decision_threshold)?,
    });

    // all variance-retained features, plain encodings
    let (all_grid, all_model) = model::grid_search(
        &basic_train,
        &y_train,
        &config.grid,
        config.cv_folds,
        config.stage_seed("cv:all_features"),
        &fit_options(config, config.stage_seed("cv:all_features")),
    )
    .map_err(|e| e.stage("compare:all_features"))?;
    let p = model::predict_proba(&all_model, &select.basic_encoded.subset(&test_rows))?;
    rows.push(ComparisonRow {
        model: "all_features".into(),
        feature_count: all_model.feature_names.len(),
        features: all_model.feature_names.clone(),
        chosen_c: all_grid.chosen,
        metrics: comparison_metrics(&y_test, &p, config.decision_threshold)?,
    });

    Ok(ComparisonReport {
        rows,
        rfe_eliminated: eliminated,
        evaluated_split: "test".into(),
    })
}

// ---------------------------------------------------------------------------
// artifact writing
// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_cohort_csv(path: &Path, ds: &Dataset) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = Vec::new();
    if ds.patient_id.is_some() {
        header.push("patient_id".into());
    }
    if ds.admit_time.is_some() {
        header.push("admit_time".into());
    }
    header.extend(ds.columns().iter().map(|c| c.name.clone()));
    header.push("target".into());
    writer.write_record(&header)?;
    for i in 0..ds.n_records() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ids) = &ds.patient_id {
            record.push(ids[i].clone());
        }
        if let Some(times) = &ds.admit_time {
            record.push(times[i].map(|t| t.to_string()).unwrap_or_default());
        }
        for column in ds.columns() {
            record.push(match &column.data {
                ColumnData::Numeric(values) => {
                    values[i].map(|v| v.to_string()).unwrap_or_default()
                }
                ColumnData::Categorical(values) => values[i].clone().unwrap_or_default(),
            });
        }
        record.push(ds.target[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_roc_csv(path: &Path, points: &[RocPoint]) -> Result<()> {
    let mut text = String::from("threshold,true_positive_rate,false_positive_rate\n");
    for p in points {
        text.push_str(&format!(
            "{},{},{}\n",
            p.threshold, p.true_positive_rate, p.false_positive_rate
        ));
    }
    write_text(path, &text)
}

fn write_calibration_csv(path: &Path, curve: &eval::CalibrationCurve) -> Result<()> {
    let mut text = String::from("mean_predicted,observed_rate,count\n");
    for b in &curve.bins {
        text.push_str(&format!(
            "{},{},{}\n",
            b.mean_predicted, b.observed_rate, b.count
        ));
    }
    write_text(path, &text)
}

fn write_shap_csv(path: &Path, shap: &ShapMatrix) -> Result<()> {
    let mut text = format!("# base_value {}\n", shap.base_value);
    text.push_str(&shap.feature_names.join(","));
    text.push('\n');
    for row in &shap.values {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

fn write_dataset_reports(out: &Path, prepared: &PreparedData) -> Result<Vec<PathBuf>> {
    let dir = out.join("dataset");
    let mut written = vec![dir.join("missing_report.json"), dir.join("split_report.json")];
    write_json(&written[0], &prepared.missing)?;
    write_json(&written[1], &prepared.split)?;
    if let Some(dedup) = &prepared.dedup {
        let path = dir.join("dedup_report.json");
        write_json(&path, dedup)?;
        written.push(path);
    }
    Ok(written)
}

fn write_select_artifacts(out: &Path, artifacts: &SelectArtifacts) -> Result<Vec<PathBuf>> {
    let dir = out.join("select");
    write_json(&dir.join("encodings.json"), &artifacts.encodings)?;
    write_json(&dir.join("variance_report.json"), &artifacts.variance)?;
    write_json(&dir.join("iv_scores.json"), &artifacts.iv_scores)?;
    write_json(&dir.join("correlation.json"), &artifacts.correlation)?;
    write_json(&dir.join("graph.json"), &artifacts.graph)?;
    write_json(&dir.join("cliques.json"), &artifacts.cliques)?;
    write_json(&dir.join("binning_specs.json"), &artifacts.winner_specs)?;
    let dot = dir.join("graph.dot");
    write_text(&dot, &artifacts.graph.to_dot())?;
    Ok(vec![
        dir.join("encodings.json"),
        dir.join("variance_report.json"),
        dir.join("iv_scores.json"),
        dir.join("correlation.json"),
        dir.join("graph.json"),
        dir.join("cliques.json"),
        dir.join("binning_specs.json"),
        dot,
    ])
}

/// Write the synthetic cohort CSV and its ground-truth manifest.
pub fn cmd_synth(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let spec = config.to_synthetic_spec();
    let (ds, manifest) = dataset::generate_synthetic(&spec).map_err(|e| e.stage("synth"))?;
    let dir = config.output_dir.join("synth");
    let cohort = dir.join("cohort.csv");
    let manifest_path = dir.join("manifest.json");
    write_cohort_csv(&cohort, &ds)?;
    write_json(&manifest_path, &manifest)?;
    Ok(vec![cohort, manifest_path])
}

/// Run and persist the selection stage (plus the dataset reports).
pub fn cmd_select(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(config)?;
    let select = run_select(config, &prepared)?;
    let mut written = write_dataset_reports(&config.output_dir, &prepared)?;
    written.extend(write_select_artifacts(&config.output_dir, &select.artifacts)?);
    Ok(written)
}

/// Train the final model and persist the bundle.
pub fn cmd_train(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(config)?;
    let select = run_select(config, &prepared)?;
    let outcome = run_train(config, &prepared, &select)?;
    let dir = config.output_dir.join("train");
    let model_path = dir.join("model.json");
    let grid_path = dir.join("grid_search.json");
    write_json(&model_path, &outcome.bundle)?;
    write_json(&grid_path, &outcome.grid)?;
    Ok(vec![model_path, grid_path])
}

fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Evaluate on one split; with `bundle_path` the bundle is read from disk,
/// otherwise training is recomputed from the config.
pub fn cmd_evaluate(
    config: &PipelineConfig,
    bundle_path: Option<&Path>,
    split: SplitTag,
) -> Result<Vec<PathBuf>> {
    let prepared = prepare(config)?;
    let bundle = match bundle_path {
        Some(path) => load_bundle(path)?,
        None => {
            let select = run_select(config, &prepared)?;
            run_train(config, &prepared, &select)?.bundle
        }
    };
    let outcome = run_evaluate(config, &prepared, &bundle, split)?;
    write_evaluate_artifacts(&config.output_dir, &outcome)
}

fn write_evaluate_artifacts(out: &Path, outcome: &EvaluateOutcome) -> Result<Vec<PathBuf>> {
    let dir = out.join("evaluate");
    let label = split_label(outcome.split);
    let report = dir.join(format!("report_{label}.json"));
    let roc = dir.join(format!("roc_{label}.csv"));
    let calibration = dir.join(format!("calibration_{label}.csv"));
    write_json(&report, &outcome.report)?;
    write_roc_csv(&roc, &outcome.roc)?;
    write_calibration_csv(&calibration, &outcome.report.calibration)?;
    Ok(vec![report, roc, calibration])
}

/// Coefficients, SHAP attributions, and the consistency report.
pub fn cmd_explain(config: &PipelineConfig, bundle_path: Option<&Path>) -> Result<Vec<PathBuf>> {
    let prepared = prepare(config)?;
    let bundle = match bundle_path {
        Some(path) => load_bundle(path)?,
        None => {
            let select = run_select(config, &prepared)?;
            run_train(config, &prepared, &select)?.bundle
        }
    };
    let outcome = run_explain(config, &prepared, &bundle)?;
    write_explain_artifacts(&config.output_dir, &outcome)
}

fn write_explain_artifacts(out: &Path, outcome: &ExplainOutcome) -> Result<Vec<PathBuf>> {
    let dir = out.join("explain");
    let coefficients = dir.join("coefficients.json");
    let shap = dir.join("shap.csv");
    let consistency = dir.join("consistency.json");
    write_json(&coefficients, &outcome.coefficients)?;
    write_shap_csv(&shap, &outcome.shap)?;
    write_json(&consistency, &outcome.consistency)?;
    Ok(vec![coefficients, shap, consistency])
}

/// Three-way comparison artifact.
pub fn cmd_compare(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(config)?;
    let report = run_compare(config, &prepared)?;
    let path = config.output_dir.join("compare").join("comparison.json");
    write_json(&path, &report)?;
    Ok(vec![path])
}

/// Score a raw CSV with a saved bundle; writes `row,probability` lines.
pub fn cmd_score(bundle_path: &Path, input: &Path, output: &Path) -> Result<Vec<PathBuf>> {
    let bundle = load_bundle(bundle_path)?;
    let file = fs::File::open(input).map_err(|e| Error::io(input, e))?;
    let needed: Vec<(String, ColumnKind)> = bundle
        .encoders
        .iter()
        .map(|spec| {
            bundle
                .schema
                .columns
                .iter()
                .find(|(name, _)| *name == spec.feature)
                .cloned()
                .ok_or_else(|| Error::ColumnNotFound(spec.feature.clone()))
        })
        .collect::<Result<_>>()?;
    let columns = dataset::load_feature_columns(file, &needed).map_err(|e| e.stage("score"))?;
    let mut names = Vec::with_capacity(columns.len());
    let mut encoded = Vec::with_capacity(columns.len());
    for (column, spec) in columns.iter().zip(&bundle.encoders) {
        let (values, _) = binning::transform(&column.data, spec)?;
        names.push(column.name.clone());
        encoded.push(values);
    }
    let x = FeatureMatrix::new(names, encoded)?;
    let p = model::predict_proba(&bundle.model, &x).map_err(|e| e.stage("score"))?;
    let mut text = String::from("row,probability\n");
    for (i, pi) in p.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, pi));
    }
    write_text(output, &text)?;
    Ok(vec![output.to_path_buf()])
}

/// Run every stage once, writing all artifacts: the monolithic counterpart
/// of the individual commands.
pub fn run_all(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if config.input.is_none() {
        written.extend(cmd_synth(config)?);
    }
    let prepared = prepare(config)?;
    written.extend(write_dataset_reports(&config.output_dir, &prepared)?);
    let select = run_select(config, &prepared)?;
    written.extend(write_select_artifacts(&config.output_dir, &select.artifacts)?);
    let train = run_train(config, &prepared, &select)?;
    let dir = config.output_dir.join("train");
    write_json(&dir.join("model.json"), &train.bundle)?;
    write_json(&dir.join("grid_search.json"), &train.grid)?;
    written.push(dir.join("model.json"));
    written.push(dir.join("grid_search.json"));
    let evaluate = run_evaluate(config, &prepared, &train.bundle, SplitTag::Test)?;
    written.extend(write_evaluate_artifacts(&config.output_dir, &evaluate)?);
    if config.split.validation > 0.0 {
        let validation = run_evaluate(config, &prepared, &train.bundle, SplitTag::Validation)?;
        written.extend(write_evaluate_artifacts(&config.output_dir, &validation)?);
    }
    let explain = run_explain(config, &prepared, &train.bundle)?;
    written.extend(write_explain_artifacts(&config.output_dir, &explain)?);
    let compare = run_compare(config, &prepared)?;
    let path = config.output_dir.join("compare").join("comparison.json");
    write_json(&path, &compare)?;
    written.push(path);
    Ok(written)
}
