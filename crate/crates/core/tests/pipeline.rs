//! Pipeline-level integration: command composition, artifact round-trips,
//! and CSV/in-memory equivalence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cliquecard::config::PipelineConfig;
use cliquecard::dataset::{DedupReport, MissingReport, SplitReport, SyntheticManifest};
use cliquecard::eval::EvaluationReport;
use cliquecard::explain::{CoefficientReport, ConsistencyReport};
use cliquecard::graph_select::{CliqueReport, CorrelationGraph};
use cliquecard::model::GridSearchResult;
use cliquecard::pipeline::{
    self, ComparisonReport, CorrelationArtifact, FeatureEncoding, IvScore, ModelBundle,
};

fn small_config(seed: u64, out: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::new(seed);
    config.output_dir = out.to_path_buf();
    config.synth_records = 3_000;
    config.synth_noise = 3;
    config.bootstrap_iterations = 150;
    config
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn stage_commands_compose_to_the_monolithic_run() {
    let tmp = tempfile::tempdir().unwrap();
    let staged = tmp.path().join("staged");
    let monolithic = tmp.path().join("monolithic");

    let config = small_config(11, &staged);
    pipeline::cmd_synth(&config).unwrap();
    pipeline::cmd_select(&config).unwrap();
    pipeline::cmd_train(&config).unwrap();
    pipeline::cmd_evaluate(&config, None, cliquecard::dataset::SplitTag::Test).unwrap();
    pipeline::cmd_evaluate(&config, None, cliquecard::dataset::SplitTag::Validation).unwrap();
    pipeline::cmd_explain(&config, None).unwrap();
    pipeline::cmd_compare(&config).unwrap();

    let config = small_config(11, &monolithic);
    pipeline::run_all(&config).unwrap();

    let staged_tree = read_tree(&staged);
    let monolithic_tree = read_tree(&monolithic);
    let staged_files: Vec<&PathBuf> = staged_tree.keys().collect();
    let monolithic_files: Vec<&PathBuf> = monolithic_tree.keys().collect();
    assert_eq!(staged_files, monolithic_files);
    for (path, bytes) in &staged_tree {
        assert_eq!(
            bytes,
            &monolithic_tree[path],
            "artifact {} differs between staged and monolithic runs",
            path.display()
        );
    }
}

#[test]
fn every_artifact_round_trips_into_its_type() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(13, tmp.path());
    pipeline::run_all(&config).unwrap();

    fn parse<T: serde::de::DeserializeOwned>(path: PathBuf) {
        let text = std::fs::read_to_string(&path).unwrap();
        serde_json::from_str::<T>(&text)
            .unwrap_or_else(|e| panic!("{} does not match its schema: {e}", path.display()));
    }

    let out = tmp.path();
    parse::<SyntheticManifest>(out.join("synth/manifest.json"));
    parse::<MissingReport>(out.join("dataset/missing_report.json"));
    parse::<SplitReport>(out.join("dataset/split_report.json"));
    parse::<DedupReport>(out.join("dataset/dedup_report.json"));
    parse::<Vec<FeatureEncoding>>(out.join("select/encodings.json"));
    parse::<cliquecard::encoding::VarianceReport>(out.join("select/variance_report.json"));
    parse::<Vec<IvScore>>(out.join("select/iv_scores.json"));
    parse::<CorrelationArtifact>(out.join("select/correlation.json"));
    parse::<CorrelationGraph>(out.join("select/graph.json"));
    parse::<CliqueReport>(out.join("select/cliques.json"));
    parse::<Vec<cliquecard::binning::BinningSpec>>(out.join("select/binning_specs.json"));
    parse::<ModelBundle>(out.join("train/model.json"));
    parse::<GridSearchResult>(out.join("train/grid_search.json"));
    parse::<EvaluationReport>(out.join("evaluate/report_test.json"));
    parse::<EvaluationReport>(out.join("evaluate/report_validation.json"));
    parse::<CoefficientReport>(out.join("explain/coefficients.json"));
    parse::<ConsistencyReport>(out.join("explain/consistency.json"));
    parse::<ComparisonReport>(out.join("compare/comparison.json"));
}

#[test]
fn csv_round_trip_matches_in_memory_cohort() {
    let tmp = tempfile::tempdir().unwrap();
    let memory_out = tmp.path().join("memory");
    let csv_out = tmp.path().join("csv");

    // in-memory synthetic cohort
    let config = small_config(17, &memory_out);
    pipeline::cmd_synth(&config).unwrap();
    pipeline::cmd_select(&config).unwrap();

    // same cohort through its CSV + manifest
    let mut csv_config = small_config(17, &csv_out);
    csv_config.input = Some(memory_out.join("synth/cohort.csv"));
    csv_config.manifest = Some(memory_out.join("synth/manifest.json"));
    pipeline::cmd_select(&csv_config).unwrap();

    for name in [
        "dataset/split_report.json",
        "select/encodings.json",
        "select/iv_scores.json",
        "select/cliques.json",
        "select/binning_specs.json",
    ] {
        let a = std::fs::read(memory_out.join(name)).unwrap();
        let b = std::fs::read(csv_out.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between CSV and in-memory runs");
    }
}

#[test]
fn independent_features_make_singleton_cliques_and_all_strong_features_win() {
    // no redundant copies: the correlation graph is edgeless, every feature
    // is its own clique, and everything above the IV floor wins
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small_config(23, tmp.path());
    config.synth_records = 20_000;
    config.synth_informative = 3;
    config.synth_redundant_per_informative = 0;
    config.synth_noise = 2;
    config.synth_category_counts = vec![4, 4, 2];
    config.synth_effect_strengths = vec![2.0, 1.5, 1.2];
    config.variance_threshold = 0.0; // noise reaches the IV floor
    let prepared = pipeline::prepare(&config).unwrap();
    let select = pipeline::run_select(&config, &prepared).unwrap();

    assert!(select.artifacts.graph.edges.is_empty(), "graph must be edgeless");
    assert!(select
        .artifacts
        .cliques
        .cliques
        .iter()
        .all(|c| c.len() == 1));
    let winners: Vec<&str> = select
        .artifacts
        .cliques
        .winners
        .iter()
        .map(|w| w.feature.as_str())
        .collect();
    assert_eq!(winners.len(), 3);
    for name in ["inf0", "inf1", "inf2"] {
        assert!(winners.contains(&name), "{name} should win its singleton clique");
    }
}

#[test]
fn scoring_matches_training_time_probabilities() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(19, tmp.path());
    pipeline::cmd_synth(&config).unwrap();
    pipeline::cmd_train(&config).unwrap();
    let scores = tmp.path().join("scores.csv");
    pipeline::cmd_score(
        &tmp.path().join("train/model.json"),
        &tmp.path().join("synth/cohort.csv"),
        &scores,
    )
    .unwrap();
    let text = std::fs::read_to_string(&scores).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,probability"));
    let mut count = 0;
    for line in lines {
        let (_, p) = line.split_once(',').unwrap();
        let p: f64 = p.parse().unwrap();
        assert!(p > 0.0 && p < 1.0);
        count += 1;
    }
    assert_eq!(count, config.synth_records);
}
