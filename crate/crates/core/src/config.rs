//! Pipeline configuration.
//!
//! Flat `key = value` text: one pair per line, `#` comments, unknown keys
//! rejected. The seed is mandatory. CLI flags override file values through
//! [`PipelineConfig::set`], which the parser itself uses, so the file and
//! the flags accept the same keys.

use std::path::{Path, PathBuf};

use crate::binning::{Monotonic, DEFAULT_MAX_PREBINS};
use crate::encoding::DEFAULT_SMOOTHING;
use crate::dataset::{SplitFractions, SyntheticSpec};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// CSV cohort path; when absent, synthetic settings are used.
    pub input: Option<PathBuf>,
    /// Synthetic manifest to take the column schema from.
    pub manifest: Option<PathBuf>,
    pub target_column: String,
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub patient_id_column: Option<String>,
    pub admit_time_column: Option<String>,
    /// When set, this numeric column is clamped into [0, 90] at load.
    pub age_clip_column: Option<String>,
    pub split: SplitFractions,
    pub smoothing: f64,
    pub variance_threshold: f64,
    pub correlation_threshold: f64,
    pub signed_correlation: bool,
    pub iv_floor: f64,
    /// Quantile prebins for numeric IV scoring and encoding.
    pub numeric_prebins: usize,
    /// Prebin cap feeding the optimal binning of winners.
    pub max_prebins: usize,
    pub max_bins: usize,
    pub min_bin_fraction: f64,
    pub min_class_count: u64,
    pub monotonic: Option<Monotonic>,
    pub grid: Vec<f64>,
    pub cv_folds: usize,
    pub fit_tol: f64,
    pub fit_max_iter: usize,
    pub decision_threshold: f64,
    pub bootstrap_iterations: usize,
    pub bootstrap_level: f64,
    pub calibration_bins: usize,
    /// RFE feature budget for the comparison; defaults to the winner count.
    pub rfe_target: Option<usize>,
    pub seed: u64,
    pub output_dir: PathBuf,
    // synthetic cohort settings
    pub synth_records: usize,
    pub synth_informative: usize,
    pub synth_redundant_per_informative: usize,
    pub synth_noise: usize,
    pub synth_category_counts: Vec<usize>,
    pub synth_effect_strengths: Vec<f64>,
    pub synth_noise_categories: usize,
    pub synth_flip_probability: f64,
}

impl PipelineConfig {
    /// Defaults with the mandatory seed.
    pub fn new(seed: u64) -> Self {
        PipelineConfig {
            input: None,
            manifest: None,
            target_column: "target".into(),
            numeric_columns: Vec::new(),
            categorical_columns: Vec::new(),
            patient_id_column: None,
            admit_time_column: None,
            age_clip_column: None,
            split: SplitFractions::default(),
            smoothing: DEFAULT_SMOOTHING,
            variance_threshold: 0.03,
            correlation_threshold: 0.5,
            signed_correlation: false,
            iv_floor: 0.1,
            numeric_prebins: 10,
            max_prebins: DEFAULT_MAX_PREBINS,
            max_bins: 6,
            min_bin_fraction: 0.05,
            min_class_count: 1,
            monotonic: None,
            grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            cv_folds: 5,
            fit_tol: 1e-8,
            fit_max_iter: 1000,
            decision_threshold: 0.5,
            bootstrap_iterations: 1000,
            bootstrap_level: 0.95,
            calibration_bins: 10,
            rfe_target: None,
            seed,
            output_dir: PathBuf::from("out"),
            synth_records: 10_000,
            synth_informative: 3,
            synth_redundant_per_informative: 2,
            synth_noise: 5,
            synth_category_counts: vec![4, 4, 4],
            synth_effect_strengths: vec![2.0, 1.5, 1.0],
            synth_noise_categories: 4,
            synth_flip_probability: 0.15,
        }
    }

    /// Parse `key = value` text. `seed` must be present.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut config = PipelineConfig::new(0);
        let mut seed_seen = false;
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key = value, got '{raw}'",
                    line_no + 1
                )));
            };
            let key = key.trim();
            if key == "seed" {
                seed_seen = true;
            }
            config.set(key, value.trim())?;
        }
        if !seed_seen {
            return Err(Error::Config("seed is mandatory".into()));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_text(&text)
    }

    /// Assign one documented key. Used by both the file parser and CLI
    /// overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse {key} = '{value}'")))
        }
        fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
            if value.is_empty() {
                return Ok(Vec::new());
            }
            value
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("cannot parse {key} entry '{v}'")))
                })
                .collect()
        }
        fn name_list(value: &str) -> Vec<String> {
            value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        }
        fn optional(value: &str) -> Option<String> {
            if value.is_empty() || value == "none" {
                None
            } else {
                Some(value.to_string())
            }
        }

        match key {
            "input" => self.input = optional(value).map(PathBuf::from),
            "manifest" => self.manifest = optional(value).map(PathBuf::from),
            "target_column" => self.target_column = value.to_string(),
            "numeric_columns" => self.numeric_columns = name_list(value),
            "categorical_columns" => self.categorical_columns = name_list(value),
            "patient_id_column" => self.patient_id_column = optional(value),
            "admit_time_column" => self.admit_time_column = optional(value),
            "age_clip_column" => self.age_clip_column = optional(value),
            "split_train" => self.split.train = parse(key, value)?,
            "split_test" => self.split.test = parse(key, value)?,
            "split_validation" => self.split.validation = parse(key, value)?,
            "smoothing" => self.smoothing = parse(key, value)?,
            "variance_threshold" => self.variance_threshold = parse(key, value)?,
            "correlation_threshold" => self.correlation_threshold = parse(key, value)?,
            "signed_correlation" => self.signed_correlation = parse(key, value)?,
            "iv_floor" => self.iv_floor = parse(key, value)?,
            "numeric_prebins" => self.numeric_prebins = parse(key, value)?,
            "max_prebins" => self.max_prebins = parse(key, value)?,
            "max_bins" => self.max_bins = parse(key, value)?,
            "min_bin_fraction" => self.min_bin_fraction = parse(key, value)?,
            "min_class_count" => self.min_class_count = parse(key, value)?,
            "monotonic" => {
                self.monotonic = match value {
                    "none" | "" => None,
                    "increasing" => Some(Monotonic::Increasing),
                    "decreasing" => Some(Monotonic::Decreasing),
                    other => {
                        return Err(Error::Config(format!(
                            "monotonic must be none|increasing|decreasing, got '{other}'"
                        )))
                    }
                }
            }
            "grid" => self.grid = parse_list(key, value)?,
            "cv_folds" => self.cv_folds = parse(key, value)?,
            "fit_tol" => self.fit_tol = parse(key, value)?,
            "fit_max_iter" => self.fit_max_iter = parse(key, value)?,
            "decision_threshold" => self.decision_threshold = parse(key, value)?,
            "bootstrap_iterations" => self.bootstrap_iterations = parse(key, value)?,
            "bootstrap_level" => self.bootstrap_level = parse(key, value)?,
            "calibration_bins" => self.calibration_bins = parse(key, value)?,
            "rfe_target" => {
                self.rfe_target = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "seed" => self.seed = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "synth_records" => self.synth_records = parse(key, value)?,
            "synth_informative" => self.synth_informative = parse(key, value)?,
            "synth_redundant_per_informative" => {
                self.synth_redundant_per_informative = parse(key, value)?
            }
            "synth_noise" => self.synth_noise = parse(key, value)?,
            "synth_category_counts" => self.synth_category_counts = parse_list(key, value)?,
            "synth_effect_strengths" => self.synth_effect_strengths = parse_list(key, value)?,
            "synth_noise_categories" => self.synth_noise_categories = parse(key, value)?,
            "synth_flip_probability" => self.synth_flip_probability = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, message: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(message.to_string()))
            }
        };
        let sum = self.split.train + self.split.test + self.split.validation;
        check((sum - 1.0).abs() <= 1e-9, "split fractions must sum to 1")?;
        check(
            self.split.train >= 0.0 && self.split.test >= 0.0 && self.split.validation >= 0.0,
            "split fractions must be non-negative",
        )?;
        check(self.smoothing >= 0.0, "smoothing must be >= 0")?;
        check(self.variance_threshold >= 0.0, "variance_threshold must be >= 0")?;
        check(
            (0.0..1.0).contains(&self.correlation_threshold),
            "correlation_threshold must be in [0, 1)",
        )?;
        check(self.iv_floor >= 0.0, "iv_floor must be >= 0")?;
        check(self.numeric_prebins >= 2, "numeric_prebins must be >= 2")?;
        check(self.max_prebins >= 1, "max_prebins must be >= 1")?;
        check(self.max_bins >= 1, "max_bins must be >= 1")?;
        check(
            (0.0..=1.0).contains(&self.min_bin_fraction),
            "min_bin_fraction must be in [0, 1]",
        )?;
        check(!self.grid.is_empty(), "grid must not be empty")?;
        check(
            self.grid.iter().all(|&c| c > 0.0),
            "grid values must be positive",
        )?;
        check(self.cv_folds >= 2, "cv_folds must be >= 2")?;
        check(self.fit_tol > 0.0, "fit_tol must be positive")?;
        check(self.fit_max_iter >= 1, "fit_max_iter must be >= 1")?;
        check(
            (0.0..=1.0).contains(&self.decision_threshold),
            "decision_threshold must be in [0, 1]",
        )?;
        check(
            self.bootstrap_iterations >= 100,
            "bootstrap_iterations must be >= 100",
        )?;
        check(
            self.bootstrap_level > 0.0 && self.bootstrap_level < 1.0,
            "bootstrap_level must be in (0, 1)",
        )?;
        check(self.calibration_bins >= 2, "calibration_bins must be >= 2")?;
        Ok(())
    }

    /// Seed for a named stage, derived from the config seed.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        seed::stage_seed(self.seed, stage)
    }

    pub fn to_synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_records: self.synth_records,
            n_informative: self.synth_informative,
            n_redundant_per_informative: self.synth_redundant_per_informative,
            n_noise: self.synth_noise,
            category_counts: self.synth_category_counts.clone(),
            effect_strengths: self.synth_effect_strengths.clone(),
            noise_categories: self.synth_noise_categories,
            flip_probability: self.synth_flip_probability,
            seed: self.stage_seed("synth"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let text = "\
# cohort
seed = 42
input = cohort.csv
categorical_columns = a, b, c
grid = 0.1, 1, 10
variance_threshold = 0.0
monotonic = increasing
";
        let config = PipelineConfig::from_kv_text(text).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.input.as_deref(), Some(Path::new("cohort.csv")));
        assert_eq!(config.categorical_columns, vec!["a", "b", "c"]);
        assert_eq!(config.grid, vec![0.1, 1.0, 10.0]);
        assert_eq!(config.variance_threshold, 0.0);
        assert_eq!(config.monotonic, Some(Monotonic::Increasing));
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(
            PipelineConfig::from_kv_text("input = x.csv\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            PipelineConfig::from_kv_text("seed = 1\nbogus = 2\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn out_of_range_threshold_rejected() {
        let mut config = PipelineConfig::new(1);
        config.correlation_threshold = 1.5;
        assert!(config.validate().is_err());
        let mut config = PipelineConfig::new(1);
        config.bootstrap_iterations = 10;
        assert!(config.validate().is_err());
    }

    #[test]
    fn stage_seeds_are_stable_and_distinct() {
        let config = PipelineConfig::new(7);
        assert_eq!(config.stage_seed("split"), config.stage_seed("split"));
        assert_ne!(config.stage_seed("split"), config.stage_seed("cv"));
    }
}
