//! Scorecard pipeline CLI.
//!
//! Subcommands mirror the pipeline stages; a flat `key = value` config file
//! carries the settings and flags override it. Exit codes: 0 success,
//! 2 configuration error, 3 data error, 4 numeric/convergence error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cliquecard::config::PipelineConfig;
use cliquecard::dataset::SplitTag;
use cliquecard::{pipeline, Error, ErrorKind};

#[derive(Parser)]
#[command(
    name = "cliquecard",
    about = "WoE/IV scorecard pipeline with correlation-clique feature selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; mandatory if the config file does not set one.
    #[arg(long)]
    seed: Option<u64>,
    /// Input cohort CSV (overrides the config).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Extra overrides for any documented config key, as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<PipelineConfig, Error> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => match self.seed {
                Some(seed) => PipelineConfig::new(seed),
                None => {
                    return Err(Error::Config(
                        "seed is mandatory: pass --seed or set it in --config".into(),
                    ))
                }
            },
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(input) = &self.input {
            config.input = Some(input.clone());
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        for pair in &self.set {
            let Some((key, value)) = pair.split_once('=') else {
                return Err(Error::Config(format!("--set expects key=value, got '{pair}'")));
            };
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort CSV plus its ground-truth manifest.
    Synth(ConfigArgs),
    /// Run feature selection and write all intermediate artifacts.
    Select(ConfigArgs),
    /// Grid-search and train the final model bundle.
    Train(ConfigArgs),
    /// Evaluate the model on a held-out split.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Split to evaluate: test or validation.
        #[arg(long, default_value = "test")]
        split: String,
        /// Saved model bundle; when absent, training is recomputed.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Emit coefficient, SHAP, and consistency reports.
    Explain {
        #[command(flatten)]
        config: ConfigArgs,
        /// Saved model bundle; when absent, training is recomputed.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Compare clique-IV selection with RFE and the all-features model.
    Compare(ConfigArgs),
    /// Score a CSV with a saved bundle; writes per-record probabilities.
    Score {
        /// Saved model bundle (train output).
        #[arg(long)]
        bundle: PathBuf,
        /// CSV with the feature columns of the bundle schema.
        #[arg(long)]
        input: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_split(name: &str) -> Result<SplitTag, Error> {
    match name {
        "test" => Ok(SplitTag::Test),
        "validation" => Ok(SplitTag::Validation),
        other => Err(Error::Config(format!(
            "--split must be test or validation, got '{other}'"
        ))),
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    match &cli.command {
        Command::Synth(args) => pipeline::cmd_synth(&args.build()?),
        Command::Select(args) => pipeline::cmd_select(&args.build()?),
        Command::Train(args) => pipeline::cmd_train(&args.build()?),
        Command::Evaluate {
            config,
            split,
            bundle,
        } => pipeline::cmd_evaluate(&config.build()?, bundle.as_deref(), parse_split(split)?),
        Command::Explain { config, bundle } => {
            pipeline::cmd_explain(&config.build()?, bundle.as_deref())
        }
        Command::Compare(args) => pipeline::cmd_compare(&args.build()?),
        Command::Score {
            bundle,
            input,
            output,
        } => pipeline::cmd_score(bundle, input, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("error: {error}");
            match error.kind() {
                ErrorKind::Config => ExitCode::from(2),
                ErrorKind::Data => ExitCode::from(3),
                ErrorKind::Numeric => ExitCode::from(4),
            }
        }
    }
}
