//! Interpretable scorecard pipeline for binary tabular outcomes.
//!
//! The chain: weight-of-evidence encoding and information-value scoring
//! ([`encoding`]), IV-optimal supervised binning ([`binning`]), redundancy
//! reduction through maximal cliques of the feature-correlation graph
//! ([`graph_select`]), L2-penalized logistic regression ([`model`]),
//! bootstrap-validated evaluation ([`eval`]), and coefficient/SHAP
//! explanations ([`explain`]). [`pipeline`] wires the stages into
//! reproducible commands over CSV cohorts or synthetic ones with known
//! ground truth ([`dataset`]).
//!
//! With the default `parallel` feature, per-feature sweeps, CV folds,
//! bootstrap replicates, and SHAP rows run on rayon; disabling the feature
//! gives a sequential build with identical outputs.

pub mod binning;
pub mod config;
pub mod dataset;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod explain;
pub mod graph_select;
pub mod model;
mod par;
pub mod pipeline;
pub mod seed;

pub use error::{Error, ErrorKind, Result};
