//! Coefficient- and SHAP-based explanations for the linear model.
//!
//! SHAP values are computed in log-odds space, where they are exact for a
//! linear model under feature independence: `phi[i][j] = w_j * (x[i][j] -
//! mean_j)` with the mean taken over a background set. Local accuracy holds
//! by construction: base value plus attributions equals the linear score.

use serde::{Deserialize, Serialize};

use crate::encoding::population_variance;
use crate::error::{Error, Result};
use crate::model::{FeatureMatrix, LogisticModel};
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub feature: String,
    pub weight: f64,
    /// Min and max of the encoded feature over the reference data.
    pub woe_range: (f64, f64),
    pub encoded_std: f64,
    /// `|weight| * std(encoded feature)`.
    pub global_importance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub entries: Vec<CoefficientEntry>,
}

/// Weights with scale context, ranked by descending global importance
/// (ties by name).
pub fn coefficient_report(model: &LogisticModel, x_train: &FeatureMatrix) -> Result<CoefficientReport> {
    if x_train.names != model.feature_names {
        return Err(Error::SchemaMismatch(format!(
            "model expects columns {:?}, got {:?}",
            model.feature_names, x_train.names
        )));
    }
    let mut entries: Vec<CoefficientEntry> = model
        .feature_names
        .iter()
        .zip(&model.weights)
        .zip(&x_train.columns)
        .map(|((name, &weight), column)| {
            let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let std = population_variance(column).sqrt();
            CoefficientEntry {
                feature: name.clone(),
                weight,
                woe_range: (lo, hi),
                encoded_std: std,
                global_importance: weight.abs() * std,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.global_importance
            .partial_cmp(&a.global_importance)
            .unwrap()
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(CoefficientReport { entries })
}

/// Per-record, per-feature attributions in log-odds units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub feature_names: Vec<String>,
    /// Linear score at the background means.
    pub base_value: f64,
    /// Row-major: `values[record][feature]`.
    pub values: Vec<Vec<f64>>,
}

/// Exact linear SHAP against a background set (typically the training data).
pub fn shap_linear(
    model: &LogisticModel,
    x: &FeatureMatrix,
    background: &FeatureMatrix,
) -> Result<ShapMatrix> {
    if x.names != model.feature_names {
        return Err(Error::SchemaMismatch(format!(
            "model expects columns {:?}, got {:?}",
            model.feature_names, x.names
        )));
    }
    if background.names != model.feature_names {
        return Err(Error::SchemaMismatch(
            "background columns do not match the model".into(),
        ));
    }
    if background.n_records() == 0 {
        return Err(Error::EmptyBackground);
    }
    let means: Vec<f64> = background
        .columns
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let base_value = model.intercept
        + model
            .weights
            .iter()
            .zip(&means)
            .map(|(w, m)| w * m)
            .sum::<f64>();
    let n = x.n_records();
    let values = par::map_indexed(n, |i| {
        model
            .weights
            .iter()
            .zip(&x.columns)
            .zip(&means)
            .map(|((w, column), m)| w * (column[i] - m))
            .collect::<Vec<f64>>()
    });
    Ok(ShapMatrix {
        feature_names: model.feature_names.clone(),
        base_value,
        values,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyFeature {
    pub feature: String,
    pub mean_abs_shap: f64,
    pub global_importance: f64,
    pub weight_sign_agrees: bool,
}

/// Agreement between the two explanation views.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Spearman rank correlation between mean |SHAP| and global importance.
    pub spearman_rank_correlation: f64,
    /// Fraction of features where the weight sign matches the sign of
    /// corr(SHAP values, encoded values).
    pub sign_agreement_rate: f64,
    pub per_feature: Vec<ConsistencyFeature>,
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Compare mean |SHAP| against coefficient importance and check sign
/// agreement on the encoded columns the attributions were computed from.
pub fn consistency_check(
    coefficients: &CoefficientReport,
    shap: &ShapMatrix,
    x: &FeatureMatrix,
) -> Result<ConsistencyReport> {
    if shap.feature_names != x.names {
        return Err(Error::SchemaMismatch(
            "attribution and feature columns differ".into(),
        ));
    }
    let d = shap.feature_names.len();
    let n = shap.values.len();
    if n == 0 || d == 0 {
        return Err(Error::EmptyInput);
    }
    let mut per_feature = Vec::with_capacity(d);
    for (j, name) in shap.feature_names.iter().enumerate() {
        let coefficient = coefficients
            .entries
            .iter()
            .find(|e| e.feature == *name)
            .ok_or_else(|| Error::ColumnNotFound(name.clone()))?;
        let shap_column: Vec<f64> = shap.values.iter().map(|row| row[j]).collect();
        let mean_abs_shap = shap_column.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        let corr = pearson(&shap_column, &x.columns[j]);
        let weight_sign_agrees = if coefficient.weight == 0.0 || corr == 0.0 {
            true // a vanishing weight carries no direction to contradict
        } else {
            (coefficient.weight > 0.0) == (corr > 0.0)
        };
        per_feature.push(ConsistencyFeature {
            feature: name.clone(),
            mean_abs_shap,
            global_importance: coefficient.global_importance,
            weight_sign_agrees,
        });
    }
    let shap_ranks = average_ranks(&per_feature.iter().map(|f| f.mean_abs_shap).collect::<Vec<_>>());
    let importance_ranks =
        average_ranks(&per_feature.iter().map(|f| f.global_importance).collect::<Vec<_>>());
    let spearman = if d == 1 {
        1.0
    } else {
        pearson(&shap_ranks, &importance_ranks)
    };
    let sign_agreement_rate =
        per_feature.iter().filter(|f| f.weight_sign_agrees).count() as f64 / d as f64;
    Ok(ConsistencyReport {
        spearman_rank_correlation: spearman,
        sign_agreement_rate,
        per_feature,
    })
}
