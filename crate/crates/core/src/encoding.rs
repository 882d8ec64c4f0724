//! Weight-of-evidence encoding and information-value scoring.
//!
//! For a category `i` with positive/negative counts `P_i`/`N_i`, class totals
//! `TP`/`TN`, `k` categories, and additive smoothing `s`:
//!
//! ```text
//! pos_share_i = (P_i + s) / (TP + s*k)
//! neg_share_i = (N_i + s) / (TN + s*k)
//! WoE_i       = ln(pos_share_i / neg_share_i)
//! IV          = sum_i (pos_share_i - neg_share_i) * WoE_i
//! ```
//!
//! With `s = 0` these are the exact unsmoothed definitions. A category
//! overrepresented among positives gets WoE > 0. The IV is non-negative
//! termwise because `(p - q)` and `ln(p/q)` always share a sign.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::binning;
use crate::error::{Error, Result};

/// Default additive smoothing applied to category counts.
pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Category label used for imputed missing categorical values.
pub const MISSING_CATEGORY: &str = "missing outcome";

/// Per-category outcome tally.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub positives: u64,
    pub negatives: u64,
}

/// Class totals across all categories of a feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub total_positives: u64,
    pub total_negatives: u64,
}

/// One category with its WoE value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WoeEntry {
    pub category: String,
    pub positives: u64,
    pub negatives: u64,
    pub woe: f64,
}

/// Complete WoE table for one feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WoeMap {
    pub feature: String,
    pub totals: Totals,
    pub entries: Vec<WoeEntry>,
    pub iv: f64,
    pub smoothing: f64,
}

/// Tally outcome counts per distinct category, sorted by label.
///
/// `None` values count under the `"missing outcome"` category.
pub fn category_stats(
    values: &[Option<String>],
    target: &[u8],
) -> Result<(Vec<CategoryStats>, Totals)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.len() != target.len() {
        return Err(Error::LengthMismatch {
            column: "<categorical>".into(),
            got: values.len(),
            expected: target.len(),
        });
    }
    let totals = class_totals(target)?;
    let mut tallies: HashMap<&str, (u64, u64)> = HashMap::new();
    for (value, &y) in values.iter().zip(target) {
        let label = value.as_deref().unwrap_or(MISSING_CATEGORY);
        let entry = tallies.entry(label).or_insert((0, 0));
        if y == 1 {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
    let mut stats: Vec<CategoryStats> = tallies
        .into_iter()
        .map(|(category, (positives, negatives))| CategoryStats {
            category: category.to_string(),
            positives,
            negatives,
        })
        .collect();
    stats.sort_by(|a, b| a.category.cmp(&b.category));
    Ok((stats, totals))
}

fn class_totals(target: &[u8]) -> Result<Totals> {
    let total_positives = target.iter().filter(|&&y| y == 1).count() as u64;
    let total_negatives = target.len() as u64 - total_positives;
    if total_positives == 0 || total_negatives == 0 {
        return Err(Error::SingleClassTarget);
    }
    Ok(Totals {
        total_positives,
        total_negatives,
    })
}

/// Weight of evidence per category.
///
/// With `smoothing = 0` a zero count on either side makes the WoE infinite;
/// that case is rejected with a hint to enable smoothing.
pub fn woe(stats: &[CategoryStats], totals: Totals, smoothing: f64) -> Result<Vec<WoeEntry>> {
    let k = stats.len() as f64;
    let mut entries = Vec::with_capacity(stats.len());
    for s in stats {
        if smoothing == 0.0 {
            if s.positives == 0 {
                return Err(Error::InfiniteWoe {
                    category: s.category.clone(),
                    side: "positive",
                });
            }
            if s.negatives == 0 {
                return Err(Error::InfiniteWoe {
                    category: s.category.clone(),
                    side: "negative",
                });
            }
        }
        let pos_share =
            (s.positives as f64 + smoothing) / (totals.total_positives as f64 + smoothing * k);
        let neg_share =
            (s.negatives as f64 + smoothing) / (totals.total_negatives as f64 + smoothing * k);
        entries.push(WoeEntry {
            category: s.category.clone(),
            positives: s.positives,
            negatives: s.negatives,
            woe: (pos_share / neg_share).ln(),
        });
    }
    Ok(entries)
}

/// Information value of a WoE table.
pub fn information_value(entries: &[WoeEntry], totals: Totals, smoothing: f64) -> f64 {
    let k = entries.len() as f64;
    entries
        .iter()
        .map(|e| {
            let pos_share =
                (e.positives as f64 + smoothing) / (totals.total_positives as f64 + smoothing * k);
            let neg_share =
                (e.negatives as f64 + smoothing) / (totals.total_negatives as f64 + smoothing * k);
            (pos_share - neg_share) * e.woe
        })
        .sum()
}

/// Build the full WoE table for a categorical feature.
pub fn woe_map(
    feature: &str,
    values: &[Option<String>],
    target: &[u8],
    smoothing: f64,
) -> Result<WoeMap> {
    let (stats, totals) = category_stats(values, target)?;
    let entries = woe(&stats, totals, smoothing)?;
    let iv = information_value(&entries, totals, smoothing);
    Ok(WoeMap {
        feature: feature.to_string(),
        totals,
        entries,
        iv,
        smoothing,
    })
}

/// IV of a numeric feature over quantile prebins.
///
/// Missing values are excluded from the tally; a constant column scores 0.
pub fn numeric_iv(
    values: &[Option<f64>],
    target: &[u8],
    prebins: usize,
    smoothing: f64,
) -> Result<f64> {
    let bins = binning::prebin_numeric(values, target, prebins)?;
    if bins.len() < 2 {
        return Ok(0.0);
    }
    let stats: Vec<CategoryStats> = bins
        .iter()
        .enumerate()
        .map(|(i, b)| CategoryStats {
            category: format!("bin{i}"),
            positives: b.positives,
            negatives: b.negatives,
        })
        .collect();
    let totals = Totals {
        total_positives: stats.iter().map(|s| s.positives).sum(),
        total_negatives: stats.iter().map(|s| s.negatives).sum(),
    };
    if totals.total_positives == 0 || totals.total_negatives == 0 {
        return Err(Error::SingleClassTarget);
    }
    let entries = woe(&stats, totals, smoothing)?;
    Ok(information_value(&entries, totals, smoothing))
}

/// Replace each raw value by its category's WoE.
///
/// Unseen categories map to WoE 0 (neutral evidence); the second return value
/// counts how many records fell back. Record count and order are preserved.
pub fn apply_woe(values: &[Option<String>], map: &WoeMap) -> (Vec<f64>, usize) {
    let table: HashMap<&str, f64> = map
        .entries
        .iter()
        .map(|e| (e.category.as_str(), e.woe))
        .collect();
    let mut unseen = 0usize;
    let encoded = values
        .iter()
        .map(|v| {
            let label = v.as_deref().unwrap_or(MISSING_CATEGORY);
            match table.get(label) {
                Some(&w) => w,
                None => {
                    unseen += 1;
                    0.0
                }
            }
        })
        .collect();
    (encoded, unseen)
}

/// A feature dropped by the variance filter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub feature: String,
    pub variance: f64,
}

/// Outcome of [`variance_filter`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarianceReport {
    pub threshold: f64,
    pub retained: Vec<String>,
    pub dropped: Vec<DroppedFeature>,
}

/// Drop WoE-encoded columns whose population variance falls below `threshold`.
///
/// Columns at exactly the threshold are retained.
pub fn variance_filter(names: &[String], columns: &[Vec<f64>], threshold: f64) -> VarianceReport {
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    for (name, column) in names.iter().zip(columns) {
        let variance = population_variance(column);
        if variance < threshold {
            dropped.push(DroppedFeature {
                feature: name.clone(),
                variance,
            });
        } else {
            retained.push(name.clone());
        }
    }
    VarianceReport {
        threshold,
        retained,
        dropped,
    }
}

/// Population variance (divides by `n`).
pub fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}
