//! Evaluation: confusion counts, threshold metrics, rank-statistic ROC/AUC,
//! bootstrap confidence intervals, and calibration curves.
//!
//! Undefined ratios are reported as absent-with-reason, never NaN. Bootstrap
//! replicates derive per-replicate seeds, so parallel execution order cannot
//! change the intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Tally predictions against truth; positive prediction iff `p >= threshold`.
pub fn confusion(y_true: &[u8], p_pred: &[f64], threshold: f64) -> Result<ConfusionCounts> {
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y_true.len() != p_pred.len() {
        return Err(Error::LengthMismatch {
            column: "<predictions>".into(),
            got: p_pred.len(),
            expected: y_true.len(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (&y, &p) in y_true.iter().zip(p_pred) {
        let predicted = p >= threshold;
        match (y == 1, predicted) {
            (true, true) => counts.true_positives += 1,
            (true, false) => counts.false_negatives += 1,
            (false, true) => counts.false_positives += 1,
            (false, false) => counts.true_negatives += 1,
        }
    }
    Ok(counts)
}

/// A metric value, or the reason it is undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricValue {
    Value(f64),
    Undefined { reason: String },
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::Undefined { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub accuracy: MetricValue,
    pub precision: MetricValue,
    pub sensitivity: MetricValue,
    pub specificity: MetricValue,
    pub f1: MetricValue,
}

fn ratio(num: u64, den: u64, reason: &str) -> MetricValue {
    if den == 0 {
        MetricValue::Undefined {
            reason: reason.to_string(),
        }
    } else {
        MetricValue::Value(num as f64 / den as f64)
    }
}

/// Standard threshold metrics with guarded denominators.
pub fn threshold_metrics(c: &ConfusionCounts) -> ThresholdMetrics {
    let ConfusionCounts {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
    } = *c;
    ThresholdMetrics {
        accuracy: ratio(tp + tn, c.total(), "no records"),
        precision: ratio(tp, tp + fp, "no positive predictions"),
        sensitivity: ratio(tp, tp + fn_, "no positive records"),
        specificity: ratio(tn, tn + fp, "no negative records"),
        f1: ratio(2 * tp, 2 * tp + fp + fn_, "no positives in truth or prediction"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub true_positive_rate: f64,
    pub false_positive_rate: f64,
}

/// AUC by the rank statistic (ties counted half) plus the ROC curve with one
/// point per distinct score.
pub fn auc_roc(y_true: &[u8], p_pred: &[f64]) -> Result<(f64, Vec<RocPoint>)> {
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassTarget);
    }

    // ascending by score; average ranks across ties
    let mut order: Vec<usize> = (0..y_true.len()).collect();
    order.sort_by(|&a, &b| p_pred[a].partial_cmp(&p_pred[b]).unwrap());
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && p_pred[order[j]] == p_pred[order[i]] {
            j += 1;
        }
        // ranks i+1..=j averaged
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if y_true[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos as f64 * n_neg as f64);

    // curve points: descending distinct thresholds
    let mut curve = vec![RocPoint {
        threshold: 1.0,
        true_positive_rate: 0.0,
        false_positive_rate: 0.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut k = order.len();
    while k > 0 {
        let score = p_pred[order[k - 1]];
        while k > 0 && p_pred[order[k - 1]] == score {
            if y_true[order[k - 1]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k -= 1;
        }
        curve.push(RocPoint {
            threshold: score,
            true_positive_rate: tp as f64 / n_pos as f64,
            false_positive_rate: fp as f64 / n_neg as f64,
        });
    }
    Ok((auc, curve))
}

/// Metrics that can be bootstrapped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Precision,
    Sensitivity,
    Specificity,
    F1,
    AucRoc,
}

impl MetricKind {
    /// Compute on a sample; `None` when undefined there (single-class
    /// resamples, empty denominators).
    pub fn compute(&self, y_true: &[u8], p_pred: &[f64], threshold: f64) -> Option<f64> {
        let has_both = y_true.contains(&1) && y_true.contains(&0);
        if !has_both {
            return None;
        }
        match self {
            MetricKind::AucRoc => auc_roc(y_true, p_pred).ok().map(|(a, _)| a),
            _ => {
                let counts = confusion(y_true, p_pred, threshold).ok()?;
                let metrics = threshold_metrics(&counts);
                let value = match self {
                    MetricKind::Accuracy => metrics.accuracy,
                    MetricKind::Precision => metrics.precision,
                    MetricKind::Sensitivity => metrics.sensitivity,
                    MetricKind::Specificity => metrics.specificity,
                    MetricKind::F1 => metrics.f1,
                    MetricKind::AucRoc => unreachable!(),
                };
                value.value()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Precision => "precision",
            MetricKind::Sensitivity => "sensitivity",
            MetricKind::Specificity => "specificity",
            MetricKind::F1 => "f1",
            MetricKind::AucRoc => "auc_roc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricWithCi {
    pub name: String,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub skipped_replicates: usize,
}

/// Percentile bootstrap CI (type-7 quantiles over replicate values).
///
/// Replicates where the metric is undefined (for instance single-class
/// resamples) are skipped and counted; more than 50% skipped is an error.
pub fn bootstrap_ci(
    y_true: &[u8],
    p_pred: &[f64],
    metric: MetricKind,
    iterations: usize,
    level: f64,
    seed: u64,
    threshold: f64,
) -> Result<MetricWithCi> {
    if iterations < 100 {
        return Err(Error::Config(format!(
            "bootstrap needs at least 100 iterations, got {iterations}"
        )));
    }
    let n = y_true.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let point = metric
        .compute(y_true, p_pred, threshold)
        .ok_or_else(|| Error::UndefinedMetric {
            name: metric.name().to_string(),
            reason: "undefined on the full sample".to_string(),
        })?;

    let replicates: Vec<Option<f64>> = par::map_indexed(iterations, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, i as u64));
        let mut ys = Vec::with_capacity(n);
        let mut ps = Vec::with_capacity(n);
        for _ in 0..n {
            let idx = rng.random_range(0..n);
            ys.push(y_true[idx]);
            ps.push(p_pred[idx]);
        }
        metric.compute(&ys, &ps, threshold)
    });

    let mut values: Vec<f64> = replicates.iter().flatten().copied().collect();
    let skipped = iterations - values.len();
    if skipped * 2 > iterations {
        return Err(Error::UnreliableCi {
            skipped,
            iterations,
        });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = (1.0 - level) / 2.0;
    let mut ci_low = quantile_type7(&values, alpha);
    let mut ci_high = quantile_type7(&values, 1.0 - alpha);
    // the percentile interval must cover the full-sample point estimate
    ci_low = ci_low.min(point);
    ci_high = ci_high.max(point);
    Ok(MetricWithCi {
        name: metric.name().to_string(),
        point,
        ci_low,
        ci_high,
        level,
        skipped_replicates: skipped,
    })
}

/// Linear-interpolation quantile over a sorted slice.
fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_predicted: f64,
    pub observed_rate: f64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub bins: Vec<CalibrationBin>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_unavailable_reason: Option<String>,
}

/// Equal-width probability bins on [0, 1]; slope and intercept come from a
/// count-weighted least squares of observed rate on mean prediction.
pub fn calibration(y_true: &[u8], p_pred: &[f64], bins: usize) -> Result<CalibrationCurve> {
    if y_true.is_empty() || bins == 0 {
        return Err(Error::EmptyInput);
    }
    if y_true.len() != p_pred.len() {
        return Err(Error::LengthMismatch {
            column: "<predictions>".into(),
            got: p_pred.len(),
            expected: y_true.len(),
        });
    }
    let mut sum_p = vec![0.0f64; bins];
    let mut sum_y = vec![0u64; bins];
    let mut count = vec![0u64; bins];
    for (&y, &p) in y_true.iter().zip(p_pred) {
        let mut idx = (p * bins as f64).floor() as usize;
        if idx >= bins {
            idx = bins - 1; // p == 1.0 lands in the last bin
        }
        sum_p[idx] += p;
        sum_y[idx] += u64::from(y == 1);
        count[idx] += 1;
    }
    let curve: Vec<CalibrationBin> = (0..bins)
        .filter(|&i| count[i] > 0)
        .map(|i| CalibrationBin {
            mean_predicted: sum_p[i] / count[i] as f64,
            observed_rate: sum_y[i] as f64 / count[i] as f64,
            count: count[i],
        })
        .collect();

    if curve.len() < 2 {
        return Ok(CalibrationCurve {
            bins: curve,
            slope: None,
            intercept: None,
            slope_unavailable_reason: Some("fewer than 2 non-empty bins".to_string()),
        });
    }

    let total: f64 = curve.iter().map(|b| b.count as f64).sum();
    let mean_x: f64 = curve
        .iter()
        .map(|b| b.count as f64 * b.mean_predicted)
        .sum::<f64>()
        / total;
    let mean_y: f64 = curve
        .iter()
        .map(|b| b.count as f64 * b.observed_rate)
        .sum::<f64>()
        / total;
    let sxx: f64 = curve
        .iter()
        .map(|b| b.count as f64 * (b.mean_predicted - mean_x).powi(2))
        .sum();
    if sxx == 0.0 {
        return Ok(CalibrationCurve {
            bins: curve,
            slope: None,
            intercept: None,
            slope_unavailable_reason: Some("no spread in mean predictions".to_string()),
        });
    }
    let sxy: f64 = curve
        .iter()
        .map(|b| {
            b.count as f64 * (b.mean_predicted - mean_x) * (b.observed_rate - mean_y)
        })
        .sum();
    let slope = sxy / sxx;
    Ok(CalibrationCurve {
        bins: curve,
        slope: Some(slope),
        intercept: Some(mean_y - slope * mean_x),
        slope_unavailable_reason: None,
    })
}

/// One row of the evaluation report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub point: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub level: f64,
    pub skipped_replicates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined_reason: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub confusion: ConfusionCounts,
    pub threshold: f64,
    pub calibration: CalibrationCurve,
}

#[derive(Clone, Copy, Debug)]
pub struct EvaluationSettings {
    pub threshold: f64,
    pub bootstrap_iterations: usize,
    pub level: f64,
    pub calibration_bins: usize,
    pub seed: u64,
}

/// Full report: the six headline metrics with bootstrap CIs, the confusion
/// matrix at the decision threshold, and the calibration curve.
pub fn evaluation_report(
    y_true: &[u8],
    p_pred: &[f64],
    settings: &EvaluationSettings,
) -> Result<EvaluationReport> {
    let rows_spec: [(&str, MetricKind); 6] = [
        ("Accuracy", MetricKind::Accuracy),
        ("Positive Predictive value or Precision", MetricKind::Precision),
        ("Sensitivity or Recall", MetricKind::Sensitivity),
        ("F1 Score", MetricKind::F1),
        ("Specificity or True Negative Rate", MetricKind::Specificity),
        ("AUC ROC", MetricKind::AucRoc),
    ];
    let mut rows = Vec::with_capacity(rows_spec.len());
    for (i, (name, kind)) in rows_spec.iter().enumerate() {
        let row = match bootstrap_ci(
            y_true,
            p_pred,
            *kind,
            settings.bootstrap_iterations,
            settings.level,
            seed::derive(settings.seed, i as u64),
            settings.threshold,
        ) {
            Ok(m) => ReportRow {
                name: name.to_string(),
                point: Some(m.point),
                ci_low: Some(m.ci_low),
                ci_high: Some(m.ci_high),
                level: m.level,
                skipped_replicates: m.skipped_replicates,
                undefined_reason: None,
            },
            Err(Error::UndefinedMetric { reason, .. }) => ReportRow {
                name: name.to_string(),
                point: None,
                ci_low: None,
                ci_high: None,
                level: settings.level,
                skipped_replicates: 0,
                undefined_reason: Some(reason),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    let confusion = confusion(y_true, p_pred, settings.threshold)?;
    let calibration = calibration(y_true, p_pred, settings.calibration_bins)?;
    Ok(EvaluationReport {
        rows,
        confusion,
        threshold: settings.threshold,
        calibration,
    })
}
