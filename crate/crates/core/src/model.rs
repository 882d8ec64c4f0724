//! L2-penalized logistic regression.
//!
//! The objective is `(1/n) * sum(log-loss) + (1/(2*c*n)) * ||w||^2` with an
//! unpenalized intercept, minimized by Newton steps (iteratively reweighted
//! least squares) with step halving. The solver is deterministic: no
//! stochastic passes, and after the gradient-norm test passes one extra
//! polish step is taken so solutions are insensitive to record order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::par;
use crate::seed;

/// Named feature columns; the model's input layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(first) = columns.first() {
            for (name, column) in names.iter().zip(&columns) {
                if column.len() != first.len() {
                    return Err(Error::LengthMismatch {
                        column: name.clone(),
                        got: column.len(),
                        expected: first.len(),
                    });
                }
            }
        }
        Ok(FeatureMatrix { names, columns })
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_records(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Row-subset copy preserving column order.
    pub fn subset(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }

    /// Drop all but the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix> {
        let columns = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|x| x == n)
                    .map(|i| self.columns[i].clone())
                    .ok_or_else(|| Error::ColumnNotFound(n.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            names: names.to_vec(),
            columns,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub convergence_tol: f64,
    pub iterations_used: usize,
}

/// Fitted logistic model over WoE-encoded features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Inverse regularization strength (larger = weaker penalty).
    pub c: f64,
    pub training_meta: TrainingMeta,
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-8,
            max_iter: 1000,
            seed: 0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(-|z|))`-based stable per-record log-loss.
fn log_loss(z: f64, y: u8) -> f64 {
    // loss = -[y ln p + (1-y) ln(1-p)] with p = sigmoid(z)
    let m = if y == 1 { z } else { -z };
    if m >= 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn linear_scores(x: &FeatureMatrix, weights: &[f64], intercept: f64) -> Vec<f64> {
    let n = x.n_records();
    let mut z = vec![intercept; n];
    for (w, column) in weights.iter().zip(&x.columns) {
        for (zi, v) in z.iter_mut().zip(column) {
            *zi += w * v;
        }
    }
    z
}

/// Penalized objective value.
pub fn penalized_loss(x: &FeatureMatrix, y: &[u8], weights: &[f64], intercept: f64, c: f64) -> f64 {
    let n = y.len() as f64;
    let z = linear_scores(x, weights, intercept);
    let data: f64 = z.iter().zip(y).map(|(&z, &yi)| log_loss(z, yi)).sum::<f64>() / n;
    let penalty: f64 = weights.iter().map(|w| w * w).sum::<f64>() / (2.0 * c * n);
    data + penalty
}

/// Analytic gradient of the penalized objective: per-weight components plus
/// the intercept component.
pub fn gradient(
    x: &FeatureMatrix,
    y: &[u8],
    weights: &[f64],
    intercept: f64,
    c: f64,
) -> (Vec<f64>, f64) {
    let n = y.len() as f64;
    let z = linear_scores(x, weights, intercept);
    let residual: Vec<f64> = z
        .iter()
        .zip(y)
        .map(|(&z, &yi)| sigmoid(z) - yi as f64)
        .collect();
    let grad_w: Vec<f64> = x
        .columns
        .iter()
        .zip(weights)
        .map(|(column, w)| {
            column.iter().zip(&residual).map(|(v, r)| v * r).sum::<f64>() / n + w / (c * n)
        })
        .collect();
    let grad_b = residual.iter().sum::<f64>() / n;
    (grad_w, grad_b)
}

fn gradient_norm(grad_w: &[f64], grad_b: f64) -> f64 {
    (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt()
}

/// Fit by Newton/IRLS with step halving.
pub fn fit(x: &FeatureMatrix, y: &[u8], opts: &FitOptions) -> Result<LogisticModel> {
    let n = x.n_records();
    if n == 0 || y.len() != n {
        return Err(Error::EmptyInput);
    }
    if !y.contains(&1) || !y.contains(&0) {
        return Err(Error::SingleClassTarget);
    }
    let d = x.n_features();
    let nf = n as f64;
    let mut weights = vec![0.0f64; d];
    let mut intercept = 0.0f64;
    let mut loss = penalized_loss(x, y, &weights, intercept, opts.c);
    let mut iterations = 0usize;
    let mut polished = false;

    loop {
        let (grad_w, grad_b) = gradient(x, y, &weights, intercept, opts.c);
        let norm = gradient_norm(&grad_w, grad_b);
        if norm < opts.tol {
            if polished {
                break;
            }
            polished = true;
        } else if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                gradient_norm: norm,
                weights,
                intercept,
            });
        }

        // Hessian: (1/n) X^T S X with ridge on the weight block.
        let z = linear_scores(x, &weights, intercept);
        let s: Vec<f64> = z
            .iter()
            .map(|&zi| {
                let p = sigmoid(zi);
                p * (1.0 - p)
            })
            .collect();
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for a in 0..d {
            for b in a..d {
                let v: f64 = x.columns[a]
                    .iter()
                    .zip(&x.columns[b])
                    .zip(&s)
                    .map(|((xa, xb), si)| xa * xb * si)
                    .sum::<f64>()
                    / nf;
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
            h[(a, a)] += 1.0 / (opts.c * nf);
            let v: f64 = x.columns[a].iter().zip(&s).map(|(xa, si)| xa * si).sum::<f64>() / nf;
            h[(a, d)] = v;
            h[(d, a)] = v;
        }
        h[(d, d)] = s.iter().sum::<f64>() / nf;

        let mut g = DVector::<f64>::zeros(d + 1);
        for (i, gw) in grad_w.iter().enumerate() {
            g[i] = *gw;
        }
        g[d] = grad_b;

        let step = match h.clone().cholesky() {
            Some(chol) => chol.solve(&g),
            None => h
                .lu()
                .solve(&g)
                .ok_or(Error::NoConvergence {
                    iterations,
                    gradient_norm: norm,
                    weights: weights.clone(),
                    intercept,
                })?,
        };

        // Step halving on the penalized objective. Near the optimum the
        // loss differences fall below f64 resolution and the comparison is
        // rounding noise, so the pure Newton step is taken unconditionally
        // there (the objective is convex and the step locally contractive).
        let mut accepted = false;
        if norm < 1e-6 {
            for (w, s) in weights.iter_mut().zip(step.iter()) {
                *w -= s;
            }
            intercept -= step[d];
            loss = penalized_loss(x, y, &weights, intercept, opts.c);
            accepted = true;
        } else {
            let mut scale = 1.0f64;
            for _ in 0..40 {
                let trial_w: Vec<f64> = weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w - scale * step[i])
                    .collect();
                let trial_b = intercept - scale * step[d];
                let trial_loss = penalized_loss(x, y, &trial_w, trial_b, opts.c);
                if trial_loss <= loss {
                    weights = trial_w;
                    intercept = trial_b;
                    loss = trial_loss;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
        }
        iterations += 1;
        if !accepted {
            if norm < opts.tol {
                break; // polish step found nothing better; already converged
            }
            return Err(Error::NoConvergence {
                iterations,
                gradient_norm: norm,
                weights,
                intercept,
            });
        }
    }

    Ok(LogisticModel {
        feature_names: x.names.clone(),
        weights,
        intercept,
        c: opts.c,
        training_meta: TrainingMeta {
            seed: opts.seed,
            convergence_tol: opts.tol,
            iterations_used: iterations,
        },
    })
}

/// Largest probability strictly below 1 and a tiny positive floor, so
/// predictions stay inside the open interval (0, 1).
const P_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;
const P_FLOOR: f64 = 1e-300;

/// Per-record probabilities `sigmoid(w . x + b)`, clamped into (0, 1).
pub fn predict_proba(model: &LogisticModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.names != model.feature_names {
        return Err(Error::SchemaMismatch(format!(
            "model expects columns {:?}, got {:?}",
            model.feature_names, x.names
        )));
    }
    Ok(linear_scores(x, &model.weights, model.intercept)
        .into_iter()
        .map(|z| sigmoid(z).clamp(P_FLOOR, P_CEIL))
        .collect())
}

/// Grid-search record: candidate inverse-regularization values, their mean
/// cross-validated AUC, and the chosen value (ties pick the smallest c).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub chosen: f64,
    pub folds: usize,
}

/// Stratified fold ids per record (class-wise round-robin after a seeded
/// shuffle).
fn stratified_folds(y: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
    let minority = pos.len().min(neg.len());
    if minority < folds {
        return Err(Error::Stratification { folds, minority });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold_of = vec![0usize; y.len()];
    for (i, &idx) in pos.iter().enumerate() {
        fold_of[idx] = i % folds;
    }
    for (i, &idx) in neg.iter().enumerate() {
        fold_of[idx] = i % folds;
    }
    Ok(fold_of)
}

/// Stratified k-fold grid search scored by mean validation AUC, followed by
/// a refit on all data at the chosen c.
pub fn grid_search(
    x: &FeatureMatrix,
    y: &[u8],
    grid: &[f64],
    folds: usize,
    seed: u64,
    base: &FitOptions,
) -> Result<(GridSearchResult, LogisticModel)> {
    if grid.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let fold_of = stratified_folds(y, folds, seed)?;
    let jobs = grid.len() * folds;
    let results: Vec<Result<f64>> = par::map_indexed(jobs, |job| {
        let c = grid[job / folds];
        let fold = job % folds;
        let train_rows: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
        let val_rows: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
        let x_train = x.subset(&train_rows);
        let y_train: Vec<u8> = train_rows.iter().map(|&i| y[i]).collect();
        let model = fit(
            &x_train,
            &y_train,
            &FitOptions {
                c,
                seed: seed::derive(seed, job as u64),
                ..*base
            },
        )?;
        let x_val = x.subset(&val_rows);
        let y_val: Vec<u8> = val_rows.iter().map(|&i| y[i]).collect();
        let p = predict_proba(&model, &x_val)?;
        let (auc, _) = eval::auc_roc(&y_val, &p)?;
        Ok(auc)
    });

    let mut fold_scores = Vec::with_capacity(jobs);
    for r in results {
        fold_scores.push(r?);
    }
    let scores: Vec<f64> = (0..grid.len())
        .map(|ci| fold_scores[ci * folds..(ci + 1) * folds].iter().sum::<f64>() / folds as f64)
        .collect();

    let mut chosen = grid[0];
    let mut best = scores[0];
    for (c, s) in grid.iter().zip(&scores).skip(1) {
        if *s > best || (*s == best && *c < chosen) {
            best = *s;
            chosen = *c;
        }
    }

    let model = fit(
        x,
        y,
        &FitOptions {
            c: chosen,
            seed,
            ..*base
        },
    )?;
    Ok((
        GridSearchResult {
            grid: grid.to_vec(),
            scores,
            chosen,
            folds,
        },
        model,
    ))
}

/// Recursive feature elimination: repeatedly drop the feature with the
/// smallest `|weight| * std(column)` until `target_count` remain.
///
/// Returns the final model and the eliminated names in drop order.
pub fn rfe_baseline(
    x: &FeatureMatrix,
    y: &[u8],
    target_count: usize,
    opts: &FitOptions,
) -> Result<(LogisticModel, Vec<String>)> {
    if x.n_features() < target_count {
        return Err(Error::SchemaMismatch(format!(
            "cannot select {target_count} features from {}",
            x.n_features()
        )));
    }
    let mut active = x.clone();
    let mut eliminated = Vec::new();
    while active.n_features() > target_count {
        let model = fit(&active, y, opts)?;
        let mut worst: Option<(f64, usize)> = None;
        for (i, w) in model.weights.iter().enumerate() {
            let scale = crate::encoding::population_variance(&active.columns[i]).sqrt();
            let score = w.abs() * scale;
            let better = match worst {
                None => true,
                Some((ws, wi)) => {
                    score < ws || (score == ws && active.names[i] < active.names[wi])
                }
            };
            if better {
                worst = Some((score, i));
            }
        }
        let (_, drop_idx) = worst.expect("at least one feature active");
        eliminated.push(active.names[drop_idx].clone());
        let keep: Vec<String> = active
            .names
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != drop_idx)
            .map(|(_, n)| n.clone())
            .collect();
        active = active.select(&keep)?;
    }
    let model = fit(&active, y, opts)?;
    Ok((model, eliminated))
}
