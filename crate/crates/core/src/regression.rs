//! Age estimation: z-scored OLS, leave-one-out evaluation and exhaustive
//! feature-subset search.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_names, FeatureVector};
use crate::linalg::min_norm_least_squares;

/// Largest number of columns the exhaustive search accepts.
pub const MAX_SEARCH_FEATURES: usize = 24;

/// Relative Cholesky pivot below which a fold is solved by SVD instead.
const PIVOT_RTOL: f64 = 1e-8;

/// Scores closer than this (relative to the best score plus the target
/// scale) count as tied.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `N x D` feature matrix.
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub names: Vec<String>,
    pub cell_ids: Vec<String>,
}

impl Dataset {
    pub fn new(
        rows: &[Vec<f64>],
        y: Vec<f64>,
        names: Vec<String>,
        cell_ids: Vec<String>,
    ) -> Result<Self> {
        let n = rows.len();
        let d = names.len();
        if n < 3 {
            return Err(Error::InvalidDataset(format!("need at least 3 rows, got {n}")));
        }
        if d == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if y.len() != n || cell_ids.len() != n || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidDataset("inconsistent shapes".into()));
        }
        if rows.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite entry".into()));
        }
        Ok(Self {
            x: DMatrix::from_fn(n, d, |i, j| rows[i][j]),
            y,
            names,
            cell_ids,
        })
    }

    /// Dataset with the 18 canonical descriptors as columns.
    pub fn from_features(features: &[FeatureVector]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = features.iter().map(|f| f.values().to_vec()).collect();
        Self::new(
            &rows,
            features.iter().map(|f| f.age_hours).collect(),
            feature_names().iter().map(|s| s.to_string()).collect(),
            features.iter().map(|f| f.cell_id.clone()).collect(),
        )
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            x: self.x.select_columns(columns),
            y: self.y.clone(),
            names: columns.iter().map(|&c| self.names[c].clone()).collect(),
            cell_ids: self.cell_ids.clone(),
        }
    }

    pub fn subset_names(&self, subset: &[usize]) -> Vec<String> {
        subset.iter().map(|&j| self.names[j].clone()).collect()
    }
}

/// Mean and sample standard deviation of each column over `rows`.
fn column_stats(x: &DMatrix<f64>, rows: &[usize], col: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&i| x[(i, col)]).sum::<f64>() / n;
    let ss: f64 = rows.iter().map(|&i| (x[(i, col)] - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn target_stats(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    let ss: f64 = rows.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    // a constant target is only centred
    (mean, if is_constant(mean, sd) { 1.0 } else { sd })
}

// written so that a NaN sd also counts as constant
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn is_constant(mean: f64, sd: f64) -> bool {
    !(sd > 1e-13 * mean.abs())
}

/// Linear model on z-scored inputs; predictions are returned in the target's
/// original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub feature_indices: Vec<usize>,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    /// The normalized design was rank-deficient; weights are minimum-norm.
    pub rank_deficient: bool,
}

impl LinearModel {
    /// `x` is a full feature row; only `feature_indices` are read.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let z: f64 = self
            .feature_indices
            .iter()
            .zip(&self.weights)
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|((&j, w), (m, s))| w * (x[j] - m) / s)
            .sum();
        self.y_mean + self.y_std * (self.intercept + z)
    }
}

/// Fits OLS using only `rows` of `x` and `y`.
fn fit_rows(x: &DMatrix<f64>, y: &[f64], rows: &[usize], subset: &[usize]) -> Result<LinearModel> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut x_mean = Vec::with_capacity(subset.len());
    let mut x_std = Vec::with_capacity(subset.len());
    for &j in subset {
        let (m, s) = column_stats(x, rows, j);
        if is_constant(m, s) {
            return Err(Error::ConstantColumn { column: j });
        }
        x_mean.push(m);
        x_std.push(s);
    }
    let (y_mean, y_std) = target_stats(y, rows);
    let d = subset.len();
    let design = DMatrix::from_fn(rows.len(), d + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            (x[(rows[r], subset[c - 1])] - x_mean[c - 1]) / x_std[c - 1]
        }
    });
    let target = DVector::from_fn(rows.len(), |r, _| (y[rows[r]] - y_mean) / y_std);
    let ls = min_norm_least_squares(&design, &target);
    let (sol, rank) = (ls.x, ls.rank);
    Ok(LinearModel {
        weights: sol[1..].to_vec(),
        intercept: sol[0],
        feature_indices: subset.to_vec(),
        x_mean,
        x_std,
        y_mean,
        y_std,
        rank_deficient: rank < d + 1,
    })
}

/// Fits an OLS model on all rows of `x` using the columns in `subset`.
pub fn ols_fit(x: &DMatrix<f64>, y: &[f64], subset: &[usize]) -> Result<LinearModel> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    fit_rows(x, y, &rows, subset)
}

pub fn predict(m: &LinearModel, x: &[f64]) -> f64 {
    m.predict(x)
}

/// Mean absolute error.
pub fn mean_error(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64
}

pub fn mean_squared_error(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64
}

/// Leave-one-out results for one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub subset: Vec<usize>,
    /// Mean over folds of each fold's training mean absolute error.
    pub train_me: f64,
    /// Mean absolute error of the held-out predictions.
    pub test_me: f64,
    pub train_mse: f64,
    pub test_mse: f64,
    /// Held-out prediction for every sample.
    pub predictions: Vec<f64>,
    /// `|prediction - truth|` for every sample.
    pub abs_errors: Vec<f64>,
    pub fold_train_me: Vec<f64>,
}

fn fold_rows(n: usize, held_out: usize) -> Vec<usize> {
    (0..n).filter(|&r| r != held_out).collect()
}

/// The model trained with row `held_out` removed.
pub fn fold_model(data: &Dataset, subset: &[usize], held_out: usize) -> Result<LinearModel> {
    fit_rows(&data.x, &data.y, &fold_rows(data.n_samples(), held_out), subset)
}

pub fn loo_cv(data: &Dataset, subset: &[usize]) -> Result<LooReport> {
    let n = data.n_samples();
    let mut predictions = Vec::with_capacity(n);
    let mut fold_train_me = Vec::with_capacity(n);
    let mut fold_train_mse = Vec::with_capacity(n);
    for i in 0..n {
        let rows = fold_rows(n, i);
        let model = fit_rows(&data.x, &data.y, &rows, subset)?;
        predictions.push(model.predict(&data.row(i)));
        let train_pred: Vec<f64> = rows.iter().map(|&r| model.predict(&data.row(r))).collect();
        let train_truth: Vec<f64> = rows.iter().map(|&r| data.y[r]).collect();
        fold_train_me.push(mean_error(&train_pred, &train_truth));
        fold_train_mse.push(mean_squared_error(&train_pred, &train_truth));
    }
    Ok(LooReport {
        subset: subset.to_vec(),
        train_me: fold_train_me.iter().sum::<f64>() / n as f64,
        test_me: mean_error(&predictions, &data.y),
        train_mse: fold_train_mse.iter().sum::<f64>() / n as f64,
        test_mse: mean_squared_error(&predictions, &data.y),
        abs_errors: predictions.iter().zip(&data.y).map(|(p, t)| (p - t).abs()).collect(),
        predictions,
        fold_train_me,
    })
}

/// Score minimized by the subset search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    MeanAbsolute,
    #[default]
    MeanSquared,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    /// Largest subset size considered.
    pub max_dim: Option<usize>,
    pub criterion: Criterion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    mask: u32,
    train_me: f64,
    test_me: f64,
    train_mse: f64,
    test_mse: f64,
}

impl Score {
    fn value(&self, c: Criterion) -> f64 {
        match c {
            Criterion::MeanAbsolute => self.test_me,
            Criterion::MeanSquared => self.test_mse,
        }
    }
}

/// Leave-one-out scores of one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub subset: Vec<usize>,
    pub names: Vec<String>,
    pub train_me: f64,
    pub test_me: f64,
    pub train_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub criterion: Criterion,
    pub best: SubsetScore,
    /// Best subset of every feasible size, smallest size first.
    pub per_dimension_best: Vec<SubsetScore>,
    /// Held-out predictions of the best subset.
    pub predictions: Vec<f64>,
    pub abs_errors: Vec<f64>,
    /// Other subsets tied with the best one (at most 32 listed).
    pub tied_with_best: Vec<Vec<usize>>,
    pub evaluated: usize,
    pub infeasible: usize,
    /// Columns constant in at least one fold; subsets holding any are skipped.
    pub constant_columns: Vec<usize>,
    /// OLS refit of the best subset on every row.
    pub final_model: LinearModel,
}

/// Per-fold normalized data for fast repeated subset evaluation.
struct Fold {
    held_out: usize,
    rows: Vec<usize>,
    y_mean: f64,
    y_std: f64,
    /// Normalized training rows, `rows.len() x D`, row-major.
    z: Vec<f64>,
    z_held: Vec<f64>,
    /// `Z^T Z`, row-major `D x D`.
    gram: Vec<f64>,
    /// `Z^T y_z`.
    cross: Vec<f64>,
    constant: Vec<bool>,
}

/// Leave-one-out evaluator that solves each fold from precomputed normalized
/// Gram matrices, falling back to the SVD route for ill-conditioned subsets.
pub struct LooEvaluator<'a> {
    data: &'a Dataset,
    folds: Vec<Fold>,
    constant_mask: u32,
}

impl<'a> LooEvaluator<'a> {
    pub fn new(data: &'a Dataset) -> Result<Self> {
        let (n, d) = (data.n_samples(), data.n_features());
        if d > MAX_SEARCH_FEATURES {
            return Err(Error::InvalidDataset(format!(
                "{d} columns exceed the search limit of {MAX_SEARCH_FEATURES}"
            )));
        }
        let mut constant_mask = 0u32;
        let folds = (0..n)
            .map(|i| {
                let rows = fold_rows(n, i);
                let stats: Vec<(f64, f64)> =
                    (0..d).map(|j| column_stats(&data.x, &rows, j)).collect();
                let constant: Vec<bool> = stats.iter().map(|&(m, s)| is_constant(m, s)).collect();
                for (j, &c) in constant.iter().enumerate() {
                    if c {
                        constant_mask |= 1 << j;
                    }
                }
                let (y_mean, y_std) = target_stats(&data.y, &rows);
                let norm = |r: usize, j: usize| {
                    if constant[j] {
                        0.0
                    } else {
                        (data.x[(r, j)] - stats[j].0) / stats[j].1
                    }
                };
                let z: Vec<f64> = rows.iter().flat_map(|&r| (0..d).map(move |j| norm(r, j))).collect();
                let z_held = (0..d).map(|j| norm(i, j)).collect();
                let yz: Vec<f64> = rows.iter().map(|&r| (data.y[r] - y_mean) / y_std).collect();
                let m = rows.len();
                let mut gram = vec![0.0; d * d];
                let mut cross = vec![0.0; d];
                for a in 0..d {
                    for b in a..d {
                        let s: f64 = (0..m).map(|t| z[t * d + a] * z[t * d + b]).sum();
                        gram[a * d + b] = s;
                        gram[b * d + a] = s;
                    }
                    cross[a] = (0..m).map(|t| z[t * d + a] * yz[t]).sum();
                }
                Fold {
                    held_out: i,
                    rows,
                    y_mean,
                    y_std,
                    z,
                    z_held,
                    gram,
                    cross,
                    constant,
                }
            })
            .collect();
        Ok(Self {
            data,
            folds,
            constant_mask,
        })
    }

    /// Columns constant in at least one fold.
    pub fn constant_columns(&self) -> Vec<usize> {
        mask_to_indices(self.constant_mask)
    }

    /// Leave-one-out report for `subset`, or `None` when a fold has a
    /// constant column.
    pub fn evaluate(&self, subset: &[usize]) -> Option<LooReport> {
        let mask = indices_to_mask(subset);
        if mask == 0 || mask & self.constant_mask != 0 {
            return None;
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        Some(self.evaluate_sorted(&sorted))
    }

    fn evaluate_mask(&self, mask: u32) -> Option<Score> {
        if mask & self.constant_mask != 0 {
            return None;
        }
        let r = self.evaluate_sorted(&mask_to_indices(mask));
        Some(Score {
            mask,
            train_me: r.train_me,
            test_me: r.test_me,
            train_mse: r.train_mse,
            test_mse: r.test_mse,
        })
    }

    fn evaluate_sorted(&self, subset: &[usize]) -> LooReport {
        let data = self.data;
        let n = data.n_samples();
        let d_all = data.n_features();
        let d = subset.len();
        let mut predictions = vec![0.0; n];
        let mut fold_train_me = Vec::with_capacity(n);
        let mut train_mse_sum = 0.0;
        let mut chol = vec![0.0; d * d];
        let mut beta = vec![0.0; d];

        for fold in &self.folds {
            debug_assert!(subset.iter().all(|&j| !fold.constant[j]));
            let solved = cholesky_solve(fold, subset, d_all, &mut chol, &mut beta);
            let (train_abs, train_sq) = if solved {
                let z_dot = |row: &[f64]| -> f64 {
                    subset.iter().zip(&beta).map(|(&j, b)| row[j] * b).sum()
                };
                predictions[fold.held_out] = fold.y_mean + fold.y_std * z_dot(&fold.z_held);
                let mut abs = 0.0;
                let mut sq = 0.0;
                for (t, &r) in fold.rows.iter().enumerate() {
                    let p = fold.y_mean + fold.y_std * z_dot(&fold.z[t * d_all..(t + 1) * d_all]);
                    let e = p - data.y[r];
                    abs += e.abs();
                    sq += e * e;
                }
                (abs, sq)
            } else {
                let model = fit_rows(&data.x, &data.y, &fold.rows, subset)
                    .expect("constant columns are screened before evaluation");
                predictions[fold.held_out] = model.predict(&data.row(fold.held_out));
                let mut abs = 0.0;
                let mut sq = 0.0;
                for &r in &fold.rows {
                    let e = model.predict(&data.row(r)) - data.y[r];
                    abs += e.abs();
                    sq += e * e;
                }
                (abs, sq)
            };
            let m = fold.rows.len() as f64;
            fold_train_me.push(train_abs / m);
            train_mse_sum += train_sq / m;
        }

        LooReport {
            subset: subset.to_vec(),
            train_me: fold_train_me.iter().sum::<f64>() / n as f64,
            test_me: mean_error(&predictions, &data.y),
            train_mse: train_mse_sum / n as f64,
            test_mse: mean_squared_error(&predictions, &data.y),
            abs_errors: predictions.iter().zip(&data.y).map(|(p, t)| (p - t).abs()).collect(),
            predictions,
            fold_train_me,
        }
    }
}

/// Solves `G_SS beta = c_S` in place; returns false when a pivot is too
/// small relative to its diagonal entry.
fn cholesky_solve(fold: &Fold, subset: &[usize], d_all: usize, l: &mut [f64], beta: &mut [f64]) -> bool {
    let d = subset.len();
    for a in 0..d {
        for b in 0..=a {
            let mut s = fold.gram[subset[a] * d_all + subset[b]];
            for c in 0..b {
                s -= l[a * d + c] * l[b * d + c];
            }
            if a == b {
                let diag = fold.gram[subset[a] * d_all + subset[a]];
                if s.is_nan() || s <= PIVOT_RTOL * diag {
                    return false;
                }
                l[a * d + a] = s.sqrt();
            } else {
                l[a * d + b] = s / l[b * d + b];
            }
        }
    }
    for a in 0..d {
        let mut s = fold.cross[subset[a]];
        for c in 0..a {
            s -= l[a * d + c] * beta[c];
        }
        beta[a] = s / l[a * d + a];
    }
    for a in (0..d).rev() {
        let mut s = beta[a];
        for c in a + 1..d {
            s -= l[c * d + a] * beta[c];
        }
        beta[a] = s / l[a * d + a];
    }
    true
}

pub fn indices_to_mask(subset: &[usize]) -> u32 {
    subset.iter().fold(0, |m, &j| m | (1 << j))
}

pub fn mask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|j| mask & (1 << j) != 0).collect()
}

/// Smaller size first, then lexicographically smaller index list.
fn canonical_cmp(a: u32, b: u32) -> std::cmp::Ordering {
    a.count_ones()
        .cmp(&b.count_ones())
        .then_with(|| mask_to_indices(a).cmp(&mask_to_indices(b)))
}

/// Evaluates every nonempty subset (up to `max_dim` columns) by
/// leave-one-out and returns the one with the lowest score. Scores within
/// the tie tolerance go to the smaller subset, then the lexicographically
/// smaller one.
pub fn exhaustive_select(data: &Dataset, opts: &SelectionOptions) -> Result<SelectionReport> {
    let eval = LooEvaluator::new(data)?;
    let d = data.n_features();
    let max_dim = opts.max_dim.unwrap_or(d).min(d);
    let masks: Vec<u32> = (1u32..(1u32 << d))
        .filter(|m| m.count_ones() as usize <= max_dim)
        .collect();
    let scores: Vec<Option<Score>> = masks.par_iter().map(|&m| eval.evaluate_mask(m)).collect();
    let evaluated = scores.len();
    let feasible: Vec<Score> = scores.into_iter().flatten().collect();
    let infeasible = evaluated - feasible.len();
    if feasible.is_empty() {
        return Err(Error::NoFeasibleSubset);
    }

    let sd = {
        let n = data.y.len() as f64;
        let m = data.y.iter().sum::<f64>() / n;
        (data.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
    };
    let scale = match opts.criterion {
        Criterion::MeanAbsolute => sd,
        Criterion::MeanSquared => sd * sd,
    };
    let pick = |candidates: &mut dyn Iterator<Item = &Score>| -> Option<(Score, Vec<u32>)> {
        let pool: Vec<&Score> = candidates.collect();
        let min = pool
            .iter()
            .map(|s| s.value(opts.criterion))
            .fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return None;
        }
        let tol = TIE_RTOL * (min.abs() + scale);
        let mut tied: Vec<&Score> = pool
            .into_iter()
            .filter(|s| s.value(opts.criterion) <= min + tol)
            .collect();
        tied.sort_by(|a, b| canonical_cmp(a.mask, b.mask));
        Some((*tied[0], tied[1..].iter().map(|s| s.mask).collect()))
    };

    let (best, ties) = pick(&mut feasible.iter()).ok_or(Error::NoFeasibleSubset)?;
    let per_dimension_best = (1..=max_dim)
        .filter_map(|k| {
            pick(&mut feasible.iter().filter(|s| s.mask.count_ones() as usize == k))
                .map(|(s, _)| subset_score(data, &s))
        })
        .collect();

    let best_subset = mask_to_indices(best.mask);
    let detail = eval.evaluate(&best_subset).expect("best subset is feasible");
    let final_model = ols_fit(&data.x, &data.y, &best_subset)?;
    Ok(SelectionReport {
        criterion: opts.criterion,
        best: subset_score(data, &best),
        per_dimension_best,
        predictions: detail.predictions,
        abs_errors: detail.abs_errors,
        tied_with_best: ties.into_iter().take(32).map(mask_to_indices).collect(),
        evaluated,
        infeasible,
        constant_columns: eval.constant_columns(),
        final_model,
    })
}

fn subset_score(data: &Dataset, s: &Score) -> SubsetScore {
    let subset = mask_to_indices(s.mask);
    SubsetScore {
        names: data.subset_names(&subset),
        subset,
        train_me: s.train_me,
        test_me: s.test_me,
        train_mse: s.train_mse,
        test_mse: s.test_mse,
    }
}
