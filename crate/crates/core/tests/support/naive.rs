//! Straightforward reference implementations used as test oracles. They
//! share no code with the library: raw (unscaled) design with an intercept,
//! Householder QR, explicit double loops.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub struct NaiveLoo {
    pub predictions: Vec<f64>,
    pub train_me: f64,
    pub test_me: f64,
    pub train_mse: f64,
    pub test_mse: f64,
}

/// Least squares through Householder QR. Columns that add nothing to the
/// span of the earlier ones are dropped (coefficient zero), which leaves the
/// fitted values unchanged.
fn lstsq_qr(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let mut kept: Vec<usize> = Vec::new();
    for c in 0..a.ncols() {
        let mut trial = kept.clone();
        trial.push(c);
        let sub = a.select_columns(&trial);
        let r = sub.qr().r();
        let last = r[(trial.len() - 1, trial.len() - 1)].abs();
        if last > 1e-9 * a.column(c).norm() {
            kept.push(c);
        }
    }
    let sub = a.select_columns(&kept);
    let qr = sub.qr();
    let coef = qr.r().solve_upper_triangular(&(qr.q().transpose() * b))?;
    let mut full = DVector::zeros(a.ncols());
    for (i, &c) in kept.iter().enumerate() {
        full[c] = coef[i];
    }
    Some(full)
}

/// Training-row column is constant (single distinct value).
fn constant_on(rows: &[Vec<f64>], train: &[usize], j: usize) -> bool {
    let first = rows[train[0]][j];
    train.iter().all(|&r| rows[r][j] == first)
}

/// Leave-one-out by refitting on every fold. `None` when a fold has a
/// constant column.
pub fn naive_loo(rows: &[Vec<f64>], y: &[f64], subset: &[usize]) -> Option<NaiveLoo> {
    let n = rows.len();
    let mut predictions = vec![0.0; n];
    let mut train_me = 0.0;
    let mut train_mse = 0.0;
    for held in 0..n {
        let train: Vec<usize> = (0..n).filter(|&r| r != held).collect();
        if subset.iter().any(|&j| constant_on(rows, &train, j)) {
            return None;
        }
        let a = DMatrix::from_fn(train.len(), subset.len() + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                rows[train[r]][subset[c - 1]]
            }
        });
        let b = DVector::from_fn(train.len(), |r, _| y[train[r]]);
        let coef = lstsq_qr(&a, &b)?;
        let eval = |row: &Vec<f64>| {
            let mut v = coef[0];
            for (c, &j) in subset.iter().enumerate() {
                v += coef[c + 1] * row[j];
            }
            v
        };
        predictions[held] = eval(&rows[held]);
        let mut abs = 0.0;
        let mut sq = 0.0;
        for &r in &train {
            let e = eval(&rows[r]) - y[r];
            abs += e.abs();
            sq += e * e;
        }
        train_me += abs / train.len() as f64;
        train_mse += sq / train.len() as f64;
    }
    let mut test_me = 0.0;
    let mut test_mse = 0.0;
    for i in 0..n {
        let e = predictions[i] - y[i];
        test_me += e.abs();
        test_mse += e * e;
    }
    Some(NaiveLoo {
        predictions,
        train_me: train_me / n as f64,
        test_me: test_me / n as f64,
        train_mse: train_mse / n as f64,
        test_mse: test_mse / n as f64,
    })
}

pub struct NaiveBest {
    pub subset: Vec<usize>,
    pub loo: NaiveLoo,
    /// Other subsets within the tie tolerance, in canonical order.
    pub tied: Vec<Vec<usize>>,
    pub evaluated: usize,
}

fn combinations(d: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for j in start..d {
        cur.push(j);
        combinations(d, k, j + 1, cur, out);
        cur.pop();
    }
}

/// Every subset of size 1..=max_dim; by size, then lexicographic.
pub fn all_subsets(d: usize, max_dim: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in 1..=max_dim {
        combinations(d, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// Brute-force best subset. Scores within `1e-9 (|min| + scale)` tie, where
/// `scale` is the population standard deviation of `y` for mean absolute error
/// and its variance for mean squared error; ties go to the first subset in
/// size-then-lexicographic order.
pub fn naive_select(
    rows: &[Vec<f64>],
    y: &[f64],
    max_dim: usize,
    squared: bool,
) -> Option<NaiveBest> {
    let d = rows[0].len();
    let subsets = all_subsets(d, max_dim);
    let evaluated = subsets.len();
    let mut scored: Vec<(Vec<usize>, NaiveLoo)> = Vec::new();
    for s in subsets {
        if let Some(l) = naive_loo(rows, y, &s) {
            scored.push((s, l));
        }
    }
    let score = |l: &NaiveLoo| if squared { l.test_mse } else { l.test_me };
    let min = scored.iter().map(|(_, l)| score(l)).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = if squared { var } else { var.sqrt() };
    let tol = 1e-9 * (min.abs() + scale);
    let mut winners: Vec<(Vec<usize>, NaiveLoo)> =
        scored.into_iter().filter(|(_, l)| score(l) <= min + tol).collect();
    // subsets were generated in canonical order, so the first is the winner
    let (subset, loo) = winners.remove(0);
    Some(NaiveBest {
        subset,
        loo,
        tied: winners.into_iter().map(|(s, _)| s).collect(),
        evaluated,
    })
}
