//! Regression with a hidden logistic process.
//!
//! A curve `x(f)` is modelled as a mixture of `K` polynomial regressions in
//! log-frequency whose mixing weights are a softmax of affine functions of
//! log-frequency:
//!
//! ```text
//! x_i = beta_{z_i} . r(f_i) + sigma_{z_i} eps_i,     r(f) = (1, f, ..., f^p)
//! P(z_i = k) = exp(w_k0 + w_k1 f_i) / sum_j exp(w_j0 + w_j1 f_i)
//! ```
//!
//! Parameters are estimated by EM; the gate weights are updated inside the
//! M-step by a multi-class IRLS (Newton) iteration. The last row of `w` is
//! pinned to zero, which loses nothing because the softmax is invariant to a
//! common shift of all rows.

mod em;
mod irls;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use em::{fit_em, FitDiagnostics, RhlpFit, RunDiagnostics};
pub use irls::{irls_gradient, irls_objective, irls_update, IrlsOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RhlpConfig {
    /// Number of regimes.
    pub k: usize,
    /// Polynomial degree of every regime.
    pub p: usize,
    pub max_em_iters: usize,
    /// Stop when the relative log-likelihood gain falls below this.
    pub em_tol: f64,
    pub max_irls_iters: usize,
    pub irls_tol: f64,
    /// Number of EM runs from different initial partitions.
    pub n_init: usize,
    /// Lower bound on every regime variance (Ω²).
    pub variance_floor: f64,
    pub seed: u64,
}

impl Default for RhlpConfig {
    fn default() -> Self {
        Self {
            k: 3,
            p: 3,
            max_em_iters: 500,
            em_tol: 1e-8,
            max_irls_iters: 50,
            irls_tol: 1e-8,
            n_init: 10,
            variance_floor: 1e-9,
            seed: 0,
        }
    }
}

impl RhlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.n_init < 1 || self.variance_floor <= 0.0 || self.max_em_iters < 1 {
            return Err(Error::InvalidConfig(format!("rhlp: {self:?}")));
        }
        Ok(())
    }

    /// Smallest sample count accepted by [`fit_em`].
    pub fn min_points(&self) -> usize {
        self.k * (self.p + 2)
    }
}

/// Fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhlpModel {
    /// Gate weights, one `(w_k0, w_k1)` row per regime; the last row is zero.
    pub w: Vec<[f64; 2]>,
    /// Polynomial coefficients per regime, lowest degree first.
    pub betas: Vec<Vec<f64>>,
    /// Regime variances (Ω²).
    pub sigma2: Vec<f64>,
    /// Log-likelihood of the training data under this model.
    pub loglik: f64,
}

impl RhlpModel {
    pub fn k(&self) -> usize {
        self.w.len()
    }

    pub fn p(&self) -> usize {
        self.betas[0].len() - 1
    }

    /// Value of regime `k`'s polynomial at `logf`.
    pub fn regime_value(&self, k: usize, logf: f64) -> f64 {
        poly_eval(&self.betas[k], logf)
    }

    pub fn probs(&self, logf: f64) -> Vec<f64> {
        logistic_probs(&self.w, logf)
    }

    /// Flat, row-major representation used for serialization.
    pub fn to_document(&self) -> RhlpDocument {
        RhlpDocument {
            k: self.k(),
            p: self.p(),
            w: self.w.iter().flatten().copied().collect(),
            betas: self.betas.iter().flatten().copied().collect(),
            sigma2: self.sigma2.clone(),
            loglik: self.loglik,
        }
    }

    pub fn from_document(doc: &RhlpDocument) -> Result<Self> {
        let (k, p) = (doc.k, doc.p);
        if k == 0 || doc.w.len() != 2 * k || doc.betas.len() != k * (p + 1) || doc.sigma2.len() != k
        {
            return Err(Error::InvalidConfig(format!(
                "rhlp document has inconsistent shapes for k={k}, p={p}"
            )));
        }
        Ok(Self {
            w: doc.w.chunks(2).map(|c| [c[0], c[1]]).collect(),
            betas: doc.betas.chunks(p + 1).map(<[f64]>::to_vec).collect(),
            sigma2: doc.sigma2.clone(),
            loglik: doc.loglik,
        })
    }
}

/// Row-major flat form of [`RhlpModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhlpDocument {
    pub k: usize,
    pub p: usize,
    pub w: Vec<f64>,
    pub betas: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub loglik: f64,
}

/// Per-sample regime labels (0-based) and the log-frequencies where the
/// dominant regime changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub labels: Vec<usize>,
    pub boundaries: Vec<f64>,
}

impl Segmentation {
    /// Contiguous runs of equal labels as `(label, start, end)` on the axis,
    /// where interior ends are the boundaries.
    pub fn runs(&self, axis: &[f64]) -> Vec<(usize, f64, f64)> {
        let mut runs = Vec::new();
        let mut start = axis[0];
        let mut b = self.boundaries.iter();
        for i in 1..=self.labels.len() {
            if i == self.labels.len() {
                runs.push((self.labels[i - 1], start, axis[i - 1]));
            } else if self.labels[i] != self.labels[i - 1] {
                let end = *b.next().expect("one boundary per label change");
                runs.push((self.labels[i - 1], start, end));
                start = end;
            }
        }
        runs
    }
}

/// `(1, f, f², …, f^p)`.
pub fn regressor_vector(logf: f64, p: usize) -> Vec<f64> {
    let mut r = Vec::with_capacity(p + 1);
    let mut v = 1.0;
    for _ in 0..=p {
        r.push(v);
        v *= logf;
    }
    r
}

/// Horner evaluation, coefficients lowest degree first.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub(crate) fn logits(w: &[[f64; 2]], logf: f64) -> impl Iterator<Item = f64> + '_ {
    w.iter().map(move |row| row[0] + row[1] * logf)
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Log of the gate probabilities, stable for arbitrarily large logits.
pub fn log_logistic_probs(w: &[[f64; 2]], logf: f64) -> Vec<f64> {
    let l: Vec<f64> = logits(w, logf).collect();
    let lse = log_sum_exp(&l);
    l.into_iter().map(|v| v - lse).collect()
}

pub fn logistic_probs(w: &[[f64; 2]], logf: f64) -> Vec<f64> {
    let l: Vec<f64> = logits(w, logf).collect();
    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = l.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(crate) fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

/// Per-regime joint log terms `log pi_k(f) + log phi(x; beta_k . r, sigma_k²)`.
pub(crate) fn joint_log_terms(model: &RhlpModel, logf: f64, x: f64) -> Vec<f64> {
    log_logistic_probs(&model.w, logf)
        .into_iter()
        .enumerate()
        .map(|(k, lp)| lp + log_normal(x, model.regime_value(k, logf), model.sigma2[k]))
        .collect()
}

/// Mixture density of `x` at log-frequency `logf`.
pub fn density(model: &RhlpModel, logf: f64, x: f64) -> f64 {
    log_sum_exp(&joint_log_terms(model, logf, x)).exp()
}

pub fn log_likelihood(model: &RhlpModel, logf: &[f64], x: &[f64]) -> f64 {
    logf.iter()
        .zip(x)
        .map(|(&f, &xi)| log_sum_exp(&joint_log_terms(model, f, xi)))
        .sum()
}

/// Expected curve value: the gate-weighted sum of the regime polynomials.
pub fn approximate(model: &RhlpModel, logf: f64) -> f64 {
    model
        .probs(logf)
        .iter()
        .enumerate()
        .map(|(k, pi)| pi * model.regime_value(k, logf))
        .sum()
}

/// Index of the largest gate probability; ties go to the smallest index.
pub fn dominant_regime(w: &[[f64; 2]], logf: f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, v) in logits(w, logf).enumerate() {
        if v > best_val {
            best_val = v;
            best = k;
        }
    }
    best
}

/// Resolution of boundary bisection on the log-frequency axis.
pub const BOUNDARY_RESOLUTION: f64 = 1e-6;

/// Labels every axis point with its dominant regime and locates each label
/// change between neighbouring points by bisection.
pub fn segment(model: &RhlpModel, axis: &[f64]) -> Segmentation {
    let labels: Vec<usize> = axis.iter().map(|&f| dominant_regime(&model.w, f)).collect();
    let mut boundaries = Vec::new();
    for i in 1..axis.len() {
        if labels[i] == labels[i - 1] {
            continue;
        }
        let (mut lo, mut hi) = (axis[i - 1], axis[i]);
        while hi - lo > BOUNDARY_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if dominant_regime(&model.w, mid) == labels[i - 1] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        boundaries.push(0.5 * (lo + hi));
    }
    Segmentation { labels, boundaries }
}

/// Gate weights whose argmax switches from regime 0 to 1 at `b1` and from
/// 1 to 2 at `b2`, with logit slopes proportional to `sharpness`.
pub fn three_regime_gate(b1: f64, b2: f64, sharpness: f64) -> Vec<[f64; 2]> {
    let s = sharpness;
    vec![[s * (b1 + b2), -2.0 * s], [s * b2, -s], [0.0, 0.0]]
}
