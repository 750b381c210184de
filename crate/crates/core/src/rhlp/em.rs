//! EM fitting of the hidden-logistic-process regression.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::irls::{irls_update, IrlsOutcome};
use super::{joint_log_terms, log_likelihood, log_sum_exp, regressor_vector};
use super::{RhlpConfig, RhlpModel};
use crate::error::{Error, Result};
use crate::linalg::min_norm_least_squares;

/// Per-regime responsibility mass below which the regime counts as starved,
/// per parameter of the regime.
const STARVATION_MASS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub run: usize,
    /// Sample indices where the initial partition starts a new block.
    pub initial_cuts: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after the initial M-step and after every EM iteration.
    pub loglik_trace: Vec<f64>,
    pub singular_hessian_steps: usize,
    pub irls_iterations: usize,
    /// Set when the run was abandoned.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub best_run: usize,
    pub runs: Vec<RunDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhlpFit {
    pub model: RhlpModel,
    pub diagnostics: FitDiagnostics,
}

/// Fits the model by EM from `cfg.n_init` initial partitions and keeps the
/// run with the highest log-likelihood (earliest run on ties).
///
/// Run 0 starts from `K` equal contiguous blocks of the axis; the others move
/// the block edges at random. A run whose regime loses all responsibility is
/// abandoned; the fit fails only if every run is.
pub fn fit_em(logf: &[f64], x: &[f64], cfg: &RhlpConfig) -> Result<RhlpFit> {
    cfg.validate()?;
    let n = logf.len();
    if x.len() != n {
        return Err(Error::MismatchedLengths {
            freqs: n,
            re: x.len(),
            im: x.len(),
        });
    }
    if n < cfg.min_points() {
        return Err(Error::TooFewPoints {
            got: n,
            min: cfg.min_points(),
        });
    }
    if !logf.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidConfig(
            "rhlp: log-frequency axis must be strictly increasing".into(),
        ));
    }

    let outcomes: Vec<(Result<RhlpModel>, RunDiagnostics)> = (0..cfg.n_init)
        .into_par_iter()
        .map(|run| {
            let cuts = initial_cuts(n, cfg, run);
            run_em(logf, x, cfg, run, cuts)
        })
        .collect();

    let mut best: Option<(usize, RhlpModel)> = None;
    let mut first_err = None;
    let mut runs = Vec::with_capacity(outcomes.len());
    for (run, (result, diag)) in outcomes.into_iter().enumerate() {
        match result {
            Ok(model) => {
                if best.as_ref().map_or(true, |(_, b)| model.loglik > b.loglik) {
                    best = Some((run, model));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
        runs.push(diag);
    }
    match best {
        Some((best_run, model)) => Ok(RhlpFit {
            model,
            diagnostics: FitDiagnostics { best_run, runs },
        }),
        None => Err(first_err.expect("at least one run")),
    }
}

fn initial_cuts(n: usize, cfg: &RhlpConfig, run: usize) -> Vec<usize> {
    let k = cfg.k;
    let min_block = cfg.p + 2;
    let uniform: Vec<usize> = (1..k).map(|j| (j * n + k / 2) / k).collect();
    if run == 0 || k == 1 {
        return uniform;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run as u64);
    let half = n as f64 / (2 * k) as f64;
    let mut cuts: Vec<usize> = uniform
        .iter()
        .map(|&c| {
            let c = c as f64 + rng.random_range(-half..=half);
            c.round().clamp(0.0, n as f64) as usize
        })
        .collect();
    cuts.sort_unstable();
    // keep every block at least `min_block` long
    let mut lower = min_block;
    for c in cuts.iter_mut() {
        *c = (*c).max(lower);
        lower = *c + min_block;
    }
    let mut upper = n.saturating_sub(min_block);
    for c in cuts.iter_mut().rev() {
        *c = (*c).min(upper);
        upper = c.saturating_sub(min_block);
    }
    let valid = cuts.first().is_some_and(|&c| c >= min_block)
        && cuts.windows(2).all(|w| w[1] >= w[0] + min_block)
        && cuts.last().is_some_and(|&c| c + min_block <= n);
    if valid {
        cuts
    } else {
        uniform
    }
}

fn hard_responsibilities(n: usize, k: usize, cuts: &[usize]) -> Vec<Vec<f64>> {
    let mut tau = vec![vec![0.0; k]; n];
    let mut regime = 0;
    for (i, row) in tau.iter_mut().enumerate() {
        while regime < cuts.len() && i >= cuts[regime] {
            regime += 1;
        }
        row[regime] = 1.0;
    }
    tau
}

struct MStep {
    model: RhlpModel,
    singular_hessian: bool,
    irls_iterations: usize,
}

fn m_step(
    logf: &[f64],
    x: &[f64],
    tau: &[Vec<f64>],
    w_prev: &[[f64; 2]],
    cfg: &RhlpConfig,
    update_gate: bool,
) -> Result<MStep> {
    let n = logf.len();
    let dim = cfg.p + 1;
    let mut betas = Vec::with_capacity(cfg.k);
    let mut sigma2 = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let mass: f64 = tau.iter().map(|t| t[k]).sum();
        if mass < (cfg.p + 2) as f64 * STARVATION_MASS {
            return Err(Error::DegenerateFit { regime: k, mass });
        }
        let a = DMatrix::from_fn(n, dim, |i, j| tau[i][k].sqrt() * logf[i].powi(j as i32));
        let b = DVector::from_fn(n, |i, _| tau[i][k].sqrt() * x[i]);
        let beta = min_norm_least_squares(&a, &b).x;
        let rss: f64 = (0..n)
            .map(|i| {
                let r = regressor_vector(logf[i], cfg.p);
                let fit: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
                tau[i][k] * (x[i] - fit).powi(2)
            })
            .sum();
        sigma2.push((rss / mass).max(cfg.variance_floor));
        betas.push(beta);
    }
    let irls = if update_gate {
        irls_update(tau, logf, w_prev, cfg.max_irls_iters, cfg.irls_tol)
    } else {
        IrlsOutcome {
            w: w_prev.to_vec(),
            objective: f64::NAN,
            iterations: 0,
            singular_hessian: false,
        }
    };
    let mut model = RhlpModel {
        w: irls.w,
        betas,
        sigma2,
        loglik: f64::NAN,
    };
    model.loglik = log_likelihood(&model, logf, x);
    Ok(MStep {
        model,
        singular_hessian: irls.singular_hessian,
        irls_iterations: irls.iterations,
    })
}

fn e_step(model: &RhlpModel, logf: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
    logf.iter()
        .zip(x)
        .map(|(&f, &xi)| {
            let terms = joint_log_terms(model, f, xi);
            let lse = log_sum_exp(&terms);
            terms.into_iter().map(|t| (t - lse).exp()).collect()
        })
        .collect()
}

fn run_em(
    logf: &[f64],
    x: &[f64],
    cfg: &RhlpConfig,
    run: usize,
    cuts: Vec<usize>,
) -> (Result<RhlpModel>, RunDiagnostics) {
    let mut diag = RunDiagnostics {
        run,
        initial_cuts: cuts,
        iterations: 0,
        converged: false,
        loglik_trace: Vec::new(),
        singular_hessian_steps: 0,
        irls_iterations: 0,
        failure: None,
    };
    let tau = hard_responsibilities(logf.len(), cfg.k, &diag.initial_cuts);
    // Regressions start from the blocks; the gate starts flat so the first
    // E-step is driven by the data rather than by the initial cuts.
    let zero_gate = vec![[0.0, 0.0]; cfg.k];
    let mut model = match m_step(logf, x, &tau, &zero_gate, cfg, false) {
        Ok(step) => {
            diag.singular_hessian_steps += step.singular_hessian as usize;
            diag.irls_iterations += step.irls_iterations;
            step.model
        }
        Err(e) => {
            diag.failure = Some(e.to_string());
            return (Err(e), diag);
        }
    };
    diag.loglik_trace.push(model.loglik);

    while diag.iterations < cfg.max_em_iters {
        diag.iterations += 1;
        let tau = e_step(&model, logf, x);
        let step = match m_step(logf, x, &tau, &model.w, cfg, true) {
            Ok(step) => step,
            Err(e) => {
                diag.failure = Some(e.to_string());
                return (Err(e), diag);
            }
        };
        diag.singular_hessian_steps += step.singular_hessian as usize;
        diag.irls_iterations += step.irls_iterations;
        let prev = model.loglik;
        model = step.model;
        diag.loglik_trace.push(model.loglik);
        if !model.loglik.is_finite() {
            let e = Error::InvalidConfig("rhlp: log-likelihood became non-finite".into());
            diag.failure = Some(e.to_string());
            return (Err(e), diag);
        }
        if (model.loglik - prev).abs() <= cfg.em_tol * prev.abs() {
            diag.converged = true;
            break;
        }
    }
    (Ok(model), diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhlp::{approximate, poly_eval, segment};
    use rand_distr::{Distribution, Normal};

    fn axis(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Plain normal-equation polynomial fit, independent of the SVD path.
    fn ols_poly(f: &[f64], x: &[f64], p: usize) -> Vec<f64> {
        let a = DMatrix::from_fn(f.len(), p + 1, |i, j| f[i].powi(j as i32));
        let b = DVector::from_column_slice(x);
        let ata = a.transpose() * &a;
        let atb = a.transpose() * b;
        ata.lu().solve(&atb).unwrap().iter().copied().collect()
    }

    #[test]
    fn single_regime_is_polynomial_least_squares() {
        let f = axis(60, -2.0, 3.0);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = f
            .iter()
            .map(|&v| poly_eval(&[0.5, -1.0, 0.3, 0.1], v) + noise.sample(&mut rng))
            .collect();
        let cfg = RhlpConfig { k: 1, ..Default::default() };
        let fit = fit_em(&f, &x, &cfg).unwrap();
        let want = ols_poly(&f, &x, 3);
        for (a, b) in fit.model.betas[0].iter().zip(&want) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert_eq!(fit.model.w, vec![[0.0, 0.0]]);
    }

    #[test]
    fn exact_polynomial_with_three_regimes() {
        let f = axis(50, -4.6, 10.3);
        let coeffs = [0.2, -0.05, 0.01, -0.0008];
        let x: Vec<f64> = f.iter().map(|&v| poly_eval(&coeffs, v)).collect();
        let fit = fit_em(&f, &x, &RhlpConfig::default()).unwrap();
        let mse: f64 = f
            .iter()
            .zip(&x)
            .map(|(&v, &xi)| (approximate(&fit.model, v) - xi).powi(2))
            .sum::<f64>()
            / f.len() as f64;
        assert!(mse < 1e-10, "mse {mse}");
    }

    #[test]
    fn loglik_trace_is_non_decreasing() {
        let f = axis(50, -4.6, 10.3);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = f
            .iter()
            .map(|&v| (0.6 * v).sin() + noise.sample(&mut rng))
            .collect();
        let fit = fit_em(&f, &x, &RhlpConfig::default()).unwrap();
        for run in &fit.diagnostics.runs {
            for w in run.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-10, "{} -> {}", w[0], w[1]);
            }
        }
        let best = &fit.diagnostics.runs[fit.diagnostics.best_run];
        assert_eq!(*best.loglik_trace.last().unwrap(), fit.model.loglik);
        for run in &fit.diagnostics.runs {
            assert!(fit.model.loglik >= run.loglik_trace[0]);
        }
    }

    #[test]
    fn separated_regimes_are_found() {
        let f = axis(120, 0.0, 9.0);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let truth = |v: f64| if v < 3.0 { 0 } else if v < 6.0 { 1 } else { 2 };
        let polys = [[1.0, 0.0], [-1.0, 0.3], [2.0, -0.2]];
        let x: Vec<f64> = f
            .iter()
            .map(|&v| poly_eval(&polys[truth(v)], v) + noise.sample(&mut rng))
            .collect();
        let fit = fit_em(&f, &x, &RhlpConfig { p: 1, ..Default::default() }).unwrap();
        let seg = segment(&fit.model, &f);
        assert_eq!(seg.boundaries.len(), 2);
        assert!((seg.boundaries[0] - 3.0).abs() < 0.1);
        assert!((seg.boundaries[1] - 6.0).abs() < 0.1);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let f = axis(50, -4.6, 10.3);
        let x: Vec<f64> = f.iter().map(|&v| (0.4 * v).cos()).collect();
        let cfg = RhlpConfig { seed: 99, ..Default::default() };
        let a = fit_em(&f, &x, &cfg).unwrap();
        let b = fit_em(&f, &x, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.diagnostics, b.diagnostics);
    }

    #[test]
    fn rejects_too_few_points() {
        let f = axis(14, 0.0, 1.0);
        let x = vec![0.0; 14];
        assert_eq!(
            fit_em(&f, &x, &RhlpConfig::default()).unwrap_err(),
            Error::TooFewPoints { got: 14, min: 15 }
        );
    }

    #[test]
    fn random_cuts_respect_block_size() {
        let cfg = RhlpConfig::default();
        for run in 0..50 {
            let cuts = initial_cuts(20, &cfg, run);
            assert_eq!(cuts.len(), 2);
            assert!(cuts[0] >= 5 && cuts[1] >= cuts[0] + 5 && cuts[1] + 5 <= 20, "{cuts:?}");
        }
    }

    #[test]
    fn starved_regime_is_reported() {
        let f = axis(20, 0.0, 1.0);
        let x = vec![0.0; 20];
        let mut tau = vec![vec![1.0, 0.0]; 20];
        tau[0] = vec![1.0 - 1e-9, 1e-9];
        let cfg = RhlpConfig { k: 2, p: 1, ..Default::default() };
        assert!(matches!(
            m_step(&f, &x, &tau, &[[0.0, 0.0]; 2], &cfg, true),
            Err(Error::DegenerateFit { regime: 1, .. })
        ));
    }
}
