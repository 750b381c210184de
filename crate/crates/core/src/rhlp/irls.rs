//! Multi-class IRLS for the gate weights.
//!
//! Maximizes `Q(w) = sum_i sum_k tau_ik log pi_ik(w)` over all rows of `w`
//! except the last, which stays at zero. Each iteration takes a Newton step
//! and halves it until `Q` does not decrease.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{log_logistic_probs, logistic_probs};

const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsOutcome {
    pub w: Vec<[f64; 2]>,
    pub objective: f64,
    pub iterations: usize,
    /// The Newton system could not be factorized; `w` is the last accepted
    /// iterate.
    pub singular_hessian: bool,
}

/// `sum_i sum_k tau_ik log pi_ik(w)`.
pub fn irls_objective(tau: &[Vec<f64>], logf: &[f64], w: &[[f64; 2]]) -> f64 {
    tau.iter()
        .zip(logf)
        .map(|(t, &f)| {
            log_logistic_probs(w, f)
                .iter()
                .zip(t)
                .filter(|(_, &ti)| ti != 0.0)
                .map(|(lp, ti)| ti * lp)
                .sum::<f64>()
        })
        .sum()
}

/// Gradient of [`irls_objective`] with respect to every row of `w`,
/// `sum_i (tau_ik - pi_ik) (1, f_i)`, laid out row-major.
pub fn irls_gradient(tau: &[Vec<f64>], logf: &[f64], w: &[[f64; 2]]) -> Vec<f64> {
    let k = w.len();
    let mut g = vec![0.0; 2 * k];
    for (t, &f) in tau.iter().zip(logf) {
        let pi = logistic_probs(w, f);
        for j in 0..k {
            let r = t[j] - pi[j];
            g[2 * j] += r;
            g[2 * j + 1] += r * f;
        }
    }
    g
}

fn pinned(w: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let last = w[w.len() - 1];
    w.iter().map(|r| [r[0] - last[0], r[1] - last[1]]).collect()
}

fn newton_system(tau: &[Vec<f64>], logf: &[f64], w: &[[f64; 2]]) -> (DMatrix<f64>, DVector<f64>) {
    let free = w.len() - 1;
    let m = 2 * free;
    let mut h = DMatrix::zeros(m, m);
    let mut g = DVector::zeros(m);
    for (t, &f) in tau.iter().zip(logf) {
        let pi = logistic_probs(w, f);
        let v = [1.0, f];
        for a in 0..free {
            let r = t[a] - pi[a];
            g[2 * a] += r;
            g[2 * a + 1] += r * f;
            for b in 0..free {
                let c = pi[a] * (if a == b { 1.0 } else { 0.0 } - pi[b]);
                if c == 0.0 {
                    continue;
                }
                for (i, vi) in v.iter().enumerate() {
                    for (j, vj) in v.iter().enumerate() {
                        h[(2 * a + i, 2 * b + j)] += c * vi * vj;
                    }
                }
            }
        }
    }
    (h, g)
}

/// Runs IRLS from `w_init`. `tau` holds one row of responsibilities per
/// sample. The returned objective is never below the objective at `w_init`.
pub fn irls_update(
    tau: &[Vec<f64>],
    logf: &[f64],
    w_init: &[[f64; 2]],
    max_iters: usize,
    tol: f64,
) -> IrlsOutcome {
    let mut w = pinned(w_init);
    let mut objective = irls_objective(tau, logf, &w);
    let free = w.len() - 1;
    if free == 0 {
        return IrlsOutcome {
            w,
            objective,
            iterations: 0,
            singular_hessian: false,
        };
    }

    let mut singular_hessian = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let (h, g) = newton_system(tau, logf, &w);
        if g.amax() <= 1e-14 * tau.len() as f64 {
            break;
        }
        let Some(chol) = Cholesky::new(h) else {
            singular_hessian = true;
            break;
        };
        let step = chol.solve(&g);
        if !step.iter().all(|v| v.is_finite()) {
            singular_hessian = true;
            break;
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = w.clone();
            for a in 0..free {
                cand[a][0] += scale * step[2 * a];
                cand[a][1] += scale * step[2 * a + 1];
            }
            let q = irls_objective(tau, logf, &cand);
            if q >= objective {
                accepted = Some((cand, q));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, q)) = accepted else {
            break;
        };
        let gain = q - objective;
        w = cand;
        objective = q;
        if gain <= tol * objective.abs() {
            break;
        }
    }
    IrlsOutcome {
        w,
        objective,
        iterations,
        singular_hessian,
    }
}
