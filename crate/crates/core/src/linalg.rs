//! Small dense least-squares helpers.
//!
//! The SVD here is a one-sided (Hestenes) Jacobi iteration. nalgebra 0.35's
//! bidiagonal SVD returns factorizations with reconstruction errors around
//! 1e-3 on some well-conditioned tall matrices, which is far too coarse for
//! leave-one-out comparisons at 1e-10.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `a = u diag(s) vᵀ`, singular values in no particular order.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn jacobi_svd(a: &DMatrix<f64>) -> ThinSvd {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose());
        return ThinSvd { u: t.v, s: t.s, v: t.u };
    }
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * m as f64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * x - s * y;
                    u[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = Vec::with_capacity(n);
    for j in 0..n {
        let norm = u.column(j).norm();
        s.push(norm);
        if norm > 0.0 {
            u.column_mut(j).unscale_mut(norm);
        }
    }
    ThinSvd { u, s, v }
}

pub(crate) struct LeastSquares {
    pub x: Vec<f64>,
    /// Singular values above the rank cutoff.
    pub rank: usize,
}

/// Minimum-norm least-squares solution of `a x = b`, treating singular
/// values below `max(rows, cols) * eps * s_max` as zero.
pub(crate) fn min_norm_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> LeastSquares {
    let (rows, cols) = a.shape();
    let svd = jacobi_svd(a);
    let smax = svd.s.iter().cloned().fold(0.0, f64::max);
    let cutoff = smax * rows.max(cols) as f64 * f64::EPSILON;
    let mut x = DVector::<f64>::zeros(cols);
    let mut rank = 0;
    for (j, &sj) in svd.s.iter().enumerate() {
        if sj > cutoff && sj > 0.0 {
            rank += 1;
            let coef = svd.u.column(j).dot(b) / sj;
            x.axpy(coef, &svd.v.column(j), 1.0);
        }
    }
    LeastSquares {
        x: x.iter().copied().collect(),
        rank,
    }
}
