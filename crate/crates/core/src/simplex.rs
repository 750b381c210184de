//! Nelder-Mead simplex minimizer with seeded restarts.
//!
//! Restart 0 starts from `x0`. Every later restart starts from the best point
//! found so far, displaced by a small seeded jitter, and rebuilds a fresh
//! simplex around it. The lowest cost over all restarts wins; on equal cost
//! the earlier restart is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iters: usize,
    pub tol_f: f64,
    pub tol_x: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iters: 2000,
            tol_f: 1e-10,
            tol_x: 1e-9,
            restarts: 8,
            seed: 0,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.max_iters >= 1
            && self.restarts >= 1
            && self.tol_f >= 0.0
            && self.tol_x >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("simplex: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub argmin: Vec<f64>,
    pub min_value: f64,
    /// Iterations summed over all restarts.
    pub iterations: usize,
    /// Whether the winning restart met a stopping tolerance before `max_iters`:
    /// vertex spread in cost at most `tol_f * |best cost|`, or simplex
    /// diameter (max-norm) below `tol_x`.
    pub converged: bool,
    /// Best cost after each iteration of every restart, in run order.
    pub trace: Vec<Vec<f64>>,
}

struct RunOutcome {
    argmin: Vec<f64>,
    min_value: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Relative jitter applied to the restart point.
const RESTART_JITTER: f64 = 1e-3;

/// Minimizes `cost` starting from `x0`.
pub fn minimize<F>(cost: F, x0: &[f64], cfg: &SimplexConfig) -> Result<SimplexResult>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidConfig("simplex: empty start vector".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<RunOutcome> = None;
    let mut iterations = 0;
    let mut trace = Vec::with_capacity(cfg.restarts);

    for restart in 0..cfg.restarts {
        let start: Vec<f64> = match &best {
            None => x0.to_vec(),
            Some(b) => b
                .argmin
                .iter()
                .map(|&v| {
                    let scale = if v == 0.0 { 0.05 } else { v.abs() };
                    v + RESTART_JITTER * scale * rng.random_range(-1.0..=1.0)
                })
                .collect(),
        };
        let run = match run_once(&cost, &start, cfg) {
            Ok(run) => run,
            // a jittered restart may land somewhere the cost is undefined
            Err(Error::NonFiniteCost) if restart > 0 => continue,
            Err(e) => return Err(e),
        };
        iterations += run.iterations;
        trace.push(run.trace.clone());
        let better = best.as_ref().map_or(true, |b| run.min_value < b.min_value);
        if better {
            best = Some(run);
        }
    }

    let best = best.expect("restart 0 either succeeds or returns early");
    Ok(SimplexResult {
        argmin: best.argmin,
        min_value: best.min_value,
        iterations,
        converged: best.converged,
        trace,
    })
}

fn eval<F: Fn(&[f64]) -> f64>(cost: &F, x: &[f64]) -> f64 {
    let v = cost(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn run_once<F>(cost: &F, x0: &[f64], cfg: &SimplexConfig) -> Result<RunOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    let d = x0.len();
    let mut vertices = Vec::with_capacity(d + 1);
    vertices.push(x0.to_vec());
    for j in 0..d {
        let mut v = x0.to_vec();
        v[j] += if v[j] == 0.0 { 0.05 } else { 0.05 * v[j].abs() };
        vertices.push(v);
    }
    let mut values = Vec::with_capacity(d + 1);
    for v in &vertices {
        let c = cost(v);
        if !c.is_finite() {
            return Err(Error::NonFiniteCost);
        }
        values.push(c);
    }

    let mut order: Vec<usize> = (0..=d).collect();
    let mut centroid = vec![0.0; d];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let point = |from: &[f64], towards: &[f64], t: f64| -> Vec<f64> {
        from.iter()
            .zip(towards)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    };

    while iterations < cfg.max_iters {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[d];
        let second_worst = order[d - 1];

        let spread = values[worst] - values[best];
        let diameter = vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&vertices[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= cfg.tol_f * values[best].abs() || diameter < cfg.tol_x {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..d] {
            for (c, v) in centroid.iter_mut().zip(&vertices[i]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= d as f64);

        // x_r = c + alpha (c - x_worst)
        let reflected = point(&centroid, &vertices[worst], -cfg.reflection);
        let f_r = eval(cost, &reflected);

        if f_r < values[best] {
            let expanded = point(&centroid, &reflected, cfg.expansion);
            let f_e = eval(cost, &expanded);
            if f_e < f_r {
                vertices[worst] = expanded;
                values[worst] = f_e;
            } else {
                vertices[worst] = reflected;
                values[worst] = f_r;
            }
        } else if f_r < values[second_worst] {
            vertices[worst] = reflected;
            values[worst] = f_r;
        } else {
            let (contracted, f_c) = if f_r < values[worst] {
                let c = point(&centroid, &reflected, cfg.contraction);
                let f = eval(cost, &c);
                (c, f)
            } else {
                let c = point(&centroid, &vertices[worst], cfg.contraction);
                let f = eval(cost, &c);
                (c, f)
            };
            if f_c < values[worst].min(f_r) {
                vertices[worst] = contracted;
                values[worst] = f_c;
            } else {
                let anchor = vertices[best].clone();
                for &i in &order[1..] {
                    vertices[i] = point(&anchor, &vertices[i], cfg.shrink);
                    values[i] = eval(cost, &vertices[i]);
                }
            }
        }
        trace.push(values.iter().copied().fold(f64::INFINITY, f64::min));
    }

    let best = (0..=d)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex has d + 1 >= 2 vertices");
    Ok(RunOutcome {
        argmin: vertices[best].clone(),
        min_value: values[best],
        iterations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn one_dimensional_quadratic() {
        let r = minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &SimplexConfig::default()).unwrap();
        assert!((r.argmin[0] - 3.0).abs() < 1e-6, "{:?}", r.argmin);
        assert!(r.converged);
    }

    #[test]
    fn bowl() {
        let r = minimize(
            |x| x[0] * x[0] + x[1] * x[1],
            &[5.0, -5.0],
            &SimplexConfig::default(),
        )
        .unwrap();
        assert!(r.argmin.iter().all(|v| v.abs() < 1e-5), "{:?}", r.argmin);
        assert!(r.min_value < 1e-10);
    }

    #[test]
    fn rosenbrock_valley() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &SimplexConfig::default()).unwrap();
        assert!((r.argmin[0] - 1.0).abs() < 1e-4, "{:?}", r.argmin);
        assert!((r.argmin[1] - 1.0).abs() < 1e-4, "{:?}", r.argmin);
        assert!(r.min_value < 1e-8);
    }

    #[test]
    fn best_cost_never_increases_within_a_restart() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &SimplexConfig::default()).unwrap();
        for run in &r.trace {
            assert!(run.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = SimplexConfig {
            seed: 42,
            ..Default::default()
        };
        let a = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        let b = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = minimize(|x| x[0].ln(), &[-1.0], &SimplexConfig::default());
        assert_eq!(r.unwrap_err(), Error::NonFiniteCost);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let cfg = SimplexConfig {
            contraction: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            minimize(|x| x[0], &[1.0], &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn translation_shifts_argmin(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0) {
            let cfg = SimplexConfig::default();
            let base = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
            let shifted = minimize(
                |x| rosenbrock(&[x[0] - c0, x[1] - c1]),
                &[-1.2 + c0, 1.0 + c1],
                &cfg,
            )
            .unwrap();
            prop_assert!((shifted.argmin[0] - c0 - base.argmin[0]).abs() < 1e-4);
            prop_assert!((shifted.argmin[1] - c1 - base.argmin[1]).abs() < 1e-4);
        }
    }
}
