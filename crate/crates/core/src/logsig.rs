//! Four-parameter logistic model of the real impedance versus log-frequency:
//! `re(f) = a1 / (1 + exp(-a2 (f - a3))) + a4`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{minimize, SimplexConfig};

/// Bound on the exponent inside the sigmoid.
const EXP_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogsigParams {
    /// Amplitude (Ω).
    pub a1: f64,
    /// Slope per unit log-frequency.
    pub a2: f64,
    /// Centre on the log-frequency axis.
    pub a3: f64,
    /// Offset (Ω).
    pub a4: f64,
}

impl LogsigParams {
    pub const fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Self {
        Self { a1, a2, a3, a4 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// `(a1, a2, a3, a4)` and `(-a1, -a2, a3, a4 + a1)` trace the same curve;
    /// this picks the representative with `a1 >= 0`.
    pub fn canonical(self) -> Self {
        if self.a1 < 0.0 {
            Self::new(-self.a1, -self.a2, self.a3, self.a4 + self.a1)
        } else {
            self
        }
    }
}

pub fn logsig_eval(p: &LogsigParams, logf: f64) -> f64 {
    let z = (-p.a2 * (logf - p.a3)).clamp(-EXP_CLAMP, EXP_CLAMP);
    p.a1 / (1.0 + z.exp()) + p.a4
}

fn mse(p: &LogsigParams, logf: &[f64], re: &[f64]) -> f64 {
    let sum: f64 = logf
        .iter()
        .zip(re)
        .map(|(&f, &r)| (r - logsig_eval(p, f)).powi(2))
        .sum();
    sum / logf.len() as f64
}

/// Starting point that spans the observed window.
pub fn initial_guess(logf: &[f64], re: &[f64]) -> LogsigParams {
    let (lo, hi) = (logf[0], logf[logf.len() - 1]);
    let rmin = re.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = re.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    LogsigParams::new(rmax - rmin, 4.0 / range, 0.5 * (lo + hi), rmin)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogsigFit {
    pub params: LogsigParams,
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-squares fit of the logsig model. The returned parameters are in
/// canonical form (`a1 >= 0`).
pub fn fit_logsig(logf: &[f64], re: &[f64], cfg: &SimplexConfig) -> Result<LogsigFit> {
    if logf.len() != re.len() {
        return Err(Error::MismatchedLengths {
            freqs: logf.len(),
            re: re.len(),
            im: re.len(),
        });
    }
    if logf.len() < 5 {
        return Err(Error::TooFewPoints {
            got: logf.len(),
            min: 5,
        });
    }
    if !logf.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidConfig(
            "logsig: log-frequency axis must be strictly increasing".into(),
        ));
    }
    let x0 = initial_guess(logf, re).to_array();
    let result = minimize(|x| mse(&LogsigParams::from_slice(x), logf, re), &x0, cfg)?;
    let params = LogsigParams::from_slice(&result.argmin).canonical();
    Ok(LogsigFit {
        params,
        mse: mse(&params, logf, re),
        iterations: result.iterations,
        converged: result.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn axis(n: usize) -> Vec<f64> {
        let (lo, hi) = (0.01f64.ln(), 30e3f64.ln());
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn eval_center_and_limits() {
        let p = LogsigParams::new(2.0, 1.0, 0.0, 1.0);
        assert_eq!(logsig_eval(&p, 0.0), 2.0);
        assert_eq!(logsig_eval(&p, 1e6), 3.0);
        assert_eq!(logsig_eval(&p, -1e6), 1.0);
        let flat = LogsigParams::new(5.0, 0.0, 7.0, -1.0);
        for x in [-100.0, 0.0, 3.3, 1e9] {
            assert_eq!(logsig_eval(&flat, x), 1.5);
        }
    }

    #[test]
    fn eval_saturates_without_overflow() {
        let p = LogsigParams::new(1.0, 1e6, 0.0, 0.0);
        assert_eq!(logsig_eval(&p, -1.0), 1.0 / (1.0 + 700f64.exp()));
        assert_eq!(logsig_eval(&p, 1.0), 1.0);
    }

    #[test]
    fn canonical_form_keeps_curve() {
        let p = LogsigParams::new(-0.8, 2.0, 4.0, 1.1);
        let c = p.canonical();
        assert!(c.a1 > 0.0);
        for f in axis(30) {
            assert!((logsig_eval(&p, f) - logsig_eval(&c, f)).abs() < 1e-14);
        }
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let truth = LogsigParams::new(0.8, 2.0, 4.0, 0.3);
        let f = axis(50);
        let re: Vec<f64> = f.iter().map(|&x| logsig_eval(&truth, x)).collect();
        let fit = fit_logsig(&f, &re, &SimplexConfig::default()).unwrap();
        for (got, want) in fit.params.to_array().iter().zip(truth.to_array()) {
            assert!((got - want).abs() < 1e-4, "{:?}", fit.params);
        }
        assert!(fit.mse < 1e-10, "mse {}", fit.mse);
    }

    #[test]
    fn constant_data_is_fit_exactly() {
        let f = axis(40);
        let re = vec![0.42; 40];
        let fit = fit_logsig(&f, &re, &SimplexConfig::default()).unwrap();
        assert!(fit.mse < 1e-10);
        for &x in &f {
            assert!((logsig_eval(&fit.params, x) - 0.42).abs() < 1e-5);
        }
    }

    #[test]
    fn noisy_fit_reaches_noise_floor() {
        let truth = LogsigParams::new(0.8, 2.0, 4.0, 0.3);
        let sigma = 0.01;
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = axis(50);
        let re: Vec<f64> = f
            .iter()
            .map(|&x| logsig_eval(&truth, x) + noise.sample(&mut rng))
            .collect();
        let fit = fit_logsig(&f, &re, &SimplexConfig::default()).unwrap();
        assert!(fit.mse <= 2.0 * sigma * sigma, "mse {}", fit.mse);
    }

    #[test]
    fn rejects_short_input() {
        let f = axis(4);
        let re = vec![1.0; 4];
        assert!(matches!(
            fit_logsig(&f, &re, &SimplexConfig::default()),
            Err(Error::TooFewPoints { got: 4, .. })
        ));
    }

    fn params() -> impl Strategy<Value = LogsigParams> {
        (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0)
            .prop_map(|(a, b, c, d)| LogsigParams::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn monotone_in_logf(p in params(), x in -10.0f64..10.0, dx in 1e-3f64..5.0) {
            let (lo, hi) = (logsig_eval(&p, x), logsig_eval(&p, x + dx));
            if p.a1 * p.a2 > 0.0 {
                prop_assert!(hi >= lo);
            } else if p.a1 * p.a2 < 0.0 {
                prop_assert!(hi <= lo);
            }
        }

        #[test]
        fn reflection_symmetry(p in params(), x in -10.0f64..10.0) {
            let mirrored = LogsigParams::new(p.a1, -p.a2, p.a3, p.a4);
            let lhs = logsig_eval(&p, x);
            let rhs = logsig_eval(&mirrored, 2.0 * p.a3 - x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fit_beats_best_constant(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 0.2).unwrap();
            let f = axis(30);
            let re: Vec<f64> = f.iter().map(|&x| (0.3 * x).sin() + noise.sample(&mut rng)).collect();
            let mean = re.iter().sum::<f64>() / re.len() as f64;
            let var = re.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / re.len() as f64;
            let fit = fit_logsig(&f, &re, &SimplexConfig::default()).unwrap();
            prop_assert!(fit.mse <= var + 1e-12);
        }
    }
}
