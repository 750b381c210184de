//! Seeded synthetic spectra and ageing datasets with known ground truth.
//!
//! The imaginary part follows the hidden-logistic generative process: each
//! point draws a regime from the gate probabilities at its log-frequency,
//! then a value from that regime's cubic plus Gaussian noise. The real part
//! is a logsig curve plus noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector, FEATURE_COUNT};
use crate::logsig::{logsig_eval, LogsigParams};
use crate::regression::Dataset;
use crate::rhlp::{logistic_probs, poly_eval, three_regime_gate, RhlpConfig};
use crate::simplex::SimplexConfig;
use crate::spectrum::{ImpedanceSpectrum, MIN_POINTS};

/// Attempts per spectrum before an ageing dataset gives up.
pub const MAX_REGENERATIONS: usize = 25;

/// Cubic written around a centre: `c0 + c1 d + c2 d² + c3 d³`, `d = logf - center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteredCubic {
    pub center: f64,
    pub coeffs: [f64; 4],
}

impl CenteredCubic {
    pub fn eval(&self, logf: f64) -> f64 {
        poly_eval(&self.coeffs, logf - self.center)
    }

    /// Coefficients in powers of `logf` itself, lowest order first.
    pub fn monomial(&self) -> [f64; 4] {
        let [c0, c1, c2, c3] = self.coeffs;
        let m = self.center;
        [
            c0 - c1 * m + c2 * m * m - c3 * m * m * m,
            c1 - 2.0 * c2 * m + 3.0 * c3 * m * m,
            c2 - 3.0 * c3 * m,
            c3,
        ]
    }
}

/// How generator parameters move with the latent operating age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftSpec {
    /// Relative change of every logsig parameter per 1000 h.
    pub logsig_rate: f64,
    /// Relative per-spectrum jitter of every logsig parameter.
    pub logsig_jitter: f64,
    /// Change of every centred regime coefficient per 1000 h, relative to the
    /// largest coefficient of that regime.
    pub regime_rate: f64,
    pub regime_jitter: f64,
    /// Boundary shift per 1000 h (log-frequency units).
    pub boundary_rate: (f64, f64),
    pub boundary_jitter: f64,
}

impl Default for DriftSpec {
    fn default() -> Self {
        Self {
            logsig_rate: 0.1,
            logsig_jitter: 0.05,
            regime_rate: 0.1,
            regime_jitter: 0.08,
            boundary_rate: (0.3, -0.3),
            boundary_jitter: 0.15,
        }
    }
}

/// Linear map from extracted feature values to operating hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgeRule {
    /// Hours contributed by one standard deviation of each planted feature.
    pub hours_per_sd: f64,
    /// Noise standard deviation as a fraction of the noiseless target range.
    pub noise_fraction: f64,
    /// Noise standard deviation (h) used when nothing is planted.
    pub null_noise_hours: f64,
    /// Value the smallest target is shifted to.
    pub min_hours: f64,
}

impl Default for AgeRule {
    fn default() -> Self {
        Self {
            hours_per_sd: 150.0,
            noise_fraction: 0.02,
            null_noise_hours: 100.0,
            min_hours: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_points: usize,
    pub freq_range_hz: (f64, f64),
    pub logsig_truth: LogsigParams,
    pub regimes: [CenteredCubic; 3],
    pub boundaries_logf: (f64, f64),
    /// Noise standard deviation of the imaginary part (Ω).
    pub noise_sigma: f64,
    /// Noise standard deviation of the real part; `None` reuses `noise_sigma`.
    pub real_noise_sigma: Option<f64>,
    /// Logit slope of the generating gate; `None` switches regimes abruptly.
    pub transition_sharpness: Option<f64>,
    /// Heteroscedastic noise growing with log-frequency (mean scale 1).
    pub off_model: bool,
    pub drift: DriftSpec,
    pub age_rule: AgeRule,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_points: 50,
            freq_range_hz: (0.01, 30e3),
            logsig_truth: LogsigParams::new(0.3, -1.1, 2.5, 0.1),
            regimes: [
                CenteredCubic { center: -1.3, coeffs: [-0.5, 0.02, 0.04, -0.002] },
                CenteredCubic { center: 3.5, coeffs: [-0.25, 0.0, 0.08, 0.01] },
                CenteredCubic { center: 7.65, coeffs: [0.0, 0.06, 0.005, 0.001] },
            ],
            boundaries_logf: (2.0, 5.0),
            noise_sigma: 0.007,
            real_noise_sigma: None,
            transition_sharpness: Some(200.0),
            off_model: false,
            drift: DriftSpec::default(),
            age_rule: AgeRule::default(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.freq_range_hz;
        let (b1, b2) = self.boundaries_logf;
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_points < MIN_POINTS {
            return bad("n_points below the spectrum minimum");
        }
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return bad("freq_range_hz must satisfy 0 < low < high");
        }
        if !(b1 < b2 && b1 > lo.ln() && b2 < hi.ln()) {
            return bad("boundaries must be ordered and inside the log-frequency range");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and non-negative");
        }
        if let Some(s) = self.real_noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("real_noise_sigma must be finite and non-negative");
            }
        }
        if let Some(s) = self.transition_sharpness {
            if !(s > 0.0 && s.is_finite()) {
                return bad("transition_sharpness must be positive");
            }
        }
        if !self.logsig_truth.is_finite()
            || self.regimes.iter().any(|r| !r.center.is_finite() || r.coeffs.iter().any(|c| !c.is_finite()))
        {
            return bad("generator parameters must be finite");
        }
        Ok(())
    }

    /// Geometric sweep from low to high frequency.
    pub fn frequencies(&self) -> Vec<f64> {
        let (lo, hi) = (self.freq_range_hz.0.ln(), self.freq_range_hz.1.ln());
        let n = self.n_points;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.freq_range_hz.1
                } else {
                    (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }

    /// Range of the noiseless piecewise imaginary part over the sweep.
    pub fn signal_range(&self) -> f64 {
        let values: Vec<f64> = self
            .frequencies()
            .iter()
            .map(|f| {
                let x = f.ln();
                self.regimes[hard_label(self.boundaries_logf, x)].eval(x)
            })
            .collect();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Sets `noise_sigma` to `fraction` of the imaginary signal range.
    pub fn with_relative_noise(mut self, fraction: f64) -> Self {
        self.noise_sigma = fraction * self.signal_range();
        self
    }

    /// Monomial coefficients of the three regimes.
    pub fn regime_betas(&self) -> [[f64; 4]; 3] {
        [self.regimes[0].monomial(), self.regimes[1].monomial(), self.regimes[2].monomial()]
    }

    /// Gate weights of the generating process, when transitions are smooth.
    pub fn gate(&self) -> Option<Vec<[f64; 2]>> {
        self.transition_sharpness
            .map(|s| three_regime_gate(self.boundaries_logf.0, self.boundaries_logf.1, s))
    }
}

fn hard_label((b1, b2): (f64, f64), logf: f64) -> usize {
    if logf < b1 {
        0
    } else if logf < b2 {
        1
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSpectrum {
    pub spectrum: ImpedanceSpectrum,
    /// Regime (0-based) each point was drawn from.
    pub labels: Vec<usize>,
    /// Noiseless imaginary part of the drawn regimes.
    pub im_clean: Vec<f64>,
    pub re_clean: Vec<f64>,
    /// Generator parameters actually used for this spectrum.
    pub truth: SynthSpec,
}

/// Draws one spectrum from `spec` with its own seed.
pub fn gen_spectrum(spec: &SynthSpec) -> Result<GeneratedSpectrum> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(draw_spectrum(spec, &mut rng))
}

fn draw_spectrum(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> GeneratedSpectrum {
    let freqs = spec.frequencies();
    let (lo, hi) = (freqs[0].ln(), freqs[freqs.len() - 1].ln());
    let gate = spec.gate();
    let re_sigma = spec.real_noise_sigma.unwrap_or(spec.noise_sigma);
    let n = freqs.len();
    let mut labels = Vec::with_capacity(n);
    let mut im_clean = Vec::with_capacity(n);
    let mut re_clean = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    let mut re = Vec::with_capacity(n);
    for &f in &freqs {
        let x = f.ln();
        let label = match &gate {
            None => hard_label(spec.boundaries_logf, x),
            Some(w) => {
                let probs = logistic_probs(w, x);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = probs.len() - 1;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                pick
            }
        };
        let scale = if spec.off_model { 0.5 + (x - lo) / (hi - lo) } else { 1.0 };
        let e_im: f64 = StandardNormal.sample(rng);
        let e_re: f64 = StandardNormal.sample(rng);
        let clean = spec.regimes[label].eval(x);
        let rc = logsig_eval(&spec.logsig_truth, x);
        labels.push(label);
        im_clean.push(clean);
        re_clean.push(rc);
        im.push(clean + spec.noise_sigma * scale * e_im);
        re.push(rc + re_sigma * scale * e_re);
    }
    GeneratedSpectrum {
        spectrum: ImpedanceSpectrum::new(freqs, re, im, 0.0, "synth"),
        labels,
        im_clean,
        re_clean,
        truth: spec.clone(),
    }
}

/// Generator parameters at latent age `age_hours`, with fresh jitter.
fn drifted(spec: &SynthSpec, age_hours: f64, rng: &mut ChaCha8Rng) -> SynthSpec {
    let d = &spec.drift;
    let u = age_hours / 1000.0;
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    let mut out = spec.clone();

    let a = spec.logsig_truth.to_array();
    let mut moved = [0.0; 4];
    for j in 0..4 {
        moved[j] = a[j] * (1.0 + d.logsig_rate * u + d.logsig_jitter * normal());
    }
    out.logsig_truth = LogsigParams::from_slice(&moved);

    for (k, regime) in spec.regimes.iter().enumerate() {
        let amp = regime.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for j in 0..4 {
            let rel = if regime.coeffs[j] == 0.0 { 0.0 } else { d.regime_rate * u };
            out.regimes[k].coeffs[j] =
                regime.coeffs[j] * (1.0 + rel) + d.regime_jitter * amp * 0.1f64.powi(j as i32) * normal();
        }
    }

    let (b1, b2) = spec.boundaries_logf;
    let mut nb1 = b1 + d.boundary_rate.0 * u + d.boundary_jitter * normal();
    let mut nb2 = b2 + d.boundary_rate.1 * u + d.boundary_jitter * normal();
    let (lo, hi) = (spec.freq_range_hz.0.ln(), spec.freq_range_hz.1.ln());
    let gap = 0.25 * (b2 - b1);
    nb1 = nb1.clamp(lo + gap, hi - 2.0 * gap);
    nb2 = nb2.clamp(nb1 + gap, hi - gap);
    out.boundaries_logf = (nb1, nb2);
    out
}

/// Planted linear age rule recovered from extracted features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    /// Feature slots the target depends on, ascending.
    pub planted: Vec<usize>,
    /// Hours per unit of each planted feature.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Standard deviation of the added target noise (h).
    pub noise_sigma: f64,
}

impl PlantedTruth {
    pub fn noiseless(&self, features: &[f64; FEATURE_COUNT]) -> f64 {
        self.intercept
            + self
                .planted
                .iter()
                .zip(&self.coefficients)
                .map(|(&j, c)| c * features[j])
                .sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct AgeingDataset {
    pub dataset: Dataset,
    pub features: Vec<FeatureVector>,
    /// Spectra with `age_hours` set to the planted target.
    pub spectra: Vec<GeneratedSpectrum>,
    /// Age driving the parameter drift of each spectrum.
    pub latent_age_hours: Vec<f64>,
    pub truth: PlantedTruth,
    /// Spectra redrawn because feature extraction failed.
    pub regenerations: usize,
}

/// Extraction settings used by [`gen_ageing_dataset`].
pub fn default_extraction_configs(seed: u64) -> (RhlpConfig, SimplexConfig) {
    let rhlp = RhlpConfig { seed, ..RhlpConfig::default() };
    let simplex = SimplexConfig { seed, ..SimplexConfig::default() };
    (rhlp, simplex)
}

pub fn gen_ageing_dataset(spec: &SynthSpec, n: usize, planted: &[usize]) -> Result<AgeingDataset> {
    let (rhlp, simplex) = default_extraction_configs(spec.seed);
    gen_ageing_dataset_with(spec, n, planted, &rhlp, &simplex)
}

/// Cell identifier of sample `i` in a synthetic study.
pub fn study_cell(i: usize) -> &'static str {
    if i % 2 == 0 {
        "FC1"
    } else {
        "FC2"
    }
}

pub fn gen_ageing_dataset_with(
    spec: &SynthSpec,
    n: usize,
    planted: &[usize],
    rhlp: &RhlpConfig,
    simplex: &SimplexConfig,
) -> Result<AgeingDataset> {
    spec.validate()?;
    if n < 3 {
        return Err(Error::InvalidConfig("an ageing dataset needs at least 3 spectra".into()));
    }
    let mut planted: Vec<usize> = planted.to_vec();
    planted.sort_unstable();
    planted.dedup();
    if planted.iter().any(|&j| j >= FEATURE_COUNT) {
        return Err(Error::InvalidConfig("planted feature index out of range".into()));
    }

    let latent: Vec<f64> = (0..n).map(|i| 1000.0 * i as f64 / (n - 1) as f64).collect();
    let drawn: Vec<Result<(GeneratedSpectrum, FeatureVector, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64 + 1);
            let mut last = None;
            for attempt in 0..MAX_REGENERATIONS {
                let params = drifted(spec, latent[i], &mut rng);
                let mut g = draw_spectrum(&params, &mut rng);
                g.spectrum.cell_id = study_cell(i).to_string();
                match extract_features(&g.spectrum, rhlp, simplex) {
                    Ok(fv) => return Ok((g, fv, attempt)),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect();

    let mut spectra = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n);
    let mut regenerations = 0;
    for r in drawn {
        let (g, fv, attempts) = r?;
        regenerations += attempts;
        spectra.push(g);
        features.push(fv);
    }

    let rows: Vec<[f64; FEATURE_COUNT]> = features.iter().map(|f| f.values()).collect();
    let coefficients: Vec<f64> = planted
        .iter()
        .map(|&j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let sd = sample_sd(&col);
            if sd > 0.0 {
                spec.age_rule.hours_per_sd / sd
            } else {
                0.0
            }
        })
        .collect();
    let mut truth = PlantedTruth {
        planted: planted.clone(),
        coefficients,
        intercept: 0.0,
        noise_sigma: 0.0,
    };

    let clean: Vec<f64> = rows.iter().map(|r| truth.noiseless(r)).collect();
    let noise_sigma = if planted.is_empty() {
        truth.intercept = 500.0;
        spec.age_rule.null_noise_hours
    } else {
        let max = clean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = clean.iter().cloned().fold(f64::INFINITY, f64::min);
        spec.age_rule.noise_fraction * (max - min)
    };
    truth.noise_sigma = noise_sigma;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise: Vec<f64> = (0..n)
        .map(|_| noise_sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let raw: Vec<f64> = clean.iter().zip(&noise).map(|(c, e)| c + truth.intercept + e).collect();
    let shift = spec.age_rule.min_hours - raw.iter().cloned().fold(f64::INFINITY, f64::min);
    truth.intercept += shift;
    let y: Vec<f64> = raw.iter().map(|v| v + shift).collect();

    for ((g, fv), &age) in spectra.iter_mut().zip(features.iter_mut()).zip(&y) {
        g.spectrum.age_hours = age;
        fv.age_hours = age;
    }
    let dataset = Dataset::from_features(&features)?;
    Ok(AgeingDataset {
        dataset,
        features,
        spectra,
        latent_age_hours: latent,
        truth,
        regenerations,
    })
}

/// Spectra of a study whose recorded ages are the latent drift ages, so the
/// targets carry no planted rule. No feature extraction is involved.
pub fn gen_latent_study(spec: &SynthSpec, n: usize) -> Result<Vec<GeneratedSpectrum>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("a study needs at least one spectrum".into()));
    }
    let denom = (n.max(2) - 1) as f64;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let age = 1000.0 * i as f64 / denom;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64 + 1);
            let params = drifted(spec, age, &mut rng);
            let mut g = draw_spectrum(&params, &mut rng);
            g.spectrum.cell_id = study_cell(i).to_string();
            g.spectrum.age_hours = age;
            g
        })
        .collect())
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
