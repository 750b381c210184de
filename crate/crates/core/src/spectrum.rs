//! Impedance spectra and their log-frequency axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted number of samples per spectrum.
pub const MIN_POINTS: usize = 8;

/// One impedance sweep: real and imaginary impedance sampled over frequency,
/// tagged with the operating age of the stack at measurement time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceSpectrum {
    pub freqs_hz: Vec<f64>,
    pub re_ohm: Vec<f64>,
    pub im_ohm: Vec<f64>,
    pub age_hours: f64,
    pub cell_id: String,
}

impl ImpedanceSpectrum {
    pub fn new(
        freqs_hz: Vec<f64>,
        re_ohm: Vec<f64>,
        im_ohm: Vec<f64>,
        age_hours: f64,
        cell_id: impl Into<String>,
    ) -> Self {
        Self {
            freqs_hz,
            re_ohm,
            im_ohm,
            age_hours,
            cell_id: cell_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }
}

/// Natural-log frequency values, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFrequencyAxis {
    values: Vec<f64>,
}

impl LogFrequencyAxis {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(min, max)` of the axis.
    pub fn range(&self) -> (f64, f64) {
        (self.values[0], self.values[self.values.len() - 1])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for LogFrequencyAxis {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Checks a raw spectrum and returns a copy sorted by ascending frequency.
pub fn validate_spectrum(raw: &ImpedanceSpectrum) -> Result<ImpedanceSpectrum> {
    let n = raw.freqs_hz.len();
    if raw.re_ohm.len() != n || raw.im_ohm.len() != n {
        return Err(Error::MismatchedLengths {
            freqs: n,
            re: raw.re_ohm.len(),
            im: raw.im_ohm.len(),
        });
    }
    for (field, values) in [
        ("freqs_hz", &raw.freqs_hz),
        ("re_ohm", &raw.re_ohm),
        ("im_ohm", &raw.im_ohm),
    ] {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { field, index });
        }
    }
    if let Some(index) = raw.freqs_hz.iter().position(|&f| f <= 0.0) {
        return Err(Error::NonPositiveFrequency {
            index,
            value: raw.freqs_hz[index],
        });
    }
    if !raw.age_hours.is_finite() || raw.age_hours < 0.0 {
        return Err(Error::InvalidAge(raw.age_hours));
    }
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints {
            got: n,
            min: MIN_POINTS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw.freqs_hz[a].total_cmp(&raw.freqs_hz[b]));
    if let Some(pair) = order
        .windows(2)
        .find(|w| raw.freqs_hz[w[0]] == raw.freqs_hz[w[1]])
    {
        return Err(Error::DuplicateFrequency {
            value: raw.freqs_hz[pair[0]],
        });
    }

    let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
    Ok(ImpedanceSpectrum {
        freqs_hz: pick(&raw.freqs_hz),
        re_ohm: pick(&raw.re_ohm),
        im_ohm: pick(&raw.im_ohm),
        age_hours: raw.age_hours,
        cell_id: raw.cell_id.clone(),
    })
}

/// Natural log of each frequency. Expects a validated spectrum.
pub fn log_axis(s: &ImpedanceSpectrum) -> LogFrequencyAxis {
    LogFrequencyAxis {
        values: s.freqs_hz.iter().map(|f| f.ln()).collect(),
    }
}
