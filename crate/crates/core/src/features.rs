//! The 18 per-spectrum descriptors: four logsig parameters of the real part,
//! twelve cubic coefficients and two regime boundaries of the imaginary part.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logsig::{fit_logsig, LogsigFit};
use crate::rhlp::{fit_em, segment, RhlpConfig, RhlpFit, Segmentation};
use crate::simplex::SimplexConfig;
use crate::spectrum::{log_axis, validate_spectrum, ImpedanceSpectrum};

pub const FEATURE_COUNT: usize = 18;

const NAMES: [&str; FEATURE_COUNT] = [
    "a1", "a2", "a3", "a4", "b11", "b12", "b13", "b14", "b21", "b22", "b23", "b24", "b31", "b32",
    "b33", "b34", "f1", "f2",
];

/// Canonical descriptor order. `bKJ` is the coefficient of degree `J - 1`
/// of regime `K`, regimes numbered by ascending log-frequency; `f1`/`f2` are
/// the log-frequencies bounding regime 2.
pub fn feature_names() -> [&'static str; FEATURE_COUNT] {
    NAMES
}

/// Index of a descriptor by name.
pub fn feature_index(name: &str) -> Option<usize> {
    NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub a: [f64; 4],
    /// `beta[k][j]`: regime `k` (ascending log-frequency), monomial degree `j`.
    pub beta: [[f64; 4]; 3],
    pub f1: f64,
    pub f2: f64,
    pub age_hours: f64,
    pub cell_id: String,
}

impl FeatureVector {
    /// Descriptor values in [`feature_names`] order.
    pub fn values(&self) -> [f64; FEATURE_COUNT] {
        let mut v = [0.0; FEATURE_COUNT];
        v[..4].copy_from_slice(&self.a);
        for (k, row) in self.beta.iter().enumerate() {
            v[4 + 4 * k..8 + 4 * k].copy_from_slice(row);
        }
        v[16] = self.f1;
        v[17] = self.f2;
        v
    }

    pub fn from_values(values: &[f64; FEATURE_COUNT], age_hours: f64, cell_id: String) -> Self {
        let mut beta = [[0.0; 4]; 3];
        for (k, row) in beta.iter_mut().enumerate() {
            row.copy_from_slice(&values[4 + 4 * k..8 + 4 * k]);
        }
        Self {
            a: [values[0], values[1], values[2], values[3]],
            beta,
            f1: values[16],
            f2: values[17],
            age_hours,
            cell_id,
        }
    }
}

/// Everything produced while extracting one feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: FeatureVector,
    pub logsig: LogsigFit,
    pub rhlp: RhlpFit,
    pub segmentation: Segmentation,
    /// Fitted regime index for each ordered regime slot.
    pub regime_order: [usize; 3],
}

pub fn extract_features(
    s: &ImpedanceSpectrum,
    rhlp_cfg: &RhlpConfig,
    simplex_cfg: &SimplexConfig,
) -> Result<FeatureVector> {
    extract_features_detailed(s, rhlp_cfg, simplex_cfg).map(|e| e.features)
}

pub fn extract_features_detailed(
    s: &ImpedanceSpectrum,
    rhlp_cfg: &RhlpConfig,
    simplex_cfg: &SimplexConfig,
) -> Result<Extraction> {
    if rhlp_cfg.k != 3 || rhlp_cfg.p != 3 {
        return Err(Error::InvalidConfig(format!(
            "feature extraction needs k = 3 and p = 3, got k = {}, p = {}",
            rhlp_cfg.k, rhlp_cfg.p
        )));
    }
    let s = validate_spectrum(s)?;
    let axis = log_axis(&s);
    let logsig = fit_logsig(axis.values(), &s.re_ohm, simplex_cfg)?;
    let rhlp = fit_em(axis.values(), &s.im_ohm, rhlp_cfg)?;
    let segmentation = segment(&rhlp.model, axis.values());

    let runs = segmentation.runs(axis.values());
    let mut distinct: Vec<usize> = runs.iter().map(|r| r.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if segmentation.boundaries.len() != 2 || distinct.len() != 3 {
        return Err(Error::BoundaryCountMismatch {
            boundaries: segmentation.boundaries.len(),
            segments: distinct.len(),
        });
    }
    let regime_order = [runs[0].0, runs[1].0, runs[2].0];

    let mut beta = [[0.0; 4]; 3];
    for (slot, &k) in regime_order.iter().enumerate() {
        beta[slot].copy_from_slice(&rhlp.model.betas[k]);
    }
    let features = FeatureVector {
        a: logsig.params.to_array(),
        beta,
        f1: segmentation.boundaries[0],
        f2: segmentation.boundaries[1],
        age_hours: s.age_hours,
        cell_id: s.cell_id.clone(),
    };
    Ok(Extraction {
        features,
        logsig,
        rhlp,
        segmentation,
        regime_order,
    })
}
