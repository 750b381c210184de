//! Fuel-cell lifetime estimation from impedance spectra.
//!
//! The pipeline fits a logistic curve to the real part of each spectrum and a
//! regression model with a hidden logistic process to the imaginary part,
//! gathers 18 descriptors per spectrum, and estimates operating age with a
//! linear model chosen by exhaustive leave-one-out feature-subset search.

pub mod error;
pub mod features;
mod linalg;
pub mod logsig;
pub mod regression;
pub mod rhlp;
pub mod simplex;
pub mod spectrum;
pub mod synth;

pub use error::{Error, Result};
pub use features::{extract_features, feature_names, FeatureVector, FEATURE_COUNT};
pub use logsig::{fit_logsig, logsig_eval, LogsigFit, LogsigParams};
pub use regression::{
    exhaustive_select, loo_cv, mean_error, ols_fit, Criterion, Dataset, LinearModel, LooReport,
    SelectionOptions, SelectionReport,
};
pub use rhlp::{
    approximate, density, fit_em, irls_update, log_likelihood, logistic_probs, regressor_vector,
    segment, RhlpConfig, RhlpFit, RhlpModel, Segmentation,
};
pub use simplex::{minimize, SimplexConfig, SimplexResult};
pub use spectrum::{log_axis, validate_spectrum, ImpedanceSpectrum, LogFrequencyAxis};
pub use synth::{
    gen_ageing_dataset, gen_latent_study, gen_spectrum, AgeingDataset, GeneratedSpectrum, SynthSpec,
};
