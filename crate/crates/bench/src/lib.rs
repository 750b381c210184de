//! Fixtures shared by the benchmarks.

use eislife_core::synth::{gen_ageing_dataset, gen_spectrum, SynthSpec};
use eislife_core::{log_axis, validate_spectrum, Dataset};

/// Log-frequency axis, real part and imaginary part of one default spectrum.
pub fn spectrum(n_points: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let spec = SynthSpec { n_points, seed, ..SynthSpec::default() };
    let s = validate_spectrum(&gen_spectrum(&spec).expect("valid spec").spectrum).expect("valid spectrum");
    (log_axis(&s).into_inner(), s.re_ohm, s.im_ohm)
}

/// A 29-row study with ages planted on a2, b22 and f1.
pub fn study(seed: u64) -> Dataset {
    let spec = SynthSpec { seed, ..SynthSpec::default() };
    gen_ageing_dataset(&spec, 29, &[1, 9, 16]).expect("study").dataset
}
