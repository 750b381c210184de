use eislife_core::features::feature_index;
use eislife_core::regression::{exhaustive_select, loo_cv, Criterion, Dataset, SelectionOptions};
use eislife_core::synth::{gen_ageing_dataset, AgeRule, SynthSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_noise_single_planted_feature() {
    let a2 = feature_index("a2").unwrap();
    let spec = SynthSpec {
        age_rule: AgeRule { noise_fraction: 0.0, ..AgeRule::default() },
        seed: 11,
        ..SynthSpec::default()
    };
    let ds = gen_ageing_dataset(&spec, 29, &[a2]).unwrap();
    assert_eq!(ds.dataset.n_samples(), 29);
    for (fv, y) in ds.features.iter().zip(&ds.dataset.y) {
        assert!((ds.truth.noiseless(&fv.values()) - y).abs() < 1e-9);
    }
    let report = exhaustive_select(&ds.dataset, &SelectionOptions::default()).unwrap();
    assert!(report.best.subset.contains(&a2), "{:?}", report.best.names);
    let range = 1000.0;
    assert!(report.best.test_me < 1e-6 * range, "{}", report.best.test_me);
}

#[test]
fn generator_is_deterministic() {
    let spec = SynthSpec { seed: 5, ..SynthSpec::default() };
    let a = gen_ageing_dataset(&spec, 6, &[0, 17]).unwrap();
    let b = gen_ageing_dataset(&spec, 6, &[0, 17]).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.spectra, b.spectra);
    assert!(a.dataset.y.iter().all(|&y| y >= 0.0));
    assert_eq!(a.dataset.y.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
}

fn best_score(data: &Dataset, opts: &SelectionOptions) -> f64 {
    exhaustive_select(data, opts).unwrap().best.test_me
}

#[test]
fn pure_noise_target_is_not_predictable() {
    let spec = SynthSpec { seed: 21, ..SynthSpec::default() };
    let ds = gen_ageing_dataset(&spec, 29, &[]).unwrap();
    let opts = SelectionOptions { max_dim: Some(3), criterion: Criterion::MeanAbsolute };
    let observed = best_score(&ds.dataset, &opts);

    // same design, targets shuffled: the null distribution of the best score
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut null = Vec::new();
    for _ in 0..19 {
        let mut shuffled = ds.dataset.clone();
        shuffled.y.shuffle(&mut rng);
        null.push(best_score(&shuffled, &opts));
    }
    null.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let below = null.iter().filter(|&&v| v < observed).count();
    assert!(below >= 1, "observed {observed} below every permutation {null:?}");

    // the mean predictor: LOO error of the training mean
    let n = ds.dataset.n_samples() as f64;
    let total: f64 = ds.dataset.y.iter().sum();
    let baseline = ds
        .dataset
        .y
        .iter()
        .map(|y| (y - (total - y) / (n - 1.0)).abs())
        .sum::<f64>()
        / n;
    assert!(observed > 0.6 * baseline, "observed {observed}, baseline {baseline}");
    let full = loo_cv(&ds.dataset, &(0..18).collect::<Vec<_>>()).unwrap();
    assert!(full.test_me > observed);
}
