mod support;

use eislife_core::regression::{exhaustive_select, loo_cv, Criterion, Dataset, SelectionOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::naive::{naive_loo, naive_select};

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let offsets: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
    let scales: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|j| offsets[j] + scales[j] * rng.random_range(-1.0..1.0)).collect())
        .collect();
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..50.0)).collect();
    let y = rows
        .iter()
        .map(|r| 400.0 + r.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + rng.random_range(-30.0..30.0))
        .collect();
    (rows, y)
}

fn to_dataset(rows: &[Vec<f64>], y: &[f64]) -> Dataset {
    let d = rows[0].len();
    Dataset::new(
        rows,
        y.to_vec(),
        (0..d).map(|j| format!("x{j}")).collect(),
        (0..rows.len()).map(|i| format!("s{i}")).collect(),
    )
    .unwrap()
}

#[test]
fn loo_matches_naive_refits() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let d = 1 + case % 7;
        let (rows, y) = random_rows(&mut rng, 29, d);
        let data = to_dataset(&rows, &y);
        let subset: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.7)).collect();
        let subset = if subset.is_empty() { vec![0] } else { subset };
        let fast = loo_cv(&data, &subset).unwrap();
        let slow = naive_loo(&rows, &y, &subset).unwrap();
        assert!((fast.test_me - slow.test_me).abs() < 1e-10, "case {case}: {} {}", fast.test_me, slow.test_me);
        assert!((fast.train_me - slow.train_me).abs() < 1e-10, "case {case}");
        for (a, b) in fast.predictions.iter().zip(&slow.predictions) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "case {case}: {a} {b}");
        }
    }
}

#[test]
fn two_sample_loo_is_a_dataset_error() {
    // with N = 2 every training fold has one row; rejected up front
    assert!(Dataset::new(
        &[vec![0.0], vec![1.0]],
        vec![0.0, 2.0],
        vec!["x".into()],
        vec!["a".into(), "b".into()],
    )
    .is_err());
}

#[test]
fn three_feature_selection_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let (rows, y) = random_rows(&mut rng, 29, 3);
        let data = to_dataset(&rows, &y);
        for (criterion, squared) in [(Criterion::MeanAbsolute, false), (Criterion::MeanSquared, true)] {
            let opts = SelectionOptions { max_dim: None, criterion };
            let r = exhaustive_select(&data, &opts).unwrap();
            let b = naive_select(&rows, &y, 3, squared).unwrap();
            assert_eq!(r.evaluated, 7);
            assert_eq!(r.best.subset, b.subset);
            assert!((r.best.test_me - b.loo.test_me).abs() < 1e-10);
            assert!((r.best.train_me - b.loo.train_me).abs() < 1e-10);
            assert_eq!(r.tied_with_best, b.tied);
        }
    }
}

#[test]
fn single_feature_restriction_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (rows, y) = random_rows(&mut rng, 29, 6);
    let data = to_dataset(&rows, &y);
    let opts = SelectionOptions { max_dim: Some(1), criterion: Criterion::MeanAbsolute };
    let r = exhaustive_select(&data, &opts).unwrap();
    let b = naive_select(&rows, &y, 1, false).unwrap();
    assert_eq!(r.best.subset, b.subset);
    assert_eq!(r.evaluated, b.evaluated);
}

#[test]
fn exact_duplicate_columns_tie_canonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut rows, y) = random_rows(&mut rng, 29, 4);
    for r in rows.iter_mut() {
        r[3] = r[1];
    }
    let data = to_dataset(&rows, &y);
    for (criterion, squared) in [(Criterion::MeanAbsolute, false), (Criterion::MeanSquared, true)] {
        let r = exhaustive_select(&data, &SelectionOptions { max_dim: None, criterion }).unwrap();
        let b = naive_select(&rows, &y, 4, squared).unwrap();
        assert_eq!(r.best.subset, b.subset);
        assert_eq!(r.tied_with_best, b.tied);
        assert!(!r.best.subset.contains(&3) || !r.best.subset.contains(&1));
    }
}
