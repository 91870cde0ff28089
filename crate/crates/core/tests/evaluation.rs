//! Metrics and the subset oracle on generated data.

use ndarray::{s, Array2, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ufs_core::data::{gen_synth, standardize, SplitSpec, SynthSpec};
use ufs_core::eval::{
    brute_force_best_subset, extratrees_accuracy, extratrees_fit, ols_error, ols_fit,
    ExtraTreesParams, SelectionResult, DEFAULT_RIDGE_EPS,
};
use ufs_core::{Dataset, SplitName};

fn planted(seed: u64) -> (Dataset, SplitSpec, Vec<usize>) {
    let (raw, planted) = gen_synth(&SynthSpec {
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    let sp = SplitSpec::new(raw.n_total(), [0.72, 0.08, 0.2], seed).unwrap();
    (standardize(&raw, &sp).unwrap(), sp, planted)
}

/// Simulated null distribution of the accuracy of one fixed prediction vector
/// against fair-coin labels on 200 points.
fn null_band_mass(lo: f64, hi: f64, draws: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let inside = (0..draws)
        .filter(|_| {
            let hits = (0..200).filter(|_| rng.random_bool(0.5)).count();
            (lo..=hi).contains(&(hits as f64 / 200.0))
        })
        .count();
    inside as f64 / draws as f64
}

#[test]
fn extratrees_on_random_labels_stay_at_chance() {
    // the band holds essentially all of the null mass
    assert!(null_band_mass(0.35, 0.65, 20_000) > 0.999);
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((600, 4), |_| rng.random_range(-1.0..1.0));
        let mut y: Vec<usize> = (0..600).map(|i| i % 2).collect();
        for i in (1..y.len()).rev() {
            y.swap(i, rng.random_range(0..=i));
        }
        let (xtr, xte) = (x.slice(s![..400, ..]), x.slice(s![400.., ..]));
        let model = extratrees_fit(
            xtr,
            &y[..400],
            &ExtraTreesParams {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let acc = extratrees_accuracy(&model, xte, &y[400..]).unwrap();
        assert!((0.35..=0.65).contains(&acc), "seed {seed}: accuracy {acc}");
    }
}

#[test]
fn extratrees_learn_the_synthetic_labels() {
    let (ds, sp, planted) = planted(3);
    let labels = ds.labels.as_ref().unwrap();
    let pick = |rows: &[usize]| ds.rows(rows).select(Axis(1), &planted);
    let ytr: Vec<usize> = sp.train_idx.iter().map(|&i| labels[i]).collect();
    let yte: Vec<usize> = sp.test_idx.iter().map(|&i| labels[i]).collect();
    let model = extratrees_fit(
        pick(&sp.train_idx).view(),
        &ytr,
        &ExtraTreesParams::default(),
    )
    .unwrap();
    let acc = extratrees_accuracy(&model, pick(&sp.test_idx).view(), &yte).unwrap();
    assert!(acc > 0.8, "accuracy {acc}");
    for tree in &model.trees {
        for node in &tree.nodes {
            if let ufs_core::eval::Node::Split { feature, .. } = node {
                assert!(*feature < planted.len());
            }
        }
    }
}

#[test]
fn oracle_finds_the_planted_columns() {
    for seed in 0..5 {
        let (ds, sp, planted) = planted(seed);
        let best = brute_force_best_subset(&ds, &sp, 5).unwrap();
        assert_eq!(best.best_idx, planted, "seed {seed}");
        assert_eq!(best.n_subsets, 252);
    }
}

#[test]
fn oracle_beats_random_subsets() {
    let (ds, sp, _) = planted(7);
    let best = brute_force_best_subset(&ds, &sp, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let idx = index::sample(&mut rng, 10, 4).into_vec();
        let sel = SelectionResult::from_indices(idx, "random");
        let m = ols_fit(&ds, &sp, &sel, DEFAULT_RIDGE_EPS).unwrap();
        let err = ols_error(&m, &ds, &sp, SplitName::Test).unwrap();
        assert!(best.best_err <= err + 1e-15);
    }
}

#[test]
fn oracle_with_a_single_subset_is_full_reconstruction() {
    let (ds, sp, _) = planted(1);
    let five = ds.x.slice(s![.., ..5]).to_owned();
    let small = Dataset::new(five).unwrap();
    let best = brute_force_best_subset(&small, &sp, 5).unwrap();
    assert_eq!(best.best_idx, vec![0, 1, 2, 3, 4]);
    let m = ols_fit(
        &small,
        &sp,
        &SelectionResult::from_indices((0..5).collect(), "all"),
        DEFAULT_RIDGE_EPS,
    )
    .unwrap();
    let err = ols_error(&m, &small, &sp, SplitName::Test).unwrap();
    assert_eq!(best.best_err, err);
    assert!(err < 1e-12);
}

#[test]
fn oracle_guard_rejects_large_searches() {
    let x = Array2::<f64>::from_shape_fn((10, 30), |(i, j)| ((i * 31 + j * 17) % 7) as f64);
    let ds = Dataset::new(x).unwrap();
    let sp = SplitSpec::new(10, [0.6, 0.2, 0.2], 0).unwrap();
    // C(30, 15) ≈ 1.55e8
    assert!(brute_force_best_subset(&ds, &sp, 15).is_err());
}
