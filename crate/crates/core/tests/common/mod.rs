//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use ndarray::{Array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ufs_core::model::{gradients, loss, score_vector, topk_mask, ModelParams, ScorerMap};

pub const STEP: f64 = 1e-5;

/// Keeps the |w_m| at least 0.1 apart and away from 0 so that a ±STEP
/// probe never reorders the top-k or crosses the kink of |·|.
fn separated_scorer(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut mags: Vec<f64> = (0..m).map(|i| 0.2 + 0.15 * i as f64).collect();
    for v in mags.iter_mut() {
        *v += rng.random_range(0.0..0.05);
    }
    // random order and signs
    for i in (1..m).rev() {
        let j = rng.random_range(0..=i);
        mags.swap(i, j);
    }
    mags.into_iter()
        .map(|v| if rng.random_bool(0.5) { v } else { -v })
        .collect()
}

pub fn instance(seed: u64) -> (ModelParams, Array2<f64>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=8);
    let d = rng.random_range(1..=m.min(4));
    let b = rng.random_range(1..=5);
    let k = rng.random_range(1..=m);
    let phi = if seed.is_multiple_of(2) {
        ScorerMap::Abs
    } else {
        ScorerMap::Square
    };
    let w_m = Array::from(separated_scorer(&mut rng, m));
    let w_e = Array::from_shape_fn((m, d), |_| rng.random_range(-1.0..1.0));
    let w_d = Array::from_shape_fn((d, m), |_| rng.random_range(-1.0..1.0));
    let x = Array::from_shape_fn((b, m), |_| rng.random_range(-2.0..2.0));
    (ModelParams::new(phi, w_m, w_e, w_d).unwrap(), x, k)
}

/// Central difference of the total objective along one coordinate.
pub fn central<F: Fn(&mut ModelParams, f64)>(
    p: &ModelParams,
    x: &Array2<f64>,
    k: usize,
    lambda1: f64,
    bump: F,
) -> f64 {
    let mut plus = p.clone();
    bump(&mut plus, STEP);
    let mut minus = p.clone();
    bump(&mut minus, -STEP);
    let mask = topk_mask(&score_vector(p), k).unwrap();
    assert_eq!(topk_mask(&score_vector(&plus), k).unwrap(), mask);
    assert_eq!(topk_mask(&score_vector(&minus), k).unwrap(), mask);
    let fp = loss(&plus, x.view(), k, lambda1).unwrap().total;
    let fm = loss(&minus, x.view(), k, lambda1).unwrap().total;
    (fp - fm) / (2.0 * STEP)
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Returns the worst relative error over all coordinates of one instance.
pub fn worst_gradient_error(seed: u64, lambda1: f64) -> f64 {
    let (p, x, k) = instance(seed);
    let g = gradients(&p, x.view(), k, lambda1).unwrap();
    let mut worst = 0.0f64;
    for j in 0..p.w_m.len() {
        let n = central(&p, &x, k, lambda1, |q, h| q.w_m[j] += h);
        worst = worst.max(rel_err(g.w_m[j], n));
    }
    for ((i, j), &a) in g.w_e.indexed_iter() {
        let n = central(&p, &x, k, lambda1, |q, h| q.w_e[[i, j]] += h);
        worst = worst.max(rel_err(a, n));
    }
    for ((i, j), &a) in g.w_d.indexed_iter() {
        let n = central(&p, &x, k, lambda1, |q, h| q.w_d[[i, j]] += h);
        worst = worst.max(rel_err(a, n));
    }
    worst
}

/// `selec` and `score` of a `k = m` instance, for branch-coincidence checks.
pub fn branch_pair(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb7a1);
    let m = rng.random_range(1..=8);
    let d = rng.random_range(1..=m);
    let b = rng.random_range(1..=6);
    let phi = if seed.is_multiple_of(2) {
        ScorerMap::Abs
    } else {
        ScorerMap::Square
    };
    let w_m = Array::from_shape_fn(m, |_| rng.random_range(-2.0..2.0));
    let w_e = Array::from_shape_fn((m, d), |_| rng.random_range(-1.0..1.0));
    let w_d = Array::from_shape_fn((d, m), |_| rng.random_range(-1.0..1.0));
    let x = Array::from_shape_fn((b, m), |_| rng.random_range(-3.0..3.0));
    let p = ModelParams::new(phi, w_m, w_e, w_d).unwrap();
    let l = loss(&p, x.view(), m, 1.0 / 128.0).unwrap();
    (l.selec, l.score)
}
