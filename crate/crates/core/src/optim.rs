//! Initialization and the Adam optimizer.

use ndarray::{Array1, Array2, Zip};
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::model::{Gradients, ModelParams, ScorerMap};
use crate::rng::{stream_rng, Stream};

/// Endpoints of the scorer-weight initialization interval, as published.
pub const SCORER_INIT_BOUNDS: (f64, f64) = (0.999999, 0.9999999);

pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

/// Scorer weights drawn uniformly just below 1 (distinct, to break ties in
/// the first top-k), encoder and decoder from the Xavier normal
/// `N(0, 2 / (fan_in + fan_out))`.
///
/// Draw order is `w_m`, then `w_e` and `w_d` row-major, all from one stream.
pub fn init_params(m: usize, d: usize, phi: ScorerMap, seed: u64) -> Result<ModelParams> {
    if d == 0 || d > m {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= d <= m, got d={d}, m={m}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Init);
    let (a, b) = SCORER_INIT_BOUNDS;
    let scorer = Uniform::new_inclusive(a.min(b), a.max(b)).expect("valid interval");
    let xavier = Normal::new(0.0, (2.0 / (m + d) as f64).sqrt()).expect("valid std");

    let w_m: Array1<f64> = (0..m).map(|_| scorer.sample(&mut rng)).collect();
    let w_e = Array2::from_shape_simple_fn((m, d), || xavier.sample(&mut rng));
    let w_d = Array2::from_shape_simple_fn((d, m), || xavier.sample(&mut rng));
    ModelParams::new(phi, w_m, w_e, w_d)
}

/// Bias-corrected Adam moments over the full parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m1: Gradients,
    pub m2: Gradients,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        AdamState {
            m1: Gradients::zeros_like(params),
            m2: Gradients::zeros_like(params),
            t: 0,
            lr,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
        }
    }
}

fn update<D: ndarray::Dimension>(
    theta: &mut ndarray::Array<f64, D>,
    m1: &mut ndarray::Array<f64, D>,
    m2: &mut ndarray::Array<f64, D>,
    g: &ndarray::Array<f64, D>,
    c: &StepConsts,
) {
    Zip::from(theta)
        .and(m1)
        .and(m2)
        .and(g)
        .for_each(|p, m, v, &g| {
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / c.bias1;
            let v_hat = *v / c.bias2;
            *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
        });
}

struct StepConsts {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bias1: f64,
    bias2: f64,
}

/// One Adam step on `(w_m, W_E, W_D)` jointly.
///
/// Takes state and parameters by value and returns the updated pair. A
/// non-finite gradient entry is an error and leaves nothing half-updated.
pub fn adam_step(
    mut state: AdamState,
    mut params: ModelParams,
    grads: &Gradients,
) -> Result<(AdamState, ModelParams)> {
    if grads.w_m.raw_dim() != params.w_m.raw_dim()
        || grads.w_e.raw_dim() != params.w_e.raw_dim()
        || grads.w_d.raw_dim() != params.w_d.raw_dim()
    {
        return Err(Error::Shape(
            "gradient shapes differ from parameters".into(),
        ));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite(format!(
            "gradient at Adam step {}",
            state.t + 1
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let c = StepConsts {
        lr: state.lr,
        beta1: state.beta1,
        beta2: state.beta2,
        eps: state.eps,
        bias1: 1.0 - state.beta1.powi(t),
        bias2: 1.0 - state.beta2.powi(t),
    };
    update(
        &mut params.w_m,
        &mut state.m1.w_m,
        &mut state.m2.w_m,
        &grads.w_m,
        &c,
    );
    update(
        &mut params.w_e,
        &mut state.m1.w_e,
        &mut state.m2.w_e,
        &grads.w_e,
        &c,
    );
    update(
        &mut params.w_d,
        &mut state.m1.w_d,
        &mut state.m2.w_d,
        &grads.w_d,
        &c,
    );
    Ok((state, params))
}
