//! The scorer/selector linear autoencoder.
//!
//! Diagonal operators are kept as vectors: the scorer is `s = φ(w_m)` and the
//! selector is `s` with all but its `k` largest entries zeroed. Scaling the
//! input by a diagonal is a column-wise multiply.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementwise non-negative map applied to the scorer weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerMap {
    Abs,
    Square,
}

impl ScorerMap {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            ScorerMap::Abs => v.abs(),
            ScorerMap::Square => v * v,
        }
    }

    /// Derivative of [`apply`](Self::apply); `0` at `v = 0` for `Abs`.
    #[inline]
    pub fn derivative(self, v: f64) -> f64 {
        match self {
            ScorerMap::Abs => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            ScorerMap::Square => 2.0 * v,
        }
    }
}

impl fmt::Display for ScorerMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerMap::Abs => "abs",
            ScorerMap::Square => "square",
        })
    }
}

impl FromStr for ScorerMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abs" => Ok(ScorerMap::Abs),
            "square" => Ok(ScorerMap::Square),
            other => Err(Error::InvalidArgument(format!(
                "unknown scorer map `{other}` (expected abs or square)"
            ))),
        }
    }
}

/// Scorer weights plus the linear encoder (`m × d`) and decoder (`d × m`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub phi: ScorerMap,
    pub w_m: Array1<f64>,
    pub w_e: Array2<f64>,
    pub w_d: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsRepr {
    phi: ScorerMap,
    w_m: Vec<f64>,
    w_e: Vec<Vec<f64>>,
    w_d: Vec<Vec<f64>>,
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>, what: &str) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Shape(format!("{what} has ragged rows")));
    }
    Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Shape(e.to_string()))
}

impl ModelParams {
    pub fn new(
        phi: ScorerMap,
        w_m: Array1<f64>,
        w_e: Array2<f64>,
        w_d: Array2<f64>,
    ) -> Result<Self> {
        let p = ModelParams { phi, w_m, w_e, w_d };
        p.validate()?;
        Ok(p)
    }

    pub fn n_features(&self) -> usize {
        self.w_m.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.w_e.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.w_m.len();
        let d = self.w_e.ncols();
        if self.w_e.nrows() != m || self.w_d.dim() != (d, m) {
            return Err(Error::Shape(format!(
                "w_m has {m} entries, w_e is {:?}, w_d is {:?}",
                self.w_e.dim(),
                self.w_d.dim()
            )));
        }
        if d == 0 || d > m {
            return Err(Error::Shape(format!(
                "latent dimension {d} must be in 1..={m}"
            )));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w_m
            .iter()
            .chain(&self.w_e)
            .chain(&self.w_d)
            .all(|v| v.is_finite())
    }

    /// `W_E W_D`, the `m × m` end-to-end linear map without scoring.
    pub fn end_to_end(&self) -> Array2<f64> {
        self.w_e.dot(&self.w_d)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ParamsRepr {
            phi: self.phi,
            w_m: self.w_m.to_vec(),
            w_e: to_rows(&self.w_e),
            w_d: to_rows(&self.w_d),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: ParamsRepr = serde_json::from_str(s)?;
        ModelParams::new(
            r.phi,
            Array1::from(r.w_m),
            from_rows(r.w_e, "w_e")?,
            from_rows(r.w_d, "w_d")?,
        )
    }
}

/// The `k` features with the largest scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopKMask {
    pub k: usize,
    /// Ascending.
    pub kept_idx: Vec<usize>,
    pub mask: Vec<bool>,
}

impl TopKMask {
    pub fn is_kept(&self, j: usize) -> bool {
        self.mask[j]
    }
}

/// Mean per-sample losses of both branches and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub selec: f64,
    pub score: f64,
    pub total: f64,
    pub lambda1: f64,
}

impl LossBreakdown {
    pub fn new(selec: f64, score: f64, lambda1: f64) -> Self {
        LossBreakdown {
            selec,
            score,
            total: selec + lambda1 * score,
            lambda1,
        }
    }
}

/// Gradient triple, shaped like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_m: Array1<f64>,
    pub w_e: Array2<f64>,
    pub w_d: Array2<f64>,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParams) -> Self {
        Gradients {
            w_m: Array1::zeros(p.w_m.raw_dim()),
            w_e: Array2::zeros(p.w_e.raw_dim()),
            w_d: Array2::zeros(p.w_d.raw_dim()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w_m
            .iter()
            .chain(&self.w_e)
            .chain(&self.w_d)
            .all(|v| v.is_finite())
    }
}

/// `φ(w_m)`.
pub fn score_vector(params: &ModelParams) -> Array1<f64> {
    params.w_m.mapv(|v| params.phi.apply(v))
}

/// Keeps the `k` largest scores; among equal scores the lower index wins.
pub fn topk_mask(scores: &Array1<f64>, k: usize) -> Result<TopKMask> {
    let m = scores.len();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={m}"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept_idx = order[..k].to_vec();
    kept_idx.sort_unstable();
    let mut mask = vec![false; m];
    for &j in &kept_idx {
        mask[j] = true;
    }
    Ok(TopKMask { k, kept_idx, mask })
}

fn check_batch(params: &ModelParams, x: &ArrayView2<f64>) -> Result<()> {
    if x.ncols() != params.n_features() {
        return Err(Error::Shape(format!(
            "batch has {} columns, model expects {}",
            x.ncols(),
            params.n_features()
        )));
    }
    Ok(())
}

/// Effective diagonal for one branch: scores, masked when a selector is given.
fn branch_scale(scores: &Array1<f64>, mask: Option<&TopKMask>) -> Array1<f64> {
    match mask {
        Some(mk) => Array1::from_iter(
            scores
                .iter()
                .zip(&mk.mask)
                .map(|(&s, &keep)| if keep { s } else { 0.0 }),
        ),
        None => scores.clone(),
    }
}

fn scaled_input(x: &ArrayView2<f64>, scale: &Array1<f64>) -> Array2<f64> {
    x * &scale.view().insert_axis(Axis(0))
}

/// `((x ⊙ s) W_E) W_D`, with `s` masked on the selector branch.
pub fn forward(
    params: &ModelParams,
    x: ArrayView2<f64>,
    mask: Option<&TopKMask>,
) -> Result<Array2<f64>> {
    check_batch(params, &x)?;
    if let Some(mk) = mask {
        if mk.mask.len() != params.n_features() {
            return Err(Error::Shape(
                "mask length differs from feature count".into(),
            ));
        }
    }
    let scale = branch_scale(&score_vector(params), mask);
    let xs = scaled_input(&x, &scale);
    Ok(xs.dot(&params.w_e).dot(&params.w_d))
}

/// Squared reconstruction error of each row.
pub fn per_sample_loss(
    params: &ModelParams,
    x: ArrayView2<f64>,
    mask: Option<&TopKMask>,
) -> Result<Array1<f64>> {
    let recon = forward(params, x, mask)?;
    Ok(Zip::from(recon.rows())
        .and(x.rows())
        .map_collect(|r, xi| r.iter().zip(xi).map(|(a, b)| (b - a).powi(2)).sum()))
}

/// Per-sample selector-branch loss with the mask taken from the current scores.
pub fn selector_losses(params: &ModelParams, x: ArrayView2<f64>, k: usize) -> Result<Array1<f64>> {
    let mask = topk_mask(&score_vector(params), k)?;
    per_sample_loss(params, x, Some(&mask))
}

fn mean(v: &Array1<f64>) -> f64 {
    v.sum() / v.len() as f64
}

/// Batch objective: mean selector loss plus `λ₁` times mean scorer loss.
pub fn loss(
    params: &ModelParams,
    x: ArrayView2<f64>,
    k: usize,
    lambda1: f64,
) -> Result<LossBreakdown> {
    if x.nrows() == 0 {
        return Err(Error::Empty("loss on an empty batch".into()));
    }
    if lambda1.is_nan() || lambda1 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda1 must be >= 0, got {lambda1}"
        )));
    }
    let mask = topk_mask(&score_vector(params), k)?;
    let selec = mean(&per_sample_loss(params, x, Some(&mask))?);
    let score = mean(&per_sample_loss(params, x, None)?);
    Ok(LossBreakdown::new(selec, score, lambda1))
}

/// Loss of one branch and its gradients w.r.t. the effective scale vector,
/// `W_E` and `W_D`, accumulated into `grads` with weight `weight`.
fn branch_backward(
    params: &ModelParams,
    x: &ArrayView2<f64>,
    scale: &Array1<f64>,
    weight: f64,
    grads: &mut Gradients,
) -> (f64, Array1<f64>) {
    let b = x.nrows() as f64;
    let xs = scaled_input(x, scale);
    let hidden = xs.dot(&params.w_e);
    let mut resid = hidden.dot(&params.w_d);
    resid -= x;
    let value = resid.iter().map(|r| r * r).sum::<f64>() / b;

    // d(mean ‖r‖²)/dr = 2r/b
    let g_out = resid * (2.0 * weight / b);
    grads.w_d += &hidden.t().dot(&g_out);
    let g_hidden = g_out.dot(&params.w_d.t());
    grads.w_e += &xs.t().dot(&g_hidden);
    let g_xs = g_hidden.dot(&params.w_e.t());
    let g_scale = (&g_xs * x).sum_axis(Axis(0));
    (value, g_scale)
}

/// Objective and analytic gradients, with the top-k mask computed once from
/// the current scores and held fixed.
///
/// Masked-out coordinates get no selector-branch gradient; every coordinate
/// gets the scorer-branch gradient weighted by `λ₁`. `W_E` and `W_D`
/// accumulate both branches.
pub fn loss_and_gradients(
    params: &ModelParams,
    x: ArrayView2<f64>,
    k: usize,
    lambda1: f64,
) -> Result<(LossBreakdown, Gradients)> {
    check_batch(params, &x)?;
    if x.nrows() == 0 {
        return Err(Error::Empty("gradients on an empty batch".into()));
    }
    if lambda1.is_nan() || lambda1 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda1 must be >= 0, got {lambda1}"
        )));
    }
    let scores = score_vector(params);
    let mask = topk_mask(&scores, k)?;
    let mut grads = Gradients::zeros_like(params);

    let sel_scale = branch_scale(&scores, Some(&mask));
    let (selec, g_sel) = branch_backward(params, &x, &sel_scale, 1.0, &mut grads);
    let (score, g_score) = branch_backward(params, &x, &scores, lambda1, &mut grads);

    for (j, g) in grads.w_m.iter_mut().enumerate() {
        let ds = if mask.mask[j] { g_sel[j] } else { 0.0 } + g_score[j];
        *g = ds * params.phi.derivative(params.w_m[j]);
    }
    Ok((LossBreakdown::new(selec, score, lambda1), grads))
}

/// Gradients of [`loss`]'s total.
pub fn gradients(
    params: &ModelParams,
    x: ArrayView2<f64>,
    k: usize,
    lambda1: f64,
) -> Result<Gradients> {
    loss_and_gradients(params, x, k, lambda1).map(|(_, g)| g)
}
