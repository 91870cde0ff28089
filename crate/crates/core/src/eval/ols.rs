use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitName, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::SelectionResult;

pub const DEFAULT_RIDGE_EPS: f64 = 1e-8;

/// Linear map from the selected columns (plus intercept) to every column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub kept_idx: Vec<usize>,
    /// `k × m` coefficients.
    pub b: Array2<f64>,
    pub intercept: Array1<f64>,
    pub ridge_eps: f64,
}

impl OlsModel {
    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let xs = x.select(Axis(1), &self.kept_idx);
        xs.dot(&self.b) + self.intercept.view().insert_axis(Axis(0))
    }
}

/// Fits `X_train ≈ X_train[:, sel] · b + intercept` on the training rows via
/// centered normal equations with `ridge_eps · I` added to the Gram matrix.
///
/// With `ridge_eps = 0` a (numerically) rank-deficient selection is an error.
pub fn ols_fit(
    ds: &Dataset,
    split: &SplitSpec,
    sel: &SelectionResult,
    ridge_eps: f64,
) -> Result<OlsModel> {
    let k = sel.kept_idx.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "cannot fit OLS on an empty selection".into(),
        ));
    }
    if ridge_eps.is_nan() || ridge_eps < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ridge_eps = {ridge_eps} must be >= 0"
        )));
    }
    let m = ds.n_features();
    if let Some(&j) = sel.kept_idx.iter().find(|&&j| j >= m) {
        return Err(Error::InvalidArgument(format!(
            "selected feature {j} out of range"
        )));
    }
    if split.train_idx.is_empty() {
        return Err(Error::Empty("OLS needs training rows".into()));
    }

    let y = ds.rows(&split.train_idx);
    let n = y.nrows();
    let y_mean = y.mean_axis(Axis(0)).expect("non-empty");
    let yc = &y - &y_mean.view().insert_axis(Axis(0));
    let xc = yc.select(Axis(1), &sel.kept_idx);
    let x_mean = y_mean.select(Axis(0), &sel.kept_idx);

    let mut gram = xc.t().dot(&xc);
    for i in 0..k {
        gram[[i, i]] += ridge_eps;
    }
    let rhs = xc.t().dot(&yc);

    let g = DMatrix::from_fn(k, k, |i, j| gram[[i, j]]);
    let max_diag = (0..k).map(|i| gram[[i, i]]).fold(0.0f64, f64::max);
    let chol = g.cholesky().ok_or_else(|| {
        Error::Singular(format!(
            "Gram matrix of {k} selected columns is not positive definite"
        ))
    })?;
    if ridge_eps == 0.0 {
        let l = chol.l_dirty();
        let min_pivot = (0..k)
            .map(|i| l[(i, i)] * l[(i, i)])
            .fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-12 * max_diag.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(format!(
                "selected columns are linearly dependent on {n} training rows"
            )));
        }
    }

    let mut b = Array2::<f64>::zeros((k, m));
    for c in 0..m {
        let col = chol.solve(&DVector::from_fn(k, |i, _| rhs[[i, c]]));
        for i in 0..k {
            b[[i, c]] = col[i];
        }
    }
    let intercept = &y_mean - &x_mean.dot(&b);
    Ok(OlsModel {
        kept_idx: sel.kept_idx.clone(),
        b,
        intercept,
        ridge_eps,
    })
}

/// Mean squared residual over every sample and feature of the named split.
pub fn ols_error(
    model: &OlsModel,
    ds: &Dataset,
    split: &SplitSpec,
    which: SplitName,
) -> Result<f64> {
    let idx = split.indices(which);
    if idx.is_empty() {
        return Err(Error::Empty(format!("{which} split has no rows")));
    }
    let x = ds.rows(idx);
    let pred = model.predict(x.view());
    let sq: f64 = pred.iter().zip(&x).map(|(p, v)| (p - v).powi(2)).sum();
    Ok(sq / x.len() as f64)
}
