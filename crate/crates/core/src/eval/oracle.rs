use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitName, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{ols_error, ols_fit, SelectionResult, DEFAULT_RIDGE_EPS};

/// Largest number of subsets the oracle will enumerate.
pub const MAX_SUBSETS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_idx: Vec<usize>,
    pub best_err: f64,
    pub n_subsets: usize,
}

pub fn n_choose_k(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    // acc·(n−i) is divisible by (i+1) at every step; saturate on overflow
    let mut acc = 1u128;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i + 1) as u128,
            None => return u128::MAX,
        }
    }
    acc
}

/// Exhaustive solution of the linear subset-reconstruction problem: fits OLS
/// on the training rows for every `k`-subset and returns the subset with the
/// lowest test MSE (lexicographically first on ties).
pub fn brute_force_best_subset(ds: &Dataset, split: &SplitSpec, k: usize) -> Result<OracleResult> {
    let m = ds.n_features();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={m}"
        )));
    }
    let count = n_choose_k(m, k);
    if count > MAX_SUBSETS {
        return Err(Error::InvalidArgument(format!(
            "C({m}, {k}) = {count} subsets exceeds the limit of {MAX_SUBSETS}"
        )));
    }
    let subsets: Vec<Vec<usize>> = (0..m).combinations(k).collect();
    let errors: Vec<f64> = subsets
        .par_iter()
        .map(|s| {
            let sel = SelectionResult::from_indices(s.clone(), "oracle");
            let model = ols_fit(ds, split, &sel, DEFAULT_RIDGE_EPS)?;
            ols_error(&model, ds, split, SplitName::Test)
        })
        .collect::<Result<_>>()?;
    let (best, &best_err) = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("at least one subset");
    Ok(OracleResult {
        best_idx: subsets[best].clone(),
        best_err,
        n_subsets: subsets.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(n_choose_k(10, 5), 252);
        assert_eq!(n_choose_k(5, 5), 1);
        assert_eq!(n_choose_k(3, 4), 0);
        assert!(n_choose_k(784, 50) > MAX_SUBSETS);
    }
}
