use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{score_vector, topk_mask, ModelParams};

/// The `k` selected features of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Strictly increasing.
    pub kept_idx: Vec<usize>,
    /// `φ(w_m)` of each kept feature, aligned with `kept_idx`.
    pub scores: Vec<f64>,
    pub source: String,
}

impl SelectionResult {
    /// A selection with no model behind it (oracle subsets, ad-hoc tests).
    pub fn from_indices(mut kept_idx: Vec<usize>, source: impl Into<String>) -> Self {
        kept_idx.sort_unstable();
        kept_idx.dedup();
        let scores = vec![1.0; kept_idx.len()];
        SelectionResult {
            kept_idx,
            scores,
            source: source.into(),
        }
    }

    pub fn k(&self) -> usize {
        self.kept_idx.len()
    }
}

pub fn select_features(
    params: &ModelParams,
    k: usize,
    source: impl Into<String>,
) -> Result<SelectionResult> {
    let scores = score_vector(params);
    let mask = topk_mask(&scores, k)?;
    Ok(SelectionResult {
        scores: mask.kept_idx.iter().map(|&j| scores[j]).collect(),
        kept_idx: mask.kept_idx,
        source: source.into(),
    })
}
