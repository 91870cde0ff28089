//! Metrics for a feature selection: OLS reconstruction from the selected
//! columns, downstream accuracy with extremely randomized trees, and the
//! exhaustive best-subset oracle.

mod ols;
mod oracle;
mod selection;
mod trees;

pub use ols::{ols_error, ols_fit, OlsModel, DEFAULT_RIDGE_EPS};
pub use oracle::{brute_force_best_subset, n_choose_k, OracleResult, MAX_SUBSETS};
pub use selection::{select_features, SelectionResult};
pub use trees::{
    extratrees_accuracy, extratrees_fit, ExtraTreesModel, ExtraTreesParams, Node, Tree,
};

use serde::{Deserialize, Serialize};

/// Metrics record written by the `eval` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub dataset: String,
    pub k: usize,
    pub phi: crate::model::ScorerMap,
    pub recon_mse: Option<f64>,
    pub accuracy: Option<f64>,
}
