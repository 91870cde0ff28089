//! Unsupervised feature selection with a scorer/selector linear autoencoder.
//!
//! A diagonal scorer layer `φ(w_m)` weights every input feature; the selector
//! keeps only the `k` highest-scoring features. Both branches share one linear
//! encoder/decoder and are trained jointly:
//!
//! ```text
//! min  ‖X − ((X ⊙ s_k) W_E) W_D‖²  +  λ₁ ‖X − ((X ⊙ s) W_E) W_D‖²
//! ```
//!
//! where `s = φ(w_m)` and `s_k` zeroes all but the `k` largest entries of `s`.
//!
//! Modules:
//! - [`data`]: CSV loading, seeded splits, standardization, subsampling and the
//!   planted-feature synthetic generator.
//! - [`model`]: parameters, forward pass, losses and analytic gradients.
//! - [`optim`]: initialization and Adam.
//! - [`trainer`]: the training loop with validation checkpointing.
//! - [`eval`]: OLS reconstruction, extremely randomized trees, and the
//!   exhaustive subset oracle.
//! - [`stability`]: generalization-gap sweeps, leave-one-out stability and
//!   selection overlap.
//! - [`cli`]: the `ufs` command-line entry point.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod optim;
pub mod rng;
pub mod stability;
pub mod trainer;

pub use data::{Dataset, SplitName, SplitSpec};
pub use error::{Error, Result};
pub use model::{Gradients, LossBreakdown, ModelParams, ScorerMap, TopKMask};
pub use optim::AdamState;
pub use trainer::{TrainConfig, TrainReport};
