//! Minibatch Adam training of the joint scorer/selector objective.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::model::{self, score_vector, topk_mask, LossBreakdown, ModelParams, ScorerMap};
use crate::optim::{adam_step, init_params, AdamState, DEFAULT_LR};
use crate::rng::{stream_rng, Stream};

pub const DEFAULT_LAMBDA1: f64 = 1.0 / 128.0;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_BATCH_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda1: f64,
    pub k: usize,
    /// Latent dimension; `None` means `d = k`.
    pub d: Option<usize>,
    pub epochs: usize,
    /// `0` means full batch.
    pub batch_size: usize,
    pub lr: f64,
    pub phi: ScorerMap,
    pub seed: u64,
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn new(k: usize) -> Self {
        TrainConfig {
            lambda1: DEFAULT_LAMBDA1,
            k,
            d: None,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            lr: DEFAULT_LR,
            phi: ScorerMap::Square,
            seed: 0,
            shuffle: true,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.d.unwrap_or(self.k)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.k == 0 || self.k > m {
            return Err(Error::InvalidArgument(format!(
                "k = {} must be in 1..={m}",
                self.k
            )));
        }
        let d = self.latent_dim();
        if d == 0 || d > m {
            return Err(Error::InvalidArgument(format!(
                "d = {d} must be in 1..={m}"
            )));
        }
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda1 = {} must be >= 0",
                self.lambda1
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lr = {} must be > 0",
                self.lr
            )));
        }
        Ok(())
    }
}

/// Telemetry recorded after each epoch (epoch 0 is the initialization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossBreakdown,
    /// `None` when the split has no validation rows.
    pub val: Option<LossBreakdown>,
    pub kept_idx: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    /// Epoch with the lowest validation total (training total without a
    /// validation split); earliest wins ties.
    pub best_epoch: usize,
    pub final_params: ModelParams,
    pub best_params: ModelParams,
}

impl TrainReport {
    pub fn last(&self) -> &EpochRecord {
        self.epochs
            .last()
            .expect("report always holds the initial record")
    }

    /// One JSON object per epoch, newline-terminated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.epochs {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Trains on `split.train_idx`, checkpointing on the validation rows.
pub fn train(ds: &Dataset, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainReport> {
    run(ds, split, cfg, None)
}

/// Same as [`train`] with dataset row `j` removed from the training set.
///
/// The seed and the per-epoch permutation are unchanged; the deleted row is
/// simply skipped, so the only perturbation is the missing sample.
pub fn leave_one_out_retrain(
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    j: usize,
) -> Result<TrainReport> {
    let pos = split
        .train_idx
        .iter()
        .position(|&r| r == j)
        .ok_or_else(|| Error::InvalidArgument(format!("row {j} is not in the train split")))?;
    run(ds, split, cfg, Some(pos))
}

fn epoch_losses(
    params: &ModelParams,
    x: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<Option<LossBreakdown>> {
    if x.nrows() == 0 {
        return Ok(None);
    }
    model::loss(params, x.view(), cfg.k, cfg.lambda1).map(Some)
}

fn run(
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    skip: Option<usize>,
) -> Result<TrainReport> {
    let m = ds.n_features();
    cfg.validate(m)?;
    let n_full = split.train_idx.len();
    let rows: Vec<usize> = split
        .train_idx
        .iter()
        .enumerate()
        .filter(|(p, _)| Some(*p) != skip)
        .map(|(_, &r)| r)
        .collect();
    if rows.is_empty() {
        return Err(Error::Empty("train split is empty".into()));
    }
    let x_train = ds.rows(&rows);
    let x_val = ds.rows(&split.val_idx);

    let mut params = init_params(m, cfg.latent_dim(), cfg.phi, cfg.seed)?;
    let mut state = AdamState::new(&params, cfg.lr);
    let mut shuffle_rng = stream_rng(cfg.seed, Stream::Shuffle);
    let batch = if cfg.batch_size == 0 {
        rows.len()
    } else {
        cfg.batch_size
    };

    let record = |epoch: usize, params: &ModelParams| -> Result<EpochRecord> {
        let train = epoch_losses(params, &x_train, cfg)?.expect("non-empty train");
        if !train.total.is_finite() {
            return Err(Error::NonFinite(format!(
                "training loss after epoch {epoch}"
            )));
        }
        Ok(EpochRecord {
            epoch,
            train,
            val: epoch_losses(params, &x_val, cfg)?,
            kept_idx: topk_mask(&score_vector(params), cfg.k)?.kept_idx,
        })
    };

    let mut epochs = vec![record(0, &params)?];
    let mut best = (0usize, params.clone());
    let key = |r: &EpochRecord| r.val.unwrap_or(r.train).total;
    let mut best_key = key(&epochs[0]);

    // positions into the *unfiltered* train list, so a deletion keeps the order
    let mut order: Vec<usize> = (0..n_full).collect();
    // map from unfiltered position to row of x_train
    let local: Vec<Option<usize>> = {
        let mut next = 0;
        (0..n_full)
            .map(|p| {
                if Some(p) == skip {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.sort_unstable();
            order.shuffle(&mut shuffle_rng);
        }
        let seq: Vec<usize> = order.iter().filter_map(|&p| local[p]).collect();
        for (b, chunk) in seq.chunks(batch).enumerate() {
            let xb = x_train.select(Axis(0), chunk);
            let (l, grads) = model::loss_and_gradients(&params, xb.view(), cfg.k, cfg.lambda1)?;
            if !l.total.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss at epoch {epoch}, batch {b}"
                )));
            }
            (state, params) = adam_step(state, params, &grads)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}: {e}")))?;
        }
        let rec = record(epoch, &params)?;
        let k = key(&rec);
        if k < best_key {
            best_key = k;
            best = (epoch, params.clone());
        }
        epochs.push(rec);
    }

    Ok(TrainReport {
        config: *cfg,
        epochs,
        best_epoch: best.0,
        final_params: params,
        best_params: best.1,
    })
}
