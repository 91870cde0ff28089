//! Generalization-gap sweeps, leave-one-out stability and selection overlap.
//!
//! Every point of a sweep is an independent training run: it owns its model
//! and optimizer state, trains with `cfg.seed`, and draws any subsample or
//! deletion from the sweep's own seed. Points run in parallel and are
//! assembled in input order, so a report on a prefix of the swept values is
//! the prefix of the full report.
//!
//! Losses here are always the selector branch `ℓ^selec`, evaluated on the
//! final parameters of each run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ndarray::Axis;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::select_features;
use crate::model::{score_vector, selector_losses, topk_mask, ModelParams};
use crate::rng::{indexed_rng, Stream};
use crate::trainer::{leave_one_out_retrain, train, TrainConfig};

/// Split ratios used when `selection_overlap` re-splits for every seed.
pub const OVERLAP_RATIOS: [f64; 3] = [0.72, 0.08, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SweepKind {
    N,
    Lambda1,
    K,
    Beta,
    Overlap,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::N => "n",
            SweepKind::Lambda1 => "lambda1",
            SweepKind::K => "k",
            SweepKind::Beta => "beta",
            SweepKind::Overlap => "overlap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub swept_value: f64,
    /// `test_error - train_error`.
    pub error_diff: f64,
    /// Mean selector loss on the test rows.
    pub test_error: f64,
    /// Mean selector loss on the rows the point was trained on.
    pub train_error: f64,
    pub aux: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSummary {
    /// Kept indices per seed, aligned with the report's `seeds`.
    pub selections: Vec<Vec<usize>>,
    /// `(i, j, jaccard)` for every seed pair `i < j` (positions in `seeds`).
    pub pairwise: Vec<(usize, usize, f64)>,
    pub mean_jaccard: f64,
    /// Fraction of seeds selecting each feature.
    pub frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub kind: SweepKind,
    pub config: TrainConfig,
    /// Seed of the subsample and deletion draws (the first seed for overlap).
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub sweep: Vec<SweepPoint>,
    pub overlap: Option<OverlapSummary>,
}

impl StabilityReport {
    pub fn swept(&self) -> Vec<f64> {
        self.sweep.iter().map(|p| p.swept_value).collect()
    }

    pub fn column(&self, f: impl Fn(&SweepPoint) -> f64) -> Vec<f64> {
        self.sweep.iter().map(f).collect()
    }

    pub fn aux(&self, key: &str) -> Vec<f64> {
        self.column(|p| p.aux.get(key).copied().unwrap_or(f64::NAN))
    }

    /// `<kind>_seed<seed>`
    pub fn file_stem(&self) -> String {
        format!("{}_seed{}", self.kind, self.seed)
    }

    /// One row per point: the fixed columns, then `aux.<name>` for every aux
    /// key in sorted order (empty where a point lacks it).
    pub fn to_csv(&self) -> Result<String> {
        let keys: Vec<&String> = {
            let mut k: Vec<&String> = self.sweep.iter().flat_map(|p| p.aux.keys()).collect();
            k.sort();
            k.dedup();
            k
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "swept_value".to_string(),
            "error_diff".into(),
            "test_error".into(),
            "train_error".into(),
        ];
        header.extend(keys.iter().map(|k| format!("aux.{k}")));
        w.write_record(&header)?;
        for p in &self.sweep {
            let mut row = vec![
                format!("{:?}", p.swept_value),
                format!("{:?}", p.error_diff),
                format!("{:?}", p.test_error),
                format!("{:?}", p.train_error),
            ];
            row.extend(
                keys.iter()
                    .map(|k| p.aux.get(*k).map(|v| format!("{v:?}")).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{}.csv", self.file_stem()));
        let json_path = dir.join(format!("{}.json", self.file_stem()));
        std::fs::write(&csv_path, self.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
        std::fs::write(&json_path, self.to_json()?).map_err(|e| Error::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }
}

/// Mean selector losses of `params` on the given rows.
pub fn selector_error(params: &ModelParams, ds: &Dataset, rows: &[usize], k: usize) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Empty("selector error on zero rows".into()));
    }
    let l = selector_losses(params, ds.rows(rows).view(), k)?;
    Ok(l.sum() / l.len() as f64)
}

/// Train/test selector errors of `params` for `split`.
pub fn gap_point(
    params: &ModelParams,
    ds: &Dataset,
    split: &SplitSpec,
    k: usize,
    swept_value: f64,
) -> Result<SweepPoint> {
    let train_error = selector_error(params, ds, &split.train_idx, k)?;
    let test_error = selector_error(params, ds, &split.test_idx, k)?;
    Ok(SweepPoint {
        swept_value,
        error_diff: test_error - train_error,
        test_error,
        train_error,
        aux: BTreeMap::new(),
    })
}

fn check_increasing(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{what}: no values to sweep"
        )));
    }
    if values
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidArgument(format!(
            "{what}: values must be strictly increasing"
        )));
    }
    Ok(())
}

fn report(
    kind: SweepKind,
    cfg: &TrainConfig,
    seed: u64,
    sweep: Vec<SweepPoint>,
) -> StabilityReport {
    StabilityReport {
        kind,
        config: *cfg,
        seed,
        seeds: vec![seed],
        sweep,
        overlap: None,
    }
}

/// Trains on nested subsamples of the training rows of sizes `n_values`.
pub fn sweep_n(
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    n_values: &[usize],
    seed: u64,
) -> Result<StabilityReport> {
    let as_f: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    check_increasing(&as_f, "sweep_n")?;
    let points = n_values
        .par_iter()
        .map(|&n| {
            let sub = split.subsample(n, seed)?;
            let r = train(ds, &sub, cfg)?;
            gap_point(&r.final_params, ds, &sub, cfg.k, n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(SweepKind::N, cfg, seed, points))
}

/// `{0, 2⁻¹⁰, 2⁻⁹, …, 2⁰, 2}`
pub fn default_lambda_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..=10).rev().map(|e| 2f64.powi(-e)));
    g.push(2.0);
    g
}

/// `k` values `2..=min(8, m)`.
pub fn default_k_grid(m: usize) -> Vec<usize> {
    (2..=m.min(8)).collect()
}

/// `{500, 1000, 1500, 2000}`
pub fn default_n_grid() -> Vec<usize> {
    vec![500, 1000, 1500, 2000]
}

pub fn sweep_lambda1(
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    lambda_values: &[f64],
    seed: u64,
) -> Result<StabilityReport> {
    check_increasing(lambda_values, "sweep_lambda1")?;
    if lambda_values.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(
            "lambda1 values must be finite and >= 0".into(),
        ));
    }
    let points = lambda_values
        .par_iter()
        .map(|&lambda1| {
            let c = TrainConfig { lambda1, ..*cfg };
            let r = train(ds, split, &c)?;
            gap_point(&r.final_params, ds, split, c.k, lambda1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(SweepKind::Lambda1, cfg, seed, points))
}

/// `‖W_E W_D‖_F` and the norm of its rows at the kept features.
pub fn product_norms(params: &ModelParams, k: usize) -> Result<(f64, f64)> {
    let prod = params.end_to_end();
    let mask = topk_mask(&score_vector(params), k)?;
    let full = prod.iter().map(|v| v * v).sum::<f64>().sqrt();
    let masked = mask
        .kept_idx
        .iter()
        .map(|&j| prod.row(j).iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    Ok((full, masked))
}

/// Per-`k` training; the latent width follows `cfg.d` (or `k` when unset).
///
/// Aux keys: `frob_we_wd`, `frob_masked`.
pub fn sweep_k(
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    k_values: &[usize],
    seed: u64,
) -> Result<StabilityReport> {
    let as_f: Vec<f64> = k_values.iter().map(|&k| k as f64).collect();
    check_increasing(&as_f, "sweep_k")?;
    let points = k_values
        .par_iter()
        .map(|&k| {
            let c = TrainConfig { k, ..*cfg };
            let r = train(ds, split, &c)?;
            let mut p = gap_point(&r.final_params, ds, split, k, k as f64)?;
            let (full, masked) = product_norms(&r.final_params, k)?;
            p.aux.insert("frob_we_wd".into(), full);
            p.aux.insert("frob_masked".into(), masked);
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(SweepKind::K, cfg, seed, points))
}

/// Largest and mean absolute change of the per-sample test selector loss
/// between two parameter sets.
pub fn loss_change(
    a: &ModelParams,
    b: &ModelParams,
    ds: &Dataset,
    test_idx: &[usize],
    k: usize,
) -> Result<(f64, f64)> {
    let x = ds.rows(test_idx);
    let la = selector_losses(a, x.view(), k)?;
    let lb = selector_losses(b, x.view(), k)?;
    let d = (&la - &lb).mapv(f64::abs);
    let max = d.iter().copied().fold(0.0, f64::max);
    let mean = d.mean_axis(Axis(0)).map(|v| v.into_scalar()).unwrap_or(0.0);
    Ok((max, mean))
}

/// Empirical uniform stability.
///
/// For each `n`, trains on the nested subsample of size `n`, then retrains
/// without each of `deletions_per_n` distinct random training rows. The
/// estimate is the largest absolute change of the per-sample test selector
/// loss over test samples and deletions.
///
/// Aux keys: `beta` (the max), `beta_mean` (mean over test samples and
/// deletions).
pub fn estimate_beta(
    ds: &Dataset,
    split: &SplitSpec,
    cfg: &TrainConfig,
    n_values: &[usize],
    deletions_per_n: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if deletions_per_n == 0 {
        return Err(Error::InvalidArgument(
            "deletions_per_n must be >= 1".into(),
        ));
    }
    let as_f: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    check_increasing(&as_f, "estimate_beta")?;
    if split.test_idx.is_empty() {
        return Err(Error::Empty("estimate_beta needs test rows".into()));
    }
    if let Some(&n) = n_values.iter().find(|&&n| n < deletions_per_n.max(2)) {
        return Err(Error::InvalidArgument(format!(
            "n = {n} is too small for {deletions_per_n} deletions"
        )));
    }
    let points = n_values
        .par_iter()
        .map(|&n| {
            let sub = split.subsample(n, seed)?;
            let base = train(ds, &sub, cfg)?;
            let mut rng = indexed_rng(seed, Stream::Deletion, n as u64);
            let deleted: Vec<usize> = index::sample(&mut rng, n, deletions_per_n)
                .into_iter()
                .map(|p| sub.train_idx[p])
                .collect();
            let changes = deleted
                .par_iter()
                .map(|&j| {
                    let loo = leave_one_out_retrain(ds, &sub, cfg, j)?;
                    loss_change(
                        &base.final_params,
                        &loo.final_params,
                        ds,
                        &sub.test_idx,
                        cfg.k,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let beta = changes.iter().map(|c| c.0).fold(0.0, f64::max);
            let beta_mean = changes.iter().map(|c| c.1).sum::<f64>() / changes.len() as f64;
            let mut p = gap_point(&base.final_params, ds, &sub, cfg.k, n as f64)?;
            p.aux.insert("beta".into(), beta);
            p.aux.insert("beta_mean".into(), beta_mean);
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(SweepKind::Beta, cfg, seed, points))
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets overlap fully.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Re-splits (72:8:20), re-standardizes on the new train rows, trains with
/// the seed as both split and training seed, and compares the selections.
///
/// One sweep point per seed, with `swept_value` its position in `seeds` and
/// the seed itself in `aux.seed`.
pub fn selection_overlap(
    ds: &Dataset,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<StabilityReport> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument(
            "selection_overlap needs at least 2 seeds".into(),
        ));
    }
    let runs = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let sp = SplitSpec::new(ds.n_total(), OVERLAP_RATIOS, s)?;
            let local = standardize(ds, &sp)?;
            let c = TrainConfig { seed: s, ..*cfg };
            let r = train(&local, &sp, &c)?;
            let sel = select_features(&r.final_params, c.k, format!("seed{s}"))?;
            let mut p = gap_point(&r.final_params, &local, &sp, c.k, i as f64)?;
            p.aux.insert("seed".into(), s as f64);
            Ok((p, sel.kept_idx))
        })
        .collect::<Result<Vec<_>>>()?;
    let (sweep, selections): (Vec<_>, Vec<_>) = runs.into_iter().unzip();

    let mut pairwise = Vec::new();
    for i in 0..selections.len() {
        for j in i + 1..selections.len() {
            pairwise.push((i, j, jaccard(&selections[i], &selections[j])));
        }
    }
    let mean_jaccard = pairwise.iter().map(|p| p.2).sum::<f64>() / pairwise.len() as f64;
    let mut frequency = vec![0.0; ds.n_features()];
    for sel in &selections {
        for &j in sel {
            frequency[j] += 1.0 / selections.len() as f64;
        }
    }
    Ok(StabilityReport {
        kind: SweepKind::Overlap,
        config: *cfg,
        seed: seeds[0],
        seeds: seeds.to_vec(),
        sweep,
        overlap: Some(OverlapSummary {
            selections,
            pairwise,
            mean_jaccard,
            frequency,
        }),
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks). `NaN` when either
/// side is constant or the lengths differ or are below 2.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}
