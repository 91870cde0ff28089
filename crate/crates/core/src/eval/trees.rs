//! Extremely randomized trees (classification).
//!
//! At each node, `k_candidates` features are drawn without replacement among
//! the features that are non-constant at that node. Each gets one cut point
//! drawn uniformly in its node range, and the cut with the largest Gini
//! decrease is kept. Every tree sees the full training sample (no bootstrap)
//! and grows until its nodes are pure, constant, or smaller than `min_split`.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{indexed_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtraTreesParams {
    pub n_trees: usize,
    /// `None` means `⌈√n_features⌉`.
    pub k_candidates: Option<usize>,
    pub min_split: usize,
    pub seed: u64,
}

impl Default for ExtraTreesParams {
    fn default() -> Self {
        ExtraTreesParams {
            n_trees: 50,
            k_candidates: None,
            min_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Training samples per class that reached this leaf.
        counts: Vec<usize>,
    },
    Split {
        /// Column of the selected-feature matrix.
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node array; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_counts(&self, row: ArrayView1<f64>) -> &[usize] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn predict_one(&self, row: ArrayView1<f64>) -> usize {
        argmax(self.leaf_counts(row))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraTreesModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub n_features: usize,
    pub params: ExtraTreesParams,
}

impl ExtraTreesModel {
    /// Majority vote of the trees; ties go to the lower class id.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.n_features {
            return Err(Error::Shape(format!(
                "classifier expects {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        Ok(x.outer_iter()
            .map(|row| {
                let mut votes = vec![0usize; self.n_classes];
                for t in &self.trees {
                    votes[t.predict_one(row)] += 1;
                }
                argmax(&votes)
            })
            .collect())
    }
}

fn argmax(v: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in v.iter().enumerate() {
        if c > v[best] {
            best = i;
        }
    }
    best
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    n_classes: usize,
    k_candidates: usize,
    min_split: usize,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn grow(&self, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = Vec::new();
        let root: Vec<usize> = (0..self.x.nrows()).collect();
        // (node slot, sample indices)
        let mut stack = vec![(0usize, root)];
        nodes.push(Node::Leaf { counts: vec![] });
        while let Some((slot, idx)) = stack.pop() {
            let counts = self.counts(&idx);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || idx.len() < self.min_split {
                nodes[slot] = Node::Leaf { counts };
                continue;
            }
            match self.best_random_split(&idx, &counts, rng) {
                None => nodes[slot] = Node::Leaf { counts },
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = idx
                        .iter()
                        .partition(|&&i| self.x[[i, feature]] <= threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { counts: vec![] });
                    let right = nodes.len();
                    nodes.push(Node::Leaf { counts: vec![] });
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
        Tree { nodes }
    }

    fn best_random_split(
        &self,
        idx: &[usize],
        counts: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<(usize, f64)> {
        let ranges: Vec<(usize, f64, f64)> = (0..self.x.ncols())
            .filter_map(|f| {
                let (lo, hi) =
                    idx.iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            let v = self.x[[i, f]];
                            (lo.min(v), hi.max(v))
                        });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return None;
        }
        let draws = self.k_candidates.min(ranges.len());
        let parent = gini(counts, idx.len());
        let mut best: Option<(f64, usize, f64)> = None;
        for pick in index::sample(rng, ranges.len(), draws) {
            let (f, lo, hi) = ranges[pick];
            let thr = rng.random_range(lo..hi);
            let mut left = vec![0usize; self.n_classes];
            let mut n_left = 0;
            for &i in idx {
                if self.x[[i, f]] <= thr {
                    left[self.y[i]] += 1;
                    n_left += 1;
                }
            }
            let n_right = idx.len() - n_left;
            if n_left == 0 || n_right == 0 {
                continue;
            }
            let right: Vec<usize> = counts.iter().zip(&left).map(|(a, b)| a - b).collect();
            let n = idx.len() as f64;
            let gain = parent
                - (n_left as f64 / n) * gini(&left, n_left)
                - (n_right as f64 / n) * gini(&right, n_right);
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, thr));
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Fits `n_trees` independent trees; tree `i` draws from its own stream of
/// the master seed, so the ensemble does not depend on thread scheduling.
pub fn extratrees_fit(
    x_sel: ArrayView2<f64>,
    labels: &[usize],
    params: &ExtraTreesParams,
) -> Result<ExtraTreesModel> {
    if x_sel.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x_sel.nrows(),
            labels.len()
        )));
    }
    if x_sel.ncols() == 0 {
        return Err(Error::InvalidArgument("no features to split on".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be positive".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut seen = vec![false; n_classes];
    for &l in labels {
        seen[l] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::InvalidArgument(
            "training labels contain a single class".into(),
        ));
    }
    let k_candidates = params
        .k_candidates
        .unwrap_or_else(|| (x_sel.ncols() as f64).sqrt().ceil() as usize)
        .max(1);
    let grower = Grower {
        x: x_sel,
        y: labels,
        n_classes,
        k_candidates,
        min_split: params.min_split.max(2),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grower.grow(&mut indexed_rng(params.seed, Stream::Trees, t as u64)))
        .collect();
    Ok(ExtraTreesModel {
        trees,
        n_classes,
        n_features: x_sel.ncols(),
        params: *params,
    })
}

/// Fraction of majority-vote predictions equal to `labels`.
pub fn extratrees_accuracy(
    model: &ExtraTreesModel,
    x_sel: ArrayView2<f64>,
    labels: &[usize],
) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("accuracy on zero samples".into()));
    }
    let pred = model.predict(x_sel)?;
    if pred.len() != labels.len() {
        return Err(Error::Shape("prediction/label count mismatch".into()));
    }
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}
