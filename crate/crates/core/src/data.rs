//! Datasets, seeded splits, train-fit standardization and subsampling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Per-feature affine map `(v - mean) / scale` fitted on the training split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub scale: f64,
}

/// Sample matrix (`n_total × m`, samples in rows) with optional labels.
///
/// Labels are only ever consumed by the downstream classifier; the selector
/// never sees them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub feature_names: Option<Vec<String>>,
    /// Class indices in `[0, n_classes)`.
    pub labels: Option<Vec<usize>>,
    /// Original label strings, indexed by class id.
    pub class_names: Option<Vec<String>>,
    pub standardization: Option<Vec<Standardizer>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>) -> Result<Self> {
        if let Some(((r, c), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry ({r}, {c})")));
        }
        Ok(Dataset {
            x,
            feature_names: None,
            labels: None,
            class_names: None,
            standardization: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_total() {
            return Err(Error::Shape(format!(
                "{} labels for {} samples",
                labels.len(),
                self.n_total()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_total(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max().map(|&c| c + 1))
            .unwrap_or(0)
    }

    /// Copies the given rows into a new matrix, in the given order.
    pub fn rows(&self, idx: &[usize]) -> Array2<f64> {
        self.x.select(Axis(0), idx)
    }

    pub fn labels_of(&self, idx: &[usize]) -> Option<Vec<usize>> {
        self.labels
            .as_ref()
            .map(|l| idx.iter().map(|&i| l[i]).collect())
    }
}

/// Loads a comma-separated file of reals.
///
/// When `label_column` is given, that column is removed from the feature
/// matrix and its values become class labels. Label values are mapped to class
/// ids in sorted order (numerically when every label parses as an integer,
/// lexicographically otherwise). Without a header, columns are named by their
/// zero-based position.
pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<&str>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header: Option<Vec<String>> = if has_header {
        Some(reader.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    }

    let arity = header.as_ref().map_or(records[0].len(), Vec::len);
    let names: Vec<String> = header.unwrap_or_else(|| (0..arity).map(|i| i.to_string()).collect());

    let label_pos =
        match label_column {
            Some(name) => Some(names.iter().position(|n| n == name).ok_or_else(|| {
                Error::InvalidArgument(format!("label column `{name}` not found"))
            })?),
            None => None,
        };

    let m = arity - usize::from(label_pos.is_some());
    if m == 0 {
        return Err(Error::Empty("no feature columns".into()));
    }
    let mut values = Vec::with_capacity(records.len() * m);
    let mut raw_labels = Vec::new();
    let first_line = if has_header { 2 } else { 1 };
    for (r, rec) in records.iter().enumerate() {
        let line = rec.position().map_or(r + first_line, |p| p.line() as usize);
        if rec.len() != arity {
            return Err(Error::Ragged {
                row: line,
                expected: arity,
                found: rec.len(),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            if Some(c) == label_pos {
                raw_labels.push(field.to_owned());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: line,
                column: names[c].clone(),
                message: format!("`{field}` is not a real number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: names[c].clone(),
                    message: format!("`{field}` is not finite"),
                });
            }
            values.push(v);
        }
    }

    let x = Array2::from_shape_vec((records.len(), m), values)
        .map_err(|e| Error::Shape(e.to_string()))?;
    let mut ds = Dataset::new(x)?;
    ds.feature_names = Some(
        names
            .into_iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != label_pos)
            .map(|(_, n)| n)
            .collect(),
    );
    if label_pos.is_some() {
        let (labels, classes) = encode_labels(&raw_labels);
        ds.labels = Some(labels);
        ds.class_names = Some(classes);
    }
    Ok(ds)
}

fn encode_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let numeric: Option<Vec<i64>> = raw.iter().map(|s| s.parse().ok()).collect();
    let classes: Vec<String> = match numeric {
        Some(nums) => {
            let mut u: Vec<i64> = nums;
            u.sort_unstable();
            u.dedup();
            u.into_iter().map(|v| v.to_string()).collect()
        }
        None => {
            let mut u: Vec<String> = raw.to_vec();
            u.sort();
            u.dedup();
            u
        }
    };
    let lookup: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let labels = raw
        .iter()
        .map(|s| {
            // integer labels like "01" normalise through the parsed value
            let key = s
                .parse::<i64>()
                .map(|v| v.to_string())
                .unwrap_or_else(|_| s.clone());
            lookup[key.as_str()]
        })
        .collect();
    (labels, classes)
}

/// Writes the matrix (and labels, as a trailing `label` column) as CSV.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = match &ds.feature_names {
        Some(n) => n.clone(),
        None => (0..ds.n_features()).map(|i| format!("f{i}")).collect(),
    };
    if ds.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, row) in ds.x.outer_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = &ds.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        })
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" | "validation" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

/// Disjoint train/validation/test row indices drawn from a seeded permutation.
///
/// Index lists are kept sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub ratios: [f64; 3],
    pub seed: u64,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    seed: u64,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl SplitSpec {
    /// Splits `0..n_total` by `ratios` (train, val, test).
    ///
    /// Validation and test sizes are `floor(n·ratio)`; the remainder goes to
    /// train.
    pub fn new(n_total: usize, ratios: [f64; 3], seed: u64) -> Result<Self> {
        if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ratios must be non-negative: {ratios:?}"
            )));
        }
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "ratios sum to {sum}, expected 1"
            )));
        }
        if n_total < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 samples, got {n_total}"
            )));
        }
        let floor = |r: f64| ((n_total as f64) * r + 1e-9).floor() as usize;
        let n_val = floor(ratios[1]);
        let n_test = floor(ratios[2]);
        let n_train = n_total - n_val - n_test;
        for (name, size, r) in [
            ("train", n_train, ratios[0]),
            ("val", n_val, ratios[1]),
            ("test", n_test, ratios[2]),
        ] {
            if r > 0.0 && size == 0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} split is empty with ratio {r} and {n_total} samples"
                )));
            }
        }

        let mut perm: Vec<usize> = (0..n_total).collect();
        perm.shuffle(&mut stream_rng(seed, Stream::Split));
        let mut train_idx = perm[..n_train].to_vec();
        let mut val_idx = perm[n_train..n_train + n_val].to_vec();
        let mut test_idx = perm[n_train + n_val..].to_vec();
        train_idx.sort_unstable();
        val_idx.sort_unstable();
        test_idx.sort_unstable();
        Ok(SplitSpec {
            ratios,
            seed,
            train_idx,
            val_idx,
            test_idx,
        })
    }

    pub fn indices(&self, which: SplitName) -> &[usize] {
        match which {
            SplitName::Train => &self.train_idx,
            SplitName::Val => &self.val_idx,
            SplitName::Test => &self.test_idx,
        }
    }

    /// Seeded size-`n` subset of the training rows; validation and test are
    /// untouched.
    ///
    /// Subsets are nested: under one seed, the subset of size `n₂` is
    /// contained in the subset of size `n₁ ≥ n₂`.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<SplitSpec> {
        if n > self.train_idx.len() {
            return Err(Error::InvalidArgument(format!(
                "subsample size {n} exceeds train size {}",
                self.train_idx.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "subsample size must be positive".into(),
            ));
        }
        let mut order = self.train_idx.clone();
        order.shuffle(&mut stream_rng(seed, Stream::Subsample));
        let mut train_idx = order[..n].to_vec();
        train_idx.sort_unstable();
        Ok(SplitSpec {
            train_idx,
            ..self.clone()
        })
    }

    /// Copy with one training row removed.
    pub fn without_train_row(&self, row: usize) -> Result<SplitSpec> {
        let pos = self
            .train_idx
            .iter()
            .position(|&r| r == row)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("row {row} is not in the train split"))
            })?;
        let mut out = self.clone();
        out.train_idx.remove(pos);
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SplitFile {
            seed: self.seed,
            train: self.train_idx.clone(),
            val: self.val_idx.clone(),
            test: self.test_idx.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: SplitFile = serde_json::from_str(s)?;
        let total = (f.train.len() + f.val.len() + f.test.len()) as f64;
        if total == 0.0 {
            return Err(Error::Empty("split file lists no rows".into()));
        }
        Ok(SplitSpec {
            ratios: [
                f.train.len() as f64 / total,
                f.val.len() as f64 / total,
                f.test.len() as f64 / total,
            ],
            seed: f.seed,
            train_idx: f.train,
            val_idx: f.val,
            test_idx: f.test,
        })
    }
}

/// Convenience wrapper for [`SplitSpec::new`].
pub fn split(ds: &Dataset, ratios: [f64; 3], seed: u64) -> Result<SplitSpec> {
    SplitSpec::new(ds.n_total(), ratios, seed)
}

/// Standardizes every column with mean and (population) standard deviation
/// computed on the training rows only.
///
/// Constant training columns keep scale 1 and are only centered.
pub fn standardize(ds: &Dataset, split: &SplitSpec) -> Result<Dataset> {
    if split.train_idx.is_empty() {
        return Err(Error::Empty(
            "standardize needs a non-empty train split".into(),
        ));
    }
    let train = ds.rows(&split.train_idx);
    let n = train.nrows() as f64;
    let params: Vec<Standardizer> = train
        .axis_iter(Axis(1))
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            let scale = if sd > 1e-12 * mean.abs().max(1.0) {
                sd
            } else {
                1.0
            };
            Standardizer { mean, scale }
        })
        .collect();
    let mut out = ds.clone();
    apply_standardization(&mut out.x, &params);
    out.standardization = Some(params);
    Ok(out)
}

/// Applies stored `(mean, scale)` pairs column-wise in place.
pub fn apply_standardization(x: &mut Array2<f64>, params: &[Standardizer]) {
    for (mut col, p) in x.axis_iter_mut(Axis(1)).zip(params) {
        col.mapv_inplace(|v| (v - p.mean) / p.scale);
    }
}

/// Parameters of the planted-feature synthetic benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    pub informative: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            m: 10,
            n: 600,
            informative: 5,
            noise: 0.05,
            seed: 0,
        }
    }
}

/// Planted-feature dataset: `informative` independent standard-normal columns
/// placed at random positions, and every other column a unit-norm mixture of
/// all informative columns plus Gaussian noise of standard deviation `noise`.
///
/// Mixing weights have magnitudes in `[0.5, 1]` with random signs, so every
/// derived column depends on every informative one. Replacing an informative
/// column by a derived one then amplifies noise in the reconstruction, which
/// makes the planted set the unique best `informative`-subset for the linear
/// reconstruction objective.
///
/// Labels (two classes) are the sign of the sum of the informative columns.
/// Returns the dataset and the sorted planted column indices.
pub fn gen_synth(spec: &SynthSpec) -> Result<(Dataset, Vec<usize>)> {
    let SynthSpec {
        m,
        n,
        informative,
        noise,
        seed,
    } = *spec;
    if informative == 0 || informative > m {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= informative <= m, got informative={informative}, m={m}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise must be >= 0, got {noise}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Synth);

    let mut columns: Vec<usize> = (0..m).collect();
    columns.shuffle(&mut rng);
    let mut planted = columns[..informative].to_vec();
    planted.sort_unstable();
    let derived: Vec<usize> = (0..m).filter(|c| !planted.contains(c)).collect();

    let magnitude = Uniform::new_inclusive(0.5, 1.0).expect("valid range");
    let mixing: Vec<Array1<f64>> = derived
        .iter()
        .map(|_| {
            let a: Array1<f64> = (0..informative)
                .map(|_| {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    sign * magnitude.sample(&mut rng)
                })
                .collect();
            let norm = a.dot(&a).sqrt();
            a / norm
        })
        .collect();

    let mut x = Array2::<f64>::zeros((n, m));
    let mut labels = Vec::with_capacity(n);
    let mut z = Array1::<f64>::zeros(informative);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for (p, &c) in planted.iter().enumerate() {
            x[[i, c]] = z[p];
        }
        for (a, &c) in mixing.iter().zip(&derived) {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[[i, c]] = a.dot(&z) + noise * e;
        }
        labels.push(usize::from(z.sum() > 0.0));
    }

    let mut ds = Dataset::new(x)?.with_labels(labels)?;
    ds.feature_names = Some((0..m).map(|i| format!("f{i}")).collect());
    ds.class_names = Some(vec!["0".into(), "1".into()]);
    Ok((ds, planted))
}
