//! The `ufs` command line.
//!
//! Every subcommand reads an optional JSON config (`--config`), lets a few
//! flags override it, writes its outputs into one directory, and records the
//! fully resolved configuration, with the source of every value, in
//! `resolved_config.json`.
//!
//! Output directory precedence: `--out`, then `UFS_OUT_DIR`, then the
//! config's `out_dir`, then `./ufs_out`.
//!
//! Exit codes: 0 on success, 2 for a bad command line or config, 1 for a
//! failure while running. Failures print one JSON line on stderr:
//! `{"error":"config"|"runtime","kind":...,"message":...}`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{
    gen_synth, load_csv, split, standardize, write_csv, Dataset, SplitSpec, SynthSpec,
};
use crate::error::Error;
use crate::eval::{
    brute_force_best_subset, extratrees_accuracy, extratrees_fit, ols_error, ols_fit,
    select_features, ExtraTreesParams, Metrics, DEFAULT_RIDGE_EPS,
};
use crate::model::{self, ModelParams, ScorerMap};
use crate::optim::DEFAULT_LR;
use crate::stability::{
    default_k_grid, default_lambda_grid, default_n_grid, estimate_beta, selection_overlap, sweep_k,
    sweep_lambda1, sweep_n, StabilityReport,
};
use crate::trainer::{train, TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LAMBDA1};
use crate::SplitName;

pub const OUT_DIR_ENV: &str = "UFS_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "ufs_out";

#[derive(Debug, Parser)]
#[command(
    name = "ufs",
    version,
    about = "Unsupervised feature selection with a scorer/selector autoencoder"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on a dataset; writes params, report and selection.
    Train(Flags),
    /// Top-k selection from a params file.
    Select(Flags),
    /// Losses, OLS reconstruction error and classifier accuracy of a params file.
    Eval(Flags),
    /// Generalization gap versus training-set size.
    SweepN(Flags),
    /// Generalization gap versus λ₁.
    SweepLambda(Flags),
    /// Generalization gap and weight norms versus k.
    SweepK(Flags),
    /// Leave-one-out stability versus training-set size.
    Beta(Flags),
    /// Selection overlap across seeds.
    Overlap(Flags),
    /// Exhaustive best k-subset for linear reconstruction.
    Oracle(Flags),
    /// Write the planted-feature synthetic dataset.
    GenSynth(Flags),
}

#[derive(Debug, Args, Default)]
struct Flags {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Training seed (the generator seed for gen-synth).
    #[arg(long)]
    seed: Option<u64>,
    /// Params file for select/eval.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// gen-synth: number of features.
    #[arg(long)]
    m: Option<usize>,
    /// gen-synth: number of samples.
    #[arg(long)]
    n: Option<usize>,
    /// gen-synth: number of informative features.
    #[arg(long)]
    informative: Option<usize>,
    /// gen-synth: noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,
}

/// Config file contents. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub has_header: Option<bool>,
    pub label_column: Option<String>,
    pub standardize: Option<bool>,
    pub split_ratios: Option<[f64; 3]>,
    pub split_seed: Option<u64>,

    pub lambda1: Option<f64>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub phi: Option<ScorerMap>,
    pub seed: Option<u64>,
    pub shuffle: Option<bool>,

    pub ols: Option<bool>,
    pub classify: Option<bool>,
    pub n_trees: Option<usize>,
    pub params: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,

    pub n_values: Option<Vec<usize>>,
    pub lambda_values: Option<Vec<f64>>,
    pub k_values: Option<Vec<usize>>,
    pub deletions_per_n: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub sweep_seed: Option<u64>,

    pub synth_m: Option<usize>,
    pub synth_n: Option<usize>,
    pub synth_informative: Option<usize>,
    pub synth_noise: Option<f64>,
    pub synth_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    User,
}

/// Values after applying flags, config and defaults. `None` marks a value
/// with no default that the command did not need.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub dataset: Option<PathBuf>,
    pub has_header: bool,
    pub label_column: Option<String>,
    pub standardize: bool,
    pub split_ratios: [f64; 3],
    pub split_seed: u64,
    pub lambda1: f64,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub phi: ScorerMap,
    pub seed: u64,
    pub shuffle: bool,
    pub ols: bool,
    pub classify: bool,
    pub n_trees: usize,
    pub params: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub n_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
    pub k_values: Option<Vec<usize>>,
    pub deletions_per_n: usize,
    pub seeds: Vec<u64>,
    pub sweep_seed: u64,
    pub synth_m: usize,
    pub synth_n: usize,
    pub synth_informative: usize,
    pub synth_noise: f64,
    pub synth_seed: u64,
}

#[derive(Default)]
struct Sources(BTreeMap<&'static str, Source>);

impl Sources {
    fn pick<T>(&mut self, key: &'static str, user: Option<T>, default: T) -> T {
        match user {
            Some(v) => {
                self.0.insert(key, Source::User);
                v
            }
            None => {
                self.0.insert(key, Source::Default);
                default
            }
        }
    }

    fn opt<T>(&mut self, key: &'static str, user: Option<T>) -> Option<T> {
        self.0.insert(
            key,
            if user.is_some() {
                Source::User
            } else {
                Source::Default
            },
        );
        user
    }
}

/// Failure with its exit code.
#[derive(Debug)]
enum Failure {
    Config { kind: &'static str, message: String },
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_err(kind: &'static str, message: impl Into<String>) -> Failure {
    Failure::Config {
        kind,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses a config file, naming the offending key on unknown fields.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, (String, Option<String>)> {
    serde_json::from_str::<RunConfig>(text).map_err(|e| {
        let msg = e.to_string();
        let key = msg
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
            .map(str::to_string);
        (msg, key)
    })
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        config_err(
            "config_io",
            format!("cannot read config {}: {e}", path.display()),
        )
    })?;
    parse_config(&text).map_err(|(msg, key)| match key {
        Some(k) => config_err("unknown_key", format!("unknown config key \"{k}\": {msg}")),
        None => config_err("config_parse", msg),
    })
}

fn resolve(flags: &Flags, cfg: RunConfig, gen_synth: bool) -> (Resolved, Sources) {
    let mut s = Sources::default();
    let out_user = flags
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or(cfg.out_dir);
    let (seed_flag, synth_seed_flag) = if gen_synth {
        (None, flags.seed)
    } else {
        (flags.seed, None)
    };
    let r = Resolved {
        dataset: s.opt("dataset", flags.data.clone().or(cfg.dataset)),
        has_header: s.pick("has_header", cfg.has_header, true),
        label_column: s.opt(
            "label_column",
            flags.label_column.clone().or(cfg.label_column),
        ),
        standardize: s.pick("standardize", cfg.standardize, true),
        split_ratios: s.pick("split_ratios", cfg.split_ratios, [0.72, 0.08, 0.2]),
        split_seed: s.pick("split_seed", cfg.split_seed, 0),
        lambda1: s.pick("lambda1", cfg.lambda1, DEFAULT_LAMBDA1),
        k: s.opt("k", flags.k.or(cfg.k)),
        d: s.opt("d", cfg.d),
        epochs: s.pick("epochs", cfg.epochs, DEFAULT_EPOCHS),
        batch_size: s.pick("batch_size", cfg.batch_size, DEFAULT_BATCH_SIZE),
        lr: s.pick("lr", cfg.lr, DEFAULT_LR),
        phi: s.pick("phi", cfg.phi, ScorerMap::Square),
        seed: s.pick("seed", seed_flag.or(cfg.seed), 0),
        shuffle: s.pick("shuffle", cfg.shuffle, true),
        ols: s.pick("ols", cfg.ols, true),
        classify: s.pick("classify", cfg.classify, true),
        n_trees: s.pick("n_trees", cfg.n_trees, ExtraTreesParams::default().n_trees),
        params: s.opt("params", flags.params.clone().or(cfg.params)),
        out_dir: s.pick("out_dir", out_user, PathBuf::from(DEFAULT_OUT_DIR)),
        n_values: s.pick("n_values", cfg.n_values, default_n_grid()),
        lambda_values: s.pick("lambda_values", cfg.lambda_values, default_lambda_grid()),
        k_values: s.opt("k_values", cfg.k_values),
        deletions_per_n: s.pick("deletions_per_n", cfg.deletions_per_n, 3),
        seeds: s.pick("seeds", cfg.seeds, (0..10).collect()),
        sweep_seed: s.pick("sweep_seed", cfg.sweep_seed, 0),
        synth_m: s.pick("synth_m", flags.m.or(cfg.synth_m), SynthSpec::default().m),
        synth_n: s.pick("synth_n", flags.n.or(cfg.synth_n), SynthSpec::default().n),
        synth_informative: s.pick(
            "synth_informative",
            flags.informative.or(cfg.synth_informative),
            SynthSpec::default().informative,
        ),
        synth_noise: s.pick(
            "synth_noise",
            flags.noise.or(cfg.synth_noise),
            SynthSpec::default().noise,
        ),
        synth_seed: s.pick("synth_seed", synth_seed_flag.or(cfg.synth_seed), 0),
    };
    (r, s)
}

impl Resolved {
    fn need_k(&self) -> CliResult<usize> {
        self.k
            .ok_or_else(|| config_err("missing_key", "missing required key \"k\""))
    }

    fn train_config(&self, k: usize) -> TrainConfig {
        TrainConfig {
            lambda1: self.lambda1,
            k,
            d: self.d,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            phi: self.phi,
            seed: self.seed,
            shuffle: self.shuffle,
        }
    }

    fn checked_train_config(&self, k: usize, m: usize) -> CliResult<TrainConfig> {
        let c = self.train_config(k);
        c.validate(m)
            .map_err(|e| config_err("invalid_value", e.to_string()))?;
        Ok(c)
    }

    fn raw_dataset(&self) -> CliResult<Dataset> {
        let path = self
            .dataset
            .as_ref()
            .ok_or_else(|| config_err("missing_key", "missing required key \"dataset\""))?;
        Ok(load_csv(
            path,
            self.has_header,
            self.label_column.as_deref(),
        )?)
    }

    /// Loaded dataset, its split, and the (optionally) standardized copy.
    fn prepared(&self) -> CliResult<(Dataset, SplitSpec)> {
        let raw = self.raw_dataset()?;
        let sp = split(&raw, self.split_ratios, self.split_seed)
            .map_err(|e| config_err("invalid_value", e.to_string()))?;
        let ds = if self.standardize {
            standardize(&raw, &sp)?
        } else {
            raw
        };
        Ok((ds, sp))
    }

    fn dataset_name(&self) -> String {
        self.dataset
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    fn params_path(&self) -> PathBuf {
        self.params
            .clone()
            .unwrap_or_else(|| self.out_dir.join("params.json"))
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn report(&mut self, r: &StabilityReport) -> CliResult<()> {
        let (c, j) = r.write(&self.dir)?;
        for p in [c, j] {
            self.written.push(
                p.file_name()
                    .expect("report file has a name")
                    .to_string_lossy()
                    .into_owned(),
            );
        }
        Ok(())
    }
}

fn load_params(path: &Path) -> CliResult<ModelParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(ModelParams::from_json(&text)?)
}

fn cmd_train(r: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let k = r.need_k()?;
    let (ds, sp) = r.prepared()?;
    let cfg = r.checked_train_config(k, ds.n_features())?;
    let report = train(&ds, &sp, &cfg)?;
    out.write("split.json", &(sp.to_json()? + "\n"))?;
    out.write("params.json", &(report.final_params.to_json()? + "\n"))?;
    out.write("best_params.json", &(report.best_params.to_json()? + "\n"))?;
    out.write("report.jsonl", &report.to_jsonl()?)?;
    let sel = select_features(&report.final_params, k, "params.json")?;
    out.json("selection.json", &sel)
}

fn cmd_select(r: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let k = r.need_k()?;
    let path = r.params_path();
    let params = load_params(&path)?;
    if k > params.n_features() {
        return Err(config_err(
            "invalid_value",
            format!("k = {k} exceeds {} features", params.n_features()),
        ));
    }
    let source = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.json("selection.json", &select_features(&params, k, source)?)
}

fn cmd_eval(r: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let k = r.need_k()?;
    let (ds, sp) = r.prepared()?;
    let params = load_params(&r.params_path())?;
    if params.n_features() != ds.n_features() {
        return Err(Error::Shape(format!(
            "params have {} features, dataset has {}",
            params.n_features(),
            ds.n_features()
        ))
        .into());
    }
    r.checked_train_config(k, ds.n_features())?;
    let mut losses = BTreeMap::new();
    for which in [SplitName::Train, SplitName::Val, SplitName::Test] {
        let idx = sp.indices(which);
        let l = if idx.is_empty() {
            None
        } else {
            Some(model::loss(&params, ds.rows(idx).view(), k, r.lambda1)?)
        };
        losses.insert(which.to_string(), l);
    }
    let sel = select_features(&params, k, "params")?;
    let recon_mse = if r.ols {
        let ols = ols_fit(&ds, &sp, &sel, DEFAULT_RIDGE_EPS)?;
        Some(ols_error(&ols, &ds, &sp, SplitName::Test)?)
    } else {
        None
    };
    let accuracy = match (&ds.labels, r.classify) {
        (Some(_), true) => {
            let tr = ds.labels_of(&sp.train_idx).expect("labels present");
            let te = ds.labels_of(&sp.test_idx).expect("labels present");
            let xtr = ds
                .rows(&sp.train_idx)
                .select(ndarray::Axis(1), &sel.kept_idx);
            let xte = ds
                .rows(&sp.test_idx)
                .select(ndarray::Axis(1), &sel.kept_idx);
            let p = ExtraTreesParams {
                n_trees: r.n_trees,
                seed: r.seed,
                ..ExtraTreesParams::default()
            };
            let model = extratrees_fit(xtr.view(), &tr, &p)?;
            Some(extratrees_accuracy(&model, xte.view(), &te)?)
        }
        _ => None,
    };
    out.json(
        "metrics.json",
        &Metrics {
            dataset: r.dataset_name(),
            k,
            phi: params.phi,
            recon_mse,
            accuracy,
        },
    )?;
    out.json("losses.json", &losses)
}

fn cmd_oracle(r: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let k = r.need_k()?;
    let (ds, sp) = r.prepared()?;
    let res = brute_force_best_subset(&ds, &sp, k)?;
    out.json(
        "oracle.json",
        &json!({"k": k, "best_idx": res.best_idx, "best_err": res.best_err, "n_subsets": res.n_subsets}),
    )
}

fn cmd_gen_synth(r: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let spec = SynthSpec {
        m: r.synth_m,
        n: r.synth_n,
        informative: r.synth_informative,
        noise: r.synth_noise,
        seed: r.synth_seed,
    };
    let (ds, planted) = gen_synth(&spec).map_err(|e| config_err("invalid_value", e.to_string()))?;
    let path = out.dir.join("synth.csv");
    write_csv(&ds, &path)?;
    out.written.push("synth.csv".into());
    out.json(
        "planted.json",
        &json!({
            "planted": planted,
            "m": spec.m,
            "n": spec.n,
            "informative": spec.informative,
            "noise": spec.noise,
            "seed": spec.seed,
        }),
    )
}

fn cmd_sweep(which: &Command, r: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let bad = |e: Error| config_err("invalid_value", e.to_string());
    let report = match which {
        Command::Overlap(_) => {
            let k = r.need_k()?;
            let ds = r.raw_dataset()?;
            let cfg = r.checked_train_config(k, ds.n_features())?;
            selection_overlap(&ds, &cfg, &r.seeds)?
        }
        _ => {
            let (ds, sp) = r.prepared()?;
            let m = ds.n_features();
            match which {
                Command::SweepK(_) => {
                    let ks = r.k_values.clone().unwrap_or_else(|| default_k_grid(m));
                    let first = *ks
                        .first()
                        .ok_or_else(|| config_err("invalid_value", "k_values is empty"))?;
                    for &k in &ks {
                        r.checked_train_config(k, m)?;
                    }
                    sweep_k(&ds, &sp, &r.train_config(first), &ks, r.sweep_seed)?
                }
                Command::SweepN(_) => {
                    let cfg = r.checked_train_config(r.need_k()?, m)?;
                    sweep_n(&ds, &sp, &cfg, &r.n_values, r.sweep_seed).map_err(bad)?
                }
                Command::SweepLambda(_) => {
                    let cfg = r.checked_train_config(r.need_k()?, m)?;
                    sweep_lambda1(&ds, &sp, &cfg, &r.lambda_values, r.sweep_seed).map_err(bad)?
                }
                Command::Beta(_) => {
                    let cfg = r.checked_train_config(r.need_k()?, m)?;
                    estimate_beta(&ds, &sp, &cfg, &r.n_values, r.deletions_per_n, r.sweep_seed)
                        .map_err(bad)?
                }
                _ => unreachable!("not a sweep command"),
            }
        }
    };
    out.report(&report)
}

fn dispatch(cmd: &Command) -> CliResult<Vec<String>> {
    let (flags, name) = match cmd {
        Command::Train(f) => (f, "train"),
        Command::Select(f) => (f, "select"),
        Command::Eval(f) => (f, "eval"),
        Command::SweepN(f) => (f, "sweep-n"),
        Command::SweepLambda(f) => (f, "sweep-lambda"),
        Command::SweepK(f) => (f, "sweep-k"),
        Command::Beta(f) => (f, "beta"),
        Command::Overlap(f) => (f, "overlap"),
        Command::Oracle(f) => (f, "oracle"),
        Command::GenSynth(f) => (f, "gen-synth"),
    };
    let cfg = load_config(flags.config.as_deref())?;
    let (r, sources) = resolve(flags, cfg, name == "gen-synth");
    std::fs::create_dir_all(&r.out_dir).map_err(|e| Error::io(&r.out_dir, e))?;
    let mut out = Outputs {
        dir: r.out_dir.clone(),
        written: Vec::new(),
    };
    out.json(
        "resolved_config.json",
        &json!({"command": name, "values": &r, "sources": sources.0}),
    )?;

    let work = move || -> CliResult<Vec<String>> {
        match cmd {
            Command::Train(_) => cmd_train(&r, &mut out),
            Command::Select(_) => cmd_select(&r, &mut out),
            Command::Eval(_) => cmd_eval(&r, &mut out),
            Command::Oracle(_) => cmd_oracle(&r, &mut out),
            Command::GenSynth(_) => cmd_gen_synth(&r, &mut out),
            other => cmd_sweep(other, &r, &mut out),
        }?;
        Ok(out.written)
    };
    match flags.jobs {
        Some(0) => Err(config_err("invalid_value", "--jobs must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| config_err("invalid_value", e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Runs one command line (program name first). Returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!(
                "{}",
                json!({"error": "config", "kind": "usage", "message": first})
            );
            return 2;
        }
    };
    match dispatch(&cli.cmd) {
        Ok(written) => {
            println!("{}", json!({"status": "ok", "outputs": written}));
            0
        }
        Err(Failure::Config { kind, message }) => {
            eprintln!(
                "{}",
                json!({"error": "config", "kind": kind, "message": message})
            );
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!(
                "{}",
                json!({"error": "runtime", "kind": e.kind(), "message": e.to_string()})
            );
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let (msg, key) = parse_config(r#"{"k": 3, "lamda1": 0.1}"#).unwrap_err();
        assert_eq!(key.as_deref(), Some("lamda1"));
        assert!(msg.contains("lamda1"));
    }

    #[test]
    fn sources_distinguish_user_and_default() {
        let cfg = parse_config(r#"{"k": 3, "lr": 0.01}"#).unwrap();
        let (r, s) = resolve(&Flags::default(), cfg, false);
        assert_eq!(r.k, Some(3));
        assert_eq!(r.lr, 0.01);
        assert_eq!(s.0["lr"], Source::User);
        assert_eq!(s.0["epochs"], Source::Default);
        assert_eq!(r.epochs, DEFAULT_EPOCHS);
    }

    #[test]
    fn flags_override_config() {
        let cfg = parse_config(r#"{"k": 3, "seed": 4}"#).unwrap();
        let flags = Flags {
            k: Some(5),
            ..Flags::default()
        };
        let (r, _) = resolve(&flags, cfg, false);
        assert_eq!(r.k, Some(5));
        assert_eq!(r.seed, 4);
    }

    #[test]
    fn bad_usage_exits_2() {
        assert_eq!(run_command(["ufs", "fly"]), 2);
        assert_eq!(run_command(["ufs", "train", "--k", "x"]), 2);
    }
}
