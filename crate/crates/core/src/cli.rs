//! The `hifsig` command line: corpus synthesis, dictionary learning, feature
//! export, cross-validation, basis ranking and wavelet comparison.
//!
//! Every subcommand validates its inputs before writing anything, and leaves
//! a `run.json` with the fully resolved configuration next to its outputs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dsp::{magnitude_response, WaveletFilterPair};
use crate::error::{Error, Result};
use crate::eval::{
    compare_wavelet_basis, kfold_cv, rank_bases, CVReport, Ensemble, ForestParams, MAX_COMPARE_LEVEL,
};
use crate::features::{build_feature_matrix, FeatureMatrix, FeatureSpec, WaveletSpec};
use crate::sisc::{fmt_real, learn_from_signals, Dictionary, DictionaryMeta, TrainConfig};
use crate::synth::{
    derive_seed, gen_corpus, gen_planted_corpus, load_corpus, save_corpus, save_truth, Corpus, PlantedConfig,
    SynthConfig,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RUN_FILE: &str = "run.json";
/// Basis lengths accepted on the command line.
pub const BASIS_LEN_RANGE: (usize, usize) = (25, 500);

const STREAM_WINDOWS: u64 = 40;
const STREAM_PERMUTE: u64 = 41;

#[derive(Parser, Debug)]
#[command(name = "hifsig", version, about = "Shift-invariant sparse coding for high-frequency fault signals")]
pub struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Learn a dictionary (or one per `--n-bases` value).
    Learn(LearnArgs),
    /// Export a feature matrix as CSV.
    Features(FeaturesArgs),
    /// Stratified k-fold cross-validation of a tree ensemble.
    Crossval(CrossvalArgs),
    /// Rank features by single-split separability.
    Rank(RankArgs),
    /// Compare a learned basis with a wavelet equivalent filter.
    Compare(CompareArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Sparse sums of random smooth bases, with ground truth.
    Planted,
    /// Background plus damped transients near mains zero crossings.
    Faultlab,
    /// Planted corpus where one basis occurs only in fault sweeps.
    Signature,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// TOML file with `[synth]` (faultlab) or `[planted]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sweeps per class (faultlab, signature).
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub n_bases: Option<usize>,
    #[arg(long)]
    pub basis_len: Option<usize>,
    /// Number of sweeps (planted, signature).
    #[arg(long)]
    pub m: Option<usize>,
    /// Samples per sweep.
    #[arg(long)]
    pub p: Option<usize>,
    /// Signal-to-noise ratio in dB (planted, signature).
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long)]
    pub activations: Option<usize>,
    /// Index of the fault-only basis (signature).
    #[arg(long)]
    pub signature_basis: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// TOML file with a `[train]` table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One value, or a comma-separated list to learn one dictionary per value.
    #[arg(long, value_delimiter = ',')]
    pub n_bases: Vec<usize>,
    #[arg(long)]
    pub basis_len: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Relative objective change that ends training early.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Train on cropped windows of this many samples instead of whole sweeps.
    #[arg(long)]
    pub window_len: Option<usize>,
    /// Number of windows when `--window-len` is set.
    #[arg(long, default_value_t = 64)]
    pub windows: usize,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    /// Append 4-level sym4 band energies.
    #[arg(long)]
    pub wavelet: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleArg {
    Bagging,
    Boosting,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    #[arg(long)]
    pub wavelet: bool,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TOML file with a `[forest]` table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub ensemble: Option<EnsembleArg>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub max_splits: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Shuffle the labels first (null-distribution check).
    #[arg(long)]
    pub permute_labels: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    #[arg(long)]
    pub wavelet: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub dictionary: PathBuf,
    /// One-based basis number.
    #[arg(long)]
    pub basis: usize,
    #[arg(long, default_value_t = 3)]
    pub level: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    synth: Option<SynthConfig>,
    planted: Option<PlantedConfig>,
    train: Option<TrainConfig>,
    forest: Option<ForestParams>,
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else { return Ok(ConfigFile::default()) };
    let text = fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the subcommand; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        // only the first call in a process can size the global pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Features(a) => cmd_features(a),
        Command::Crossval(a) => cmd_crossval(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_run(dir: &Path, command: &str, config: Value) -> Result<()> {
    let run = json!({
        "tool": "hifsig",
        "version": VERSION,
        "command": command,
        "config": config,
    });
    write(&dir.join(RUN_FILE), serde_json::to_string_pretty(&run).expect("run record serializes"))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

fn signature_preset() -> PlantedConfig {
    PlantedConfig {
        sweeps: 200,
        signature_basis: Some(0),
        ..PlantedConfig::default()
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let file = read_config(a.config.as_deref())?;
    match a.preset {
        Preset::Faultlab => {
            let mut cfg = file.synth.unwrap_or_default();
            cfg.seed = a.seed;
            if let Some(n) = a.per_class {
                cfg.sweeps_per_class = n;
            }
            if let Some(p) = a.p {
                cfg.sweep_len = p;
            }
            if a.n_bases.is_some() || a.basis_len.is_some() || a.snr.is_some() || a.activations.is_some() || a.m.is_some() {
                return Err(Error::invalid("planted-corpus options do not apply to the faultlab preset"));
            }
            cfg.validate()?;
            let corpus = gen_corpus(&cfg)?;
            create_dir(&a.out)?;
            save_corpus(&corpus, &a.out)?;
            write_run(&a.out, "synth", json!({ "preset": a.preset, "synth": to_value(&cfg) }))?;
            println!("wrote {} sweeps to {}", corpus.len(), a.out.display());
        }
        Preset::Planted | Preset::Signature => {
            let mut cfg = match (a.preset, file.planted) {
                (_, Some(c)) => c,
                (Preset::Signature, None) => signature_preset(),
                _ => PlantedConfig::default(),
            };
            if a.preset == Preset::Signature && cfg.signature_basis.is_none() {
                cfg.signature_basis = Some(0);
            }
            cfg.seed = a.seed;
            if let Some(v) = a.n_bases {
                cfg.n_bases = v;
            }
            if let Some(v) = a.basis_len {
                cfg.basis_len = v;
            }
            if let Some(v) = a.m {
                cfg.sweeps = v;
            }
            if let Some(v) = a.per_class {
                if a.preset != Preset::Signature {
                    return Err(Error::invalid("--per-class applies to the faultlab and signature presets"));
                }
                cfg.sweeps = 2 * v;
            }
            if let Some(v) = a.p {
                cfg.sweep_len = v;
            }
            if let Some(v) = a.snr {
                cfg.snr_db = v;
            }
            if let Some(v) = a.activations {
                cfg.activations_per_sweep = v;
            }
            if let Some(v) = a.signature_basis {
                if a.preset != Preset::Signature {
                    return Err(Error::invalid("--signature-basis applies to the signature preset"));
                }
                cfg.signature_basis = Some(v);
            }
            cfg.validate()?;
            let (corpus, truth) = gen_planted_corpus(&cfg)?;
            create_dir(&a.out)?;
            save_corpus(&corpus, &a.out)?;
            save_truth(&truth, &a.out)?;
            write_run(&a.out, "synth", json!({ "preset": a.preset, "planted": to_value(&cfg) }))?;
            println!(
                "wrote {} sweeps and ground truth ({} bases) to {}",
                corpus.len(),
                truth.dictionary.len(),
                a.out.display()
            );
        }
    }
    Ok(())
}

fn resolve_train(a: &LearnArgs, file: &ConfigFile) -> Result<Vec<TrainConfig>> {
    let mut base = file.train.clone().unwrap_or_default();
    base.seed = a.seed;
    if let Some(v) = a.basis_len {
        base.basis_len = v;
    }
    if let Some(v) = a.beta {
        base.beta = Some(v);
    }
    if let Some(v) = a.iterations {
        base.outer_iterations = v;
    }
    if let Some(v) = a.tolerance {
        base.objective_tolerance = v;
    }
    if let Some(v) = a.batch_size {
        base.batch_size = Some(v);
    }
    let (lo, hi) = BASIS_LEN_RANGE;
    if !(lo..=hi).contains(&base.basis_len) {
        return Err(Error::invalid(format!("basis length {} outside [{lo}, {hi}]", base.basis_len)));
    }
    let sizes = if a.n_bases.is_empty() { vec![base.n_bases] } else { a.n_bases.clone() };
    let mut seen = sizes.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != sizes.len() {
        return Err(Error::invalid("--n-bases values must be distinct"));
    }
    sizes
        .into_iter()
        .map(|n| {
            let cfg = TrainConfig { n_bases: n, ..base.clone() };
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

fn cmd_learn(a: &LearnArgs) -> Result<()> {
    let file = read_config(a.config.as_deref())?;
    let configs = resolve_train(a, &file)?;
    if a.window_len.is_some() && a.windows == 0 {
        return Err(Error::invalid("--windows must be at least 1"));
    }
    let corpus = load_corpus(&a.corpus)?;
    if corpus.is_empty() {
        return Err(Error::invalid("the corpus has no sweeps"));
    }
    let training: Corpus = match a.window_len {
        Some(len) => corpus.windows(len, a.windows, derive_seed(a.seed, STREAM_WINDOWS, 0))?,
        None => corpus.clone(),
    };
    if configs[0].basis_len > training.sweep_len {
        return Err(Error::invalid(format!(
            "basis length {} exceeds the {}-sample training signals",
            configs[0].basis_len, training.sweep_len
        )));
    }
    let signals: Vec<&[f64]> = training.sweeps.iter().map(|s| s.samples.as_slice()).collect();
    let trained_on = match a.window_len {
        Some(len) => format!("{} windows of {len} samples from {} sweeps", a.windows, corpus.len()),
        None => format!("{} sweeps of {} samples", corpus.len(), corpus.sweep_len),
    };

    create_dir(&a.out)?;
    write_run(
        &a.out,
        "learn",
        json!({
            "corpus": a.corpus,
            "window_len": a.window_len,
            "windows": a.window_len.map(|_| a.windows),
            "train": configs.iter().map(to_value).collect::<Vec<_>>(),
        }),
    )?;
    let sweep_mode = configs.len() > 1;
    let mut summary = String::from("n_bases,iterations,objective,residual,sparsity,mean_nnz,beta,dictionary\n");
    for cfg in &configs {
        let quiet = a.quiet;
        let n = cfg.n_bases;
        let (dict, history) = learn_from_signals(&signals, cfg, |r| {
            if !quiet {
                eprintln!(
                    "[n={n}] iteration {:>4}  objective {:.6e}  nnz/signal {:.1}  {:.2}s",
                    r.iteration, r.objective, r.mean_nnz, r.wall_seconds
                );
            }
        })?;
        let meta = DictionaryMeta {
            trained_on: trained_on.clone(),
            sample_rate: corpus.sample_rate,
            ..dict.meta.clone()
        };
        let dict = dict.with_meta(meta);
        let (dict_file, hist_file) = if sweep_mode {
            (format!("dictionary_n{n}.json"), format!("history_n{n}.csv"))
        } else {
            ("dictionary.json".to_string(), "history.csv".to_string())
        };
        dict.save(a.out.join(&dict_file))?;
        write(&a.out.join(&hist_file), history.to_csv())?;
        let last = history.records.last().expect("at least one iteration");
        let _ = writeln!(
            summary,
            "{n},{},{},{},{},{},{},{dict_file}",
            history.records.len(),
            fmt_real(last.objective),
            fmt_real(last.residual),
            fmt_real(last.sparsity),
            fmt_real(last.mean_nnz),
            fmt_real(history.beta)
        );
        println!("n_bases {n}: {} iterations, objective {:.6e} -> {}", history.records.len(), last.objective, dict_file);
    }
    if sweep_mode {
        write(&a.out.join("summary.csv"), summary)?;
    }
    Ok(())
}

fn load_dictionary(path: Option<&Path>) -> Result<Option<Dictionary>> {
    path.map(Dictionary::load).transpose()
}

fn feature_matrix(corpus_dir: &Path, dict: Option<&Dictionary>, wavelet: bool) -> Result<FeatureMatrix> {
    if dict.is_none() && !wavelet {
        return Err(Error::invalid("pass --dictionary, --wavelet, or both"));
    }
    let corpus = load_corpus(corpus_dir)?;
    if let Some(d) = dict {
        if d.basis_len() > corpus.sweep_len {
            return Err(Error::invalid("dictionary bases are longer than the sweeps"));
        }
    }
    let spec = FeatureSpec {
        dictionary: dict,
        wavelet: wavelet.then(WaveletSpec::default),
    };
    build_feature_matrix(&corpus, &spec)
}

fn cmd_features(a: &FeaturesArgs) -> Result<()> {
    let dict = load_dictionary(a.dictionary.as_deref())?;
    let fm = feature_matrix(&a.corpus, dict.as_ref(), a.wavelet)?;
    create_dir(&a.out)?;
    fm.save_csv(a.out.join("features.csv"))?;
    write_run(
        &a.out,
        "features",
        json!({ "corpus": a.corpus, "dictionary": a.dictionary, "wavelet": a.wavelet }),
    )?;
    println!("{} rows x {} features -> {}", fm.n_rows(), fm.n_cols(), a.out.join("features.csv").display());
    Ok(())
}

fn resolve_forest(a: &CrossvalArgs, file: &ConfigFile) -> Result<ForestParams> {
    let mut p = file.forest.unwrap_or_default();
    if let Some(e) = a.ensemble {
        p.ensemble = match e {
            EnsembleArg::Bagging => Ensemble::Bagging,
            EnsembleArg::Boosting => Ensemble::Boosting,
        };
    }
    if let Some(v) = a.trees {
        p.n_trees = v;
    }
    if let Some(v) = a.max_splits {
        p.max_splits = v;
    }
    if let Some(v) = a.min_leaf {
        p.min_leaf = v;
    }
    p.validate()?;
    Ok(p)
}

/// Labels shuffled with a stream derived from `seed`.
pub fn permuted_labels(labels: &[u8], seed: u64) -> Vec<u8> {
    let mut out = labels.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_PERMUTE, 0)));
    out
}

fn cmd_crossval(a: &CrossvalArgs) -> Result<()> {
    let file = read_config(a.config.as_deref())?;
    let params = resolve_forest(a, &file)?;
    if a.k < 2 {
        return Err(Error::invalid("--k must be at least 2"));
    }
    let dict = load_dictionary(a.dictionary.as_deref())?;
    let mut fm = feature_matrix(&a.corpus, dict.as_ref(), a.wavelet)?;
    if a.permute_labels {
        fm = fm.with_labels(permuted_labels(fm.labels(), a.seed))?;
    }
    let report = kfold_cv(&fm, a.k, &params, a.seed)?;
    create_dir(&a.out)?;
    write(&a.out.join("cv_report.json"), report.to_json())?;
    write(&a.out.join("cv_table.txt"), report.to_table())?;
    write_run(
        &a.out,
        "crossval",
        json!({
            "corpus": a.corpus,
            "dictionary": a.dictionary,
            "wavelet": a.wavelet,
            "k": a.k,
            "seed": a.seed,
            "permute_labels": a.permute_labels,
            "forest": to_value(&params),
        }),
    )?;
    println!("{}", CVReport::summary_header());
    println!("{}", report.summary_row(&fm.n_cols().to_string()));
    Ok(())
}

fn cmd_rank(a: &RankArgs) -> Result<()> {
    let dict = load_dictionary(a.dictionary.as_deref())?;
    let fm = feature_matrix(&a.corpus, dict.as_ref(), a.wavelet)?;
    let report = rank_bases(&fm)?;
    create_dir(&a.out)?;
    write(&a.out.join("separability.json"), report.to_json())?;
    write(&a.out.join("separability.txt"), report.to_table())?;
    write_run(
        &a.out,
        "rank",
        json!({ "corpus": a.corpus, "dictionary": a.dictionary, "wavelet": a.wavelet }),
    )?;
    print!("{}", report.to_table());
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    if !(1..=MAX_COMPARE_LEVEL).contains(&a.level) {
        return Err(Error::invalid(format!("--level must be in 1..={MAX_COMPARE_LEVEL}")));
    }
    let dict = Dictionary::load(&a.dictionary)?;
    if a.basis == 0 || a.basis > dict.len() {
        return Err(Error::invalid(format!("--basis must be in 1..={}", dict.len())));
    }
    let basis = dict.basis(a.basis - 1);
    let filters = WaveletFilterPair::sym4();
    let cmp = compare_wavelet_basis(basis, &filters, a.level)?;
    let fs = dict.meta.sample_rate;

    let mut time = String::from("sample,time_s,basis,wavelet\n");
    for t in 0..basis.len().max(cmp.wavelet.len()) {
        let get = |v: &[f64]| v.get(t).map_or(String::new(), |x| fmt_real(*x));
        let _ = writeln!(time, "{t},{},{},{}", fmt_real(t as f64 / fs), get(basis), get(&cmp.wavelet));
    }
    let mb = magnitude_response(basis, cmp.n_fft)?;
    let mw = magnitude_response(&cmp.wavelet, cmp.n_fft)?;
    let mut spectrum = String::from("frequency_hz,basis_magnitude,wavelet_magnitude\n");
    for (k, (b, w)) in mb.iter().zip(&mw).enumerate() {
        let f = k as f64 * fs / cmp.n_fft as f64;
        let _ = writeln!(spectrum, "{},{},{}", fmt_real(f), fmt_real(*b), fmt_real(*w));
    }

    create_dir(&a.out)?;
    let summary = json!({
        "basis": a.basis,
        "level": cmp.level,
        "n_fft": cmp.n_fft,
        "time_correlation": cmp.time_correlation,
        "spectral_overlap": cmp.spectral_overlap,
        "wavelet_len": cmp.wavelet.len(),
    });
    write(&a.out.join("comparison.json"), serde_json::to_string_pretty(&summary).expect("serializes"))?;
    write(&a.out.join("time.csv"), time)?;
    write(&a.out.join("spectrum.csv"), spectrum)?;
    write_run(
        &a.out,
        "compare",
        json!({ "dictionary": a.dictionary, "basis": a.basis, "level": a.level, "wavelet": "sym4" }),
    )?;
    println!(
        "basis {} vs level-{} sym4 wavelet: time correlation {:.4}, spectral overlap {:.4}",
        a.basis, a.level, cmp.time_correlation, cmp.spectral_overlap
    );
    Ok(())
}
