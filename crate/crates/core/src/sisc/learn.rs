use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::infer_codes_with;
use super::update::batch_objective;
use super::{update_dictionary, Dictionary, DictionaryMeta, SolverOptions, SparseCode, UpdateOptions};
use crate::dsp::FilterBank;
use crate::error::{Error, Result};
use crate::synth::{derive_seed, smooth_random_bases, Corpus};

const STREAM_INIT: u64 = 20;
const STREAM_BATCH: u64 = 21;

/// Corpora up to this size are processed in full every iteration.
pub const FULL_BATCH_LIMIT: usize = 1000;
pub const DEFAULT_BATCH: usize = 256;
/// A basis unused for this many consecutive iterations is re-seeded.
pub const DEAD_BASIS_PATIENCE: usize = 5;
const MAX_FAILED_CODE_STEPS: usize = 3;
pub const MIN_BASIS_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_bases: usize,
    pub basis_len: usize,
    /// Sparsity weight; `None` picks [`default_beta`].
    pub beta: Option<f64>,
    pub c: f64,
    pub outer_iterations: usize,
    /// Stop early once an iteration lowers the objective by less than this fraction.
    pub objective_tolerance: f64,
    /// `None`: full batch up to [`FULL_BATCH_LIMIT`] sweeps, else [`DEFAULT_BATCH`].
    pub batch_size: Option<usize>,
    pub solver: SolverOptions,
    pub update: UpdateOptions,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_bases: 32,
            basis_len: 250,
            beta: None,
            c: 1.0,
            outer_iterations: 100,
            objective_tolerance: 1e-6,
            batch_size: None,
            solver: SolverOptions {
                tolerance: 1e-5,
                max_iterations: 300,
                ..SolverOptions::default()
            },
            update: UpdateOptions::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bases == 0 {
            return Err(Error::invalid("n_bases must be at least 1"));
        }
        if self.basis_len < MIN_BASIS_LEN {
            return Err(Error::invalid(format!("basis_len must be at least {MIN_BASIS_LEN}")));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::invalid(format!("beta must be positive, got {b}")));
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("c must be positive, got {}", self.c)));
        }
        if self.outer_iterations == 0 {
            return Err(Error::invalid("outer_iterations must be at least 1"));
        }
        if !(self.objective_tolerance >= 0.0) {
            return Err(Error::invalid("objective_tolerance must be non-negative"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.solver.max_iterations == 0 || !(self.solver.tolerance >= 0.0) {
            return Err(Error::invalid("invalid solver options"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Batch objective after the code and basis steps.
    pub objective: f64,
    pub residual: f64,
    pub sparsity: f64,
    /// Batch objective before the iteration.
    pub objective_before: f64,
    pub mean_nnz: f64,
    pub code_failures: usize,
    pub unused_bases: Vec<usize>,
    pub reinitialized: Vec<usize>,
    /// Largest `|a_j|^2` after the iteration.
    pub max_norm_sq: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub beta: f64,
    pub full_batch: bool,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl TrainHistory {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,objective,residual,sparsity,mean_nnz,code_failures,unused_bases,reinitialized,max_norm_sq\n",
        );
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.iteration,
                super::fmt_real(r.objective),
                super::fmt_real(r.residual),
                super::fmt_real(r.sparsity),
                super::fmt_real(r.mean_nnz),
                r.code_failures,
                join(&r.unused_bases),
                join(&r.reinitialized),
                super::fmt_real(r.max_norm_sq)
            ));
        }
        out
    }
}

/// `0.1 * median(|x|^2 / p) * q`.
pub fn default_beta<S: AsRef<[f64]>>(signals: &[S], basis_len: usize) -> f64 {
    let mut power: Vec<f64> = signals
        .iter()
        .map(|x| {
            let x = x.as_ref();
            x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64
        })
        .collect();
    if power.is_empty() {
        return 0.0;
    }
    power.sort_by(f64::total_cmp);
    let m = power.len();
    let median = if m % 2 == 1 {
        power[m / 2]
    } else {
        0.5 * (power[m / 2 - 1] + power[m / 2])
    };
    0.1 * median * basis_len as f64
}

/// Alternates code inference and basis updates over a corpus.
pub fn learn_dictionary(corpus: &Corpus, cfg: &TrainConfig) -> Result<(Dictionary, TrainHistory)> {
    let signals: Vec<&[f64]> = corpus.sweeps.iter().map(|s| s.samples.as_slice()).collect();
    let (dict, history) = learn_from_signals(&signals, cfg, |_| {})?;
    let meta = DictionaryMeta {
        sample_rate: corpus.sample_rate,
        ..dict.meta.clone()
    };
    Ok((dict.with_meta(meta), history))
}

/// [`learn_dictionary`] over bare equal-length signals, reporting each iteration to `observe`.
pub fn learn_from_signals<S: AsRef<[f64]> + Sync>(
    signals: &[S],
    cfg: &TrainConfig,
    mut observe: impl FnMut(&IterationRecord),
) -> Result<(Dictionary, TrainHistory)> {
    cfg.validate()?;
    let m = signals.len();
    if m == 0 {
        return Err(Error::invalid("cannot learn from an empty corpus"));
    }
    let p = signals[0].as_ref().len();
    for (i, x) in signals.iter().enumerate() {
        let x = x.as_ref();
        if x.len() != p {
            return Err(Error::invalid(format!("signal {i} has length {}, expected {p}", x.len())));
        }
        crate::dsp::ensure_signal(&format!("signal {i}"), x)?;
    }
    let (n, q) = (cfg.n_bases, cfg.basis_len);
    if q > p {
        return Err(Error::invalid(format!("basis length {q} exceeds signal length {p}")));
    }
    let beta = match cfg.beta {
        Some(b) => b,
        None => default_beta(signals, q),
    };
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("default beta is zero; the corpus is silent"));
    }
    let batch_size = cfg
        .batch_size
        .unwrap_or(if m <= FULL_BATCH_LIMIT { m } else { DEFAULT_BATCH })
        .min(m);
    let full_batch = batch_size == m;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT, 0));
    let mut dict = Dictionary::normalized(smooth_random_bases(n, q, &mut rng), cfg.c)?;
    let shifts = p - q + 1;
    let mut codes: Vec<SparseCode> = vec![SparseCode::zeros(n, shifts); m];
    let mut idle = vec![0usize; n];
    let mut failed_steps = 0;
    let mut history = TrainHistory {
        beta,
        full_batch,
        records: Vec::new(),
        converged: false,
    };

    for it in 0..cfg.outer_iterations {
        let started = Instant::now();
        let batch: Vec<usize> = if full_batch {
            (0..m).collect()
        } else {
            let mut brng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_BATCH, it as u64));
            let mut idx = rand::seq::index::sample(&mut brng, m, batch_size).into_vec();
            idx.sort_unstable();
            idx
        };
        let xs: Vec<&[f64]> = batch.iter().map(|&i| signals[i].as_ref()).collect();
        let warm: Vec<SparseCode> = batch.iter().map(|&i| codes[i].clone()).collect();
        let before = batch_objective(&xs, dict.bases(), &warm, beta);

        let bank = FilterBank::new(dict.bases(), p)?;
        let solutions = xs
            .par_iter()
            .zip(warm.par_iter())
            .map(|(x, w)| infer_codes_with(x, &bank, beta, Some(w), &cfg.solver))
            .collect::<Result<Vec<_>>>()?;
        drop(bank);
        let code_failures = solutions.iter().filter(|s| !s.converged).count();
        let worst_optimality = solutions.iter().map(|s| s.optimality).fold(0.0, f64::max);
        let batch_codes: Vec<SparseCode> = solutions.into_iter().map(|s| s.code).collect();

        if 2 * code_failures > batch.len() {
            failed_steps += 1;
            if failed_steps >= MAX_FAILED_CODE_STEPS {
                return Err(Error::Convergence {
                    iterations: it + 1,
                    relative_change: history
                        .records
                        .last()
                        .map_or(f64::INFINITY, |r| relative(r.objective_before, r.objective)),
                    optimality: worst_optimality,
                    last_iterate: dict.bases().to_vec(),
                });
            }
        } else {
            failed_steps = 0;
        }

        let (updated, stats) = update_dictionary(&xs, &batch_codes, &dict, beta, &cfg.update)?;
        dict = updated;

        for j in 0..n {
            if stats.unused.contains(&j) {
                idle[j] += 1;
            } else {
                idle[j] = 0;
            }
        }
        let dead: Vec<usize> = (0..n).filter(|j| idle[*j] >= DEAD_BASIS_PATIENCE).collect();
        let reinitialized = if dead.is_empty() {
            Vec::new()
        } else {
            reseed_dead(&mut dict, &dead, &xs, &batch_codes)
        };
        for j in &reinitialized {
            idle[*j] = 0;
        }

        let nnz: usize = batch_codes.iter().map(SparseCode::nnz).sum();
        for (&i, code) in batch.iter().zip(batch_codes) {
            codes[i] = code;
        }

        let after = stats.after;
        let record = IterationRecord {
            iteration: it + 1,
            objective: after.total,
            residual: after.residual,
            sparsity: after.sparsity,
            objective_before: before.total,
            mean_nnz: nnz as f64 / batch.len() as f64,
            code_failures,
            unused_bases: stats.unused,
            reinitialized,
            max_norm_sq: dict
                .bases()
                .iter()
                .map(|a| a.iter().map(|v| v * v).sum::<f64>())
                .fold(0.0, f64::max),
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        observe(&record);
        let change = relative(before.total, after.total);
        history.records.push(record);
        // an all-zero batch is a stall, not convergence; dead-basis reseeding takes over
        if nnz > 0 && change < cfg.objective_tolerance {
            history.converged = true;
            break;
        }
    }

    let meta = DictionaryMeta {
        trained_on: format!("{m} signals of {p} samples"),
        iterations: history.records.len(),
        beta,
        ..DictionaryMeta::default()
    };
    Ok((dict.with_meta(meta), history))
}

fn relative(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        (before - after) / before
    } else {
        0.0
    }
}

/// Re-seeds each dead basis with the highest-energy residual window of the
/// worst-reconstructed signal. Dead bases carry no activations, so the
/// objective is unchanged.
fn reseed_dead(dict: &mut Dictionary, dead: &[usize], xs: &[&[f64]], codes: &[SparseCode]) -> Vec<usize> {
    let q = dict.basis_len();
    let c = dict.c();
    let mut residuals: Vec<Vec<f64>> = xs
        .iter()
        .zip(codes)
        .map(|(x, code)| {
            let rec = super::objective::reconstruct_unchecked(dict.bases(), code, x.len());
            x.iter().zip(&rec).map(|(u, v)| u - v).collect()
        })
        .collect();
    let mut done = Vec::new();
    for &j in dead {
        let Some((i, _)) = residuals
            .iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        let r = &mut residuals[i];
        let mut energy: f64 = r[..q].iter().map(|v| v * v).sum();
        let (mut best, mut best_energy) = (0, energy);
        for t in 1..=r.len() - q {
            energy += r[t + q - 1].powi(2) - r[t - 1].powi(2);
            if energy > best_energy {
                best = t;
                best_energy = energy;
            }
        }
        let segment = &mut r[best..best + q];
        let norm = segment.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            continue;
        }
        let s = c.sqrt() / norm;
        for (d, v) in dict.bases_mut()[j].iter_mut().zip(segment.iter()) {
            *d = v * s;
        }
        segment.iter_mut().for_each(|v| *v = 0.0);
        done.push(j);
    }
    done
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_planted_corpus, PlantedConfig};

    fn tiny() -> Corpus {
        let cfg = PlantedConfig {
            n_bases: 2,
            basis_len: 20,
            sweeps: 12,
            sweep_len: 200,
            activations_per_sweep: 2,
            seed: 4,
            ..PlantedConfig::default()
        };
        gen_planted_corpus(&cfg).unwrap().0
    }

    fn tiny_cfg() -> TrainConfig {
        TrainConfig { n_bases: 2, basis_len: 20, outer_iterations: 15, objective_tolerance: 0.0, ..TrainConfig::default() }
    }

    #[test]
    fn objective_never_increases() {
        let (dict, history) = learn_dictionary(&tiny(), &tiny_cfg()).unwrap();
        assert_eq!(history.records.len(), 15);
        for r in &history.records {
            assert!(r.objective <= r.objective_before + 1e-9);
        }
        for w in history.records.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-9);
        }
        for b in dict.bases() {
            assert!(b.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-9);
        }
        assert_eq!(dict.meta.iterations, 15);
    }

    #[test]
    fn deterministic() {
        let a = learn_dictionary(&tiny(), &tiny_cfg()).unwrap().0;
        let b = learn_dictionary(&tiny(), &tiny_cfg()).unwrap().0;
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn invalid_configs() {
        let corpus = tiny();
        for cfg in [
            TrainConfig { n_bases: 0, ..tiny_cfg() },
            TrainConfig { basis_len: 201, ..tiny_cfg() },
            TrainConfig { beta: Some(-1.0), ..tiny_cfg() },
            TrainConfig { outer_iterations: 0, ..tiny_cfg() },
        ] {
            assert!(learn_dictionary(&corpus, &cfg).is_err());
        }
    }

    #[test]
    fn default_beta_scales_with_power() {
        let x = vec![vec![1.0; 10], vec![2.0; 10], vec![3.0; 10]];
        assert!((default_beta(&x, 5) - 0.1 * 4.0 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn history_csv_has_a_row_per_iteration() {
        let (_, history) = learn_dictionary(&tiny(), &TrainConfig { outer_iterations: 3, ..tiny_cfg() }).unwrap();
        assert_eq!(history.to_csv().lines().count(), 4);
    }
}
