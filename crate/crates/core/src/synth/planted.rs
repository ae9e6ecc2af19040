use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{derive_seed, Corpus, Label, SignalKind, Span, Sweep, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::sisc::{Activation, Dictionary, DictionaryMeta, SparseCode};

const STREAM_BASES: u64 = 10;
const STREAM_SWEEP: u64 = 11;
const STREAM_NOISE: u64 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedConfig {
    pub n_bases: usize,
    pub basis_len: usize,
    pub sweeps: usize,
    pub sweep_len: usize,
    pub activations_per_sweep: usize,
    /// Signal-to-noise ratio over the whole corpus; `inf` disables noise.
    pub snr_db: f64,
    /// Magnitude range of the activations; signs are random.
    pub amplitude: Span,
    pub sample_rate: f64,
    /// When set, every sweep draws its activations from the other bases,
    /// and even-indexed sweeps are faults carrying one extra activation of
    /// this basis. Odd-indexed sweeps are non-faults. When unset every sweep
    /// is labeled fault and bases are drawn uniformly.
    pub signature_basis: Option<usize>,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_bases: 4,
            basis_len: 250,
            sweeps: 200,
            sweep_len: 4000,
            activations_per_sweep: 3,
            snr_db: 10.0,
            amplitude: Span::new(1.0, 3.0),
            sample_rate: DEFAULT_SAMPLE_RATE,
            signature_basis: None,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bases == 0 {
            return Err(Error::invalid("n_bases must be at least 1"));
        }
        if self.basis_len == 0 || self.basis_len > self.sweep_len {
            return Err(Error::invalid(format!(
                "basis length {} must be in 1..={}",
                self.basis_len, self.sweep_len
            )));
        }
        if self.slots() * self.basis_len > self.sweep_len {
            return Err(Error::invalid(format!(
                "{} non-overlapping activations of length {} do not fit in {} samples",
                self.slots(),
                self.basis_len,
                self.sweep_len
            )));
        }
        if self.snr_db.is_nan() {
            return Err(Error::invalid("snr_db is NaN"));
        }
        self.amplitude.validate("amplitude")?;
        if self.amplitude.lo <= 0.0 {
            return Err(Error::invalid("activation magnitudes must be positive"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(b) = self.signature_basis {
            if b >= self.n_bases || self.n_bases < 2 {
                return Err(Error::invalid("signature basis needs n_bases >= 2 and a valid index"));
            }
        }
        Ok(())
    }

    fn slots(&self) -> usize {
        self.activations_per_sweep + usize::from(self.signature_basis.is_some())
    }
}

/// Ground truth behind a planted corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    pub dictionary: Dictionary,
    pub codes: Vec<SparseCode>,
    pub snr_db: f64,
    pub noise_sigma: f64,
}

impl PlantedTruth {
    /// Regenerates the noise that was added to `sweep` (matched by its seed).
    pub fn noise(&self, sweep: &Sweep) -> Vec<f64> {
        noise_samples(sweep.seed, self.noise_sigma, sweep.len())
    }
}

fn noise_samples(sweep_seed: u64, sigma: f64, len: usize) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; len];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sweep_seed, STREAM_NOISE, 0));
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect()
}

/// Random smooth, tapered, unit-norm bases.
pub(crate) fn smooth_random_bases(n: usize, q: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let width = (q as f64 / 50.0).max(1.0);
    let half = (3.0 * width).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|k| (-0.5 * (k as f64 / width).powi(2)).exp())
        .collect();
    (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..q).map(|_| StandardNormal.sample(rng)).collect();
            let mut b: Vec<f64> = (0..q as isize)
                .map(|t| {
                    kernel
                        .iter()
                        .enumerate()
                        .filter_map(|(i, w)| {
                            let s = t + i as isize - half;
                            (0..q as isize).contains(&s).then(|| w * raw[s as usize])
                        })
                        .sum()
                })
                .collect();
            for (t, v) in b.iter_mut().enumerate() {
                let hann = 0.5 - 0.5 * (std::f64::consts::TAU * (t as f64 + 0.5) / q as f64).cos();
                *v *= hann;
            }
            let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            b.iter_mut().for_each(|v| *v /= norm);
            b
        })
        .collect()
}

/// Synthesizes `sum_j a_j * s_ij + noise` from a random dictionary and sparse codes.
pub fn gen_planted_corpus(cfg: &PlantedConfig) -> Result<(Corpus, PlantedTruth)> {
    cfg.validate()?;
    let (n, q, p, k) = (cfg.n_bases, cfg.basis_len, cfg.sweep_len, cfg.slots());
    let shifts = p - q + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_BASES, 0));
    let bases = smooth_random_bases(n, q, &mut rng);
    let dictionary = Dictionary::new(bases, 1.0)?.with_meta(DictionaryMeta {
        trained_on: "planted ground truth".into(),
        iterations: 0,
        beta: 0.0,
        sample_rate: cfg.sample_rate,
    });

    let mut clean = Vec::with_capacity(cfg.sweeps);
    let mut codes = Vec::with_capacity(cfg.sweeps);
    let mut meta = Vec::with_capacity(cfg.sweeps);
    for i in 0..cfg.sweeps {
        let seed = derive_seed(cfg.seed, STREAM_SWEEP, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let label = match cfg.signature_basis {
            Some(_) if i % 2 == 1 => Label::NonFault,
            _ => Label::Fault,
        };

        // k non-overlapping slots: sorted gaps over the free length
        let free = p - k * q;
        let mut gaps: Vec<usize> = (0..k).map(|_| rng.random_range(0..=free)).collect();
        gaps.sort_unstable();
        let mut atoms: Vec<Vec<Activation>> = vec![Vec::new(); n];
        let signature_slot = rng.random_range(0..k.max(1));
        for (slot, gap) in gaps.iter().enumerate() {
            let shift = gap + slot * q;
            let basis = match cfg.signature_basis {
                Some(b) if slot == signature_slot => {
                    if label == Label::NonFault {
                        continue;
                    }
                    b
                }
                Some(b) => {
                    // uniform over the remaining bases
                    let j = rng.random_range(0..n - 1);
                    if j >= b { j + 1 } else { j }
                }
                None => rng.random_range(0..n),
            };
            let magnitude = cfg.amplitude.sample(&mut rng);
            let value = if rng.random::<bool>() { magnitude } else { -magnitude };
            atoms[basis].push(Activation { shift, value });
        }
        let code = SparseCode::from_atoms(shifts, atoms)?;

        let mut x = vec![0.0; p];
        for (j, list) in code.iter_bases().enumerate() {
            let a = dictionary.basis(j);
            for act in list {
                for (o, av) in x[act.shift..act.shift + q].iter_mut().zip(a) {
                    *o += av * act.value;
                }
            }
        }
        clean.push(x);
        codes.push(code);
        meta.push((seed, label));
    }

    let signal_power = if cfg.sweeps > 0 {
        clean.iter().flatten().map(|v| v * v).sum::<f64>() / (cfg.sweeps * p) as f64
    } else {
        0.0
    };
    let noise_sigma = if cfg.snr_db.is_infinite() && cfg.snr_db > 0.0 {
        0.0
    } else {
        (signal_power / 10f64.powf(cfg.snr_db / 10.0)).sqrt()
    };

    let sweeps = clean
        .into_iter()
        .zip(meta)
        .enumerate()
        .map(|(i, (mut x, (seed, label)))| {
            for (v, e) in x.iter_mut().zip(noise_samples(seed, noise_sigma, p)) {
                *v += e;
            }
            Sweep {
                id: format!("planted-{i:05}"),
                samples: x,
                sample_rate: cfg.sample_rate,
                label,
                kind: SignalKind::Voltage,
                seed,
            }
        })
        .collect();

    Ok((
        Corpus::new(cfg.sample_rate, p, sweeps)?,
        PlantedTruth {
            dictionary,
            codes,
            snr_db: cfg.snr_db,
            noise_sigma,
        },
    ))
}
