//! Labeled synthetic sweep corpora.
//!
//! Two families are provided. The *fault-lab* generator emulates the
//! high-frequency channel of a distribution feeder: a narrowband tone near
//! 10 kHz, amplitude-modulated broadcast carriers and white noise, plus (for
//! fault sweeps) damped sinusoidal transients whose onsets cluster around the
//! mains zero crossings. The *planted* generator synthesizes sweeps from a
//! known dictionary and sparse codes so that learning can be checked against
//! ground truth.

mod generate;
mod io;
mod planted;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{gen_background, gen_fault, sample_von_mises};
pub use io::{load_corpus, load_truth, save_corpus, save_truth, MANIFEST_FILE, MANIFEST_VERSION, TRUTH_FILE};
pub use planted::{gen_planted_corpus, PlantedConfig, PlantedTruth};
pub(crate) use planted::smooth_random_bases;

pub const DEFAULT_SAMPLE_RATE: f64 = 2.0e6;
/// 20 ms at 2 MHz.
pub const DEFAULT_SWEEP_LEN: usize = 40_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Fault,
    NonFault,
}

impl Label {
    /// 1 for fault, 0 for non-fault.
    pub fn as_class(self) -> u8 {
        match self {
            Label::Fault => 1,
            Label::NonFault => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fault => "fault",
            Label::NonFault => "non-fault",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "fault" => Some(Label::Fault),
            "non-fault" => Some(Label::NonFault),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Voltage,
    Current,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Voltage => "voltage",
            SignalKind::Current => "current",
        }
    }

    pub fn parse(s: &str) -> Option<SignalKind> {
        match s {
            "voltage" => Some(SignalKind::Voltage),
            "current" => Some(SignalKind::Current),
            _ => None,
        }
    }
}

/// One fixed-rate record with its label and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub id: String,
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub label: Label,
    pub kind: SignalKind,
    pub seed: u64,
}

impl Sweep {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }
}

/// Sweeps sharing one sample rate and length.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sample_rate: f64,
    pub sweep_len: usize,
    pub sweeps: Vec<Sweep>,
}

impl Corpus {
    pub fn new(sample_rate: f64, sweep_len: usize, sweeps: Vec<Sweep>) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        for s in &sweeps {
            if s.samples.len() != sweep_len {
                return Err(Error::invalid(format!(
                    "sweep `{}` has {} samples, corpus length is {sweep_len}",
                    s.id,
                    s.samples.len()
                )));
            }
        }
        Ok(Corpus {
            sample_rate,
            sweep_len,
            sweeps,
        })
    }

    pub fn len(&self) -> usize {
        self.sweeps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sweeps.is_empty()
    }

    /// 1 = fault, 0 = non-fault, aligned with `sweeps`.
    pub fn classes(&self) -> Vec<u8> {
        self.sweeps.iter().map(|s| s.label.as_class()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.sweeps.iter().filter(|s| s.label == label).count()
    }

    /// Sub-corpus of one class, order preserved.
    pub fn with_label(&self, label: Label) -> Corpus {
        Corpus {
            sample_rate: self.sample_rate,
            sweep_len: self.sweep_len,
            sweeps: self.sweeps.iter().filter(|s| s.label == label).cloned().collect(),
        }
    }

    /// `count` random windows of `window_len` samples cropped from the sweeps.
    ///
    /// Source sweeps are spread evenly over the corpus (every sweep
    /// contributes when `count >= m`); offsets are seeded and random.
    pub fn windows(&self, window_len: usize, count: usize, seed: u64) -> Result<Corpus> {
        if self.is_empty() {
            return Err(Error::invalid("cannot crop windows from an empty corpus"));
        }
        if window_len == 0 || window_len > self.sweep_len {
            return Err(Error::invalid(format!(
                "window length {window_len} outside 1..={}",
                self.sweep_len
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sweeps = (0..count)
            .map(|i| {
                let src = &self.sweeps[(i * self.len() / count.max(1)) % self.len()];
                let start = rng.random_range(0..=self.sweep_len - window_len);
                Sweep {
                    id: format!("{}@{start}", src.id),
                    samples: src.samples[start..start + window_len].to_vec(),
                    ..src.clone()
                }
            })
            .collect();
        Corpus::new(self.sample_rate, window_len, sweeps)
    }
}

/// Closed interval used for randomized generator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Span { lo, hi }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::invalid(format!("{name}: invalid range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    fn sample_log(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo.ln()..=self.hi.ln()).exp()
        }
    }
}

/// An amplitude-modulated broadcast carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub frequency_hz: f64,
    pub amplitude: f64,
    pub modulation_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSpec {
    pub tone_hz: f64,
    /// Uniform jitter of the tone frequency, +/- Hz.
    pub tone_jitter_hz: f64,
    pub tone_amplitude: f64,
    /// Relative uniform jitter of the tone amplitude.
    pub tone_amplitude_jitter: f64,
    pub carriers: Vec<Carrier>,
    /// Range of the audio modulating frequency, Hz.
    pub modulation_hz: Span,
    pub noise_sigma: f64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec {
            tone_hz: 10.0e3,
            tone_jitter_hz: 200.0,
            tone_amplitude: 0.1,
            tone_amplitude_jitter: 0.1,
            carriers: vec![
                Carrier { frequency_hz: 531.0e3, amplitude: 0.05, modulation_depth: 0.5 },
                Carrier { frequency_hz: 693.0e3, amplitude: 0.04, modulation_depth: 0.5 },
                Carrier { frequency_hz: 855.0e3, amplitude: 0.03, modulation_depth: 0.5 },
            ],
            modulation_hz: Span::new(300.0, 3000.0),
            noise_sigma: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultSpec {
    /// Poisson mean of transients per sweep.
    pub transient_rate: f64,
    /// Damped-sinusoid frequency, drawn log-uniformly.
    pub frequency_hz: Span,
    /// Exponential damping, 1/s.
    pub damping_per_s: Span,
    pub amplitude: Span,
    /// von Mises concentration of onsets around the mains zero crossings (0 = uniform).
    pub zero_crossing_concentration: f64,
}

impl Default for FaultSpec {
    fn default() -> Self {
        FaultSpec {
            transient_rate: 6.0,
            frequency_hz: Span::new(20.0e3, 400.0e3),
            damping_per_s: Span::new(2.0e4, 1.0e5),
            amplitude: Span::new(0.3, 1.5),
            zero_crossing_concentration: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub sweeps_per_class: usize,
    pub sweep_len: usize,
    pub sample_rate: f64,
    pub mains_hz: f64,
    pub kind: SignalKind,
    pub background: BackgroundSpec,
    pub fault: FaultSpec,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sweeps_per_class: 566,
            sweep_len: DEFAULT_SWEEP_LEN,
            sample_rate: DEFAULT_SAMPLE_RATE,
            mains_hz: 50.0,
            kind: SignalKind::Voltage,
            background: BackgroundSpec::default(),
            fault: FaultSpec::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn duration(&self) -> f64 {
        self.sweep_len as f64 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be non-negative, got {v}")))
            }
        };
        if self.sweep_len == 0 || self.sweeps_per_class == 0 {
            return Err(Error::invalid("sweep length and sweeps per class must be positive"));
        }
        positive("sample_rate", self.sample_rate)?;
        positive("mains_hz", self.mains_hz)?;
        let bg = &self.background;
        non_negative("tone_hz", bg.tone_hz)?;
        non_negative("tone_jitter_hz", bg.tone_jitter_hz)?;
        non_negative("tone_amplitude", bg.tone_amplitude)?;
        non_negative("tone_amplitude_jitter", bg.tone_amplitude_jitter)?;
        non_negative("noise_sigma", bg.noise_sigma)?;
        bg.modulation_hz.validate("modulation_hz")?;
        for c in &bg.carriers {
            non_negative("carrier frequency", c.frequency_hz)?;
            non_negative("carrier amplitude", c.amplitude)?;
            non_negative("carrier modulation depth", c.modulation_depth)?;
        }
        let f = &self.fault;
        non_negative("transient_rate", f.transient_rate)?;
        f.frequency_hz.validate("frequency_hz")?;
        positive("frequency_hz.lo", f.frequency_hz.lo)?;
        f.damping_per_s.validate("damping_per_s")?;
        non_negative("damping_per_s.lo", f.damping_per_s.lo)?;
        f.amplitude.validate("amplitude")?;
        if f.zero_crossing_concentration.is_nan() || f.zero_crossing_concentration < 0.0 {
            return Err(Error::invalid("zero_crossing_concentration must be >= 0"));
        }
        Ok(())
    }
}

/// Deterministic per-unit seed, `hash(master, stream, index)` via SplitMix64.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const STREAM_FAULT: u64 = 1;
pub(crate) const STREAM_BACKGROUND: u64 = 2;

/// Fault sweeps first, then background sweeps, `sweeps_per_class` of each.
pub fn gen_corpus(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let n = cfg.sweeps_per_class;
    let mut sweeps: Vec<Sweep> = (0..2 * n)
        .into_par_iter()
        .map(|i| {
            if i < n {
                let mut s = gen_fault(cfg, derive_seed(cfg.seed, STREAM_FAULT, i as u64))?;
                s.id = format!("fault-{i:05}");
                Ok(s)
            } else {
                let k = i - n;
                let mut s = gen_background(cfg, derive_seed(cfg.seed, STREAM_BACKGROUND, k as u64))?;
                s.id = format!("background-{k:05}");
                Ok(s)
            }
        })
        .collect::<Result<_>>()?;
    sweeps.shrink_to_fit();
    Corpus::new(cfg.sample_rate, cfg.sweep_len, sweeps)
}
