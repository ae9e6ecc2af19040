use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::dsp::ensure_signal;
use crate::error::{Error, Result};

pub const DICTIONARY_FORMAT_VERSION: u32 = 1;

/// Slack on the squared-norm constraint `|a_j|^2 <= c`.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryMeta {
    pub trained_on: String,
    pub iterations: usize,
    pub beta: f64,
    pub sample_rate: f64,
}

impl Default for DictionaryMeta {
    fn default() -> Self {
        DictionaryMeta {
            trained_on: String::new(),
            iterations: 0,
            beta: 0.0,
            sample_rate: crate::synth::DEFAULT_SAMPLE_RATE,
        }
    }
}

/// `n` basis functions of common length `q`, each with `|a_j|^2 <= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    bases: Vec<Vec<f64>>,
    c: f64,
    pub meta: DictionaryMeta,
}

impl Dictionary {
    pub fn new(bases: Vec<Vec<f64>>, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("norm bound must be positive, got {c}")));
        }
        let q = bases
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("dictionary needs at least one basis"))?;
        for (j, b) in bases.iter().enumerate() {
            ensure_signal(&format!("basis {j}"), b)?;
            if b.len() != q {
                return Err(Error::invalid(format!("basis {j} has length {}, expected {q}", b.len())));
            }
            let norm2: f64 = b.iter().map(|v| v * v).sum();
            if norm2 > c + NORM_SLACK {
                return Err(Error::invalid(format!(
                    "basis {j} violates the norm bound ({norm2} > {c})"
                )));
            }
        }
        Ok(Dictionary {
            bases,
            c,
            meta: DictionaryMeta::default(),
        })
    }

    /// Rescales each basis onto the sphere `|a|^2 = c` (zero bases are rejected).
    pub fn normalized(bases: Vec<Vec<f64>>, c: f64) -> Result<Self> {
        let bases = bases
            .into_iter()
            .enumerate()
            .map(|(j, mut b)| {
                let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(Error::invalid(format!("basis {j} cannot be normalized")));
                }
                let s = c.sqrt() / norm;
                b.iter_mut().for_each(|v| *v *= s);
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;
        Dictionary::new(bases, c)
    }

    pub fn with_meta(mut self, meta: DictionaryMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn basis_len(&self) -> usize {
        self.bases[0].len()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn bases(&self) -> &[Vec<f64>] {
        &self.bases
    }

    pub fn basis(&self, j: usize) -> &[f64] {
        &self.bases[j]
    }

    pub(crate) fn bases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.bases
    }

    /// JSON with reals printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"version\": {DICTIONARY_FORMAT_VERSION},");
        let _ = writeln!(s, "  \"n\": {},", self.len());
        let _ = writeln!(s, "  \"q\": {},", self.basis_len());
        let _ = writeln!(s, "  \"c\": {},", fmt_real(self.c));
        let _ = writeln!(s, "  \"beta\": {},", fmt_real(self.meta.beta));
        let _ = writeln!(s, "  \"sample_rate\": {},", fmt_real(self.meta.sample_rate));
        let _ = writeln!(s, "  \"trained_on\": {},", serde_json::to_string(&self.meta.trained_on).expect("string"));
        let _ = writeln!(s, "  \"iterations\": {},", self.meta.iterations);
        s.push_str("  \"bases\": [\n");
        for (j, b) in self.bases.iter().enumerate() {
            s.push_str("    [");
            for (k, v) in b.iter().enumerate() {
                if k > 0 {
                    s.push_str(", ");
                }
                s.push_str(&fmt_real(*v));
            }
            s.push(']');
            if j + 1 < self.bases.len() {
                s.push(',');
            }
            s.push('\n');
        }
        s.push_str("  ]\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            version: u32,
            n: usize,
            q: usize,
            c: f64,
            beta: f64,
            sample_rate: f64,
            #[serde(default)]
            trained_on: String,
            #[serde(default)]
            iterations: usize,
            bases: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::invalid(format!("dictionary JSON: {e}")))?;
        if raw.version != DICTIONARY_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported dictionary version {}", raw.version)));
        }
        if raw.bases.len() != raw.n || raw.bases.iter().any(|b| b.len() != raw.q) {
            return Err(Error::invalid("dictionary shape does not match its n/q header"));
        }
        Ok(Dictionary::new(raw.bases, raw.c)?.with_meta(DictionaryMeta {
            trained_on: raw.trained_on,
            iterations: raw.iterations,
            beta: raw.beta,
            sample_rate: raw.sample_rate,
        }))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dictionary::from_json(&text).map_err(|e| Error::CorruptFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// 17 significant digits, valid JSON number syntax.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}
