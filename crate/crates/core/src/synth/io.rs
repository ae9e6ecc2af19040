//! Corpus directory format: `manifest.json` plus one headerless file of
//! little-endian `f64` samples per sweep.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Label, PlantedTruth, SignalKind, Sweep};
use crate::error::{Error, Result};
use crate::sisc::{Dictionary, SparseCode};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const TRUTH_FILE: &str = "truth.json";
const TRUTH_DICTIONARY_FILE: &str = "truth_dictionary.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    sample_rate: f64,
    p: usize,
    entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    id: String,
    label: String,
    kind: String,
    seed: u64,
    file: String,
}

fn corrupt(id: &str, reason: impl Into<String>) -> Error {
    Error::CorruptCorpus {
        id: id.to_string(),
        reason: reason.into(),
    }
}

pub fn save_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(corpus.len());
    for sweep in &corpus.sweeps {
        let file = format!("{}.f64", sanitize(&sweep.id));
        let mut bytes = Vec::with_capacity(sweep.samples.len() * 8);
        for v in &sweep.samples {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        entries.push(Entry {
            id: sweep.id.clone(),
            label: sweep.label.as_str().to_string(),
            kind: sweep.kind.as_str().to_string(),
            seed: sweep.seed,
            file,
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        sample_rate: corpus.sample_rate,
        p: corpus.sweep_len,
        entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| corrupt(MANIFEST_FILE, format!("cannot read {}: {e}", path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| corrupt(MANIFEST_FILE, format!("malformed manifest: {e}")))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(corrupt(MANIFEST_FILE, format!("unsupported version {}", manifest.version)));
    }
    if !(manifest.sample_rate > 0.0 && manifest.sample_rate.is_finite()) {
        return Err(corrupt(MANIFEST_FILE, "sample rate must be positive"));
    }

    let mut sweeps = Vec::with_capacity(manifest.entries.len());
    for e in manifest.entries {
        let label = Label::parse(&e.label).ok_or_else(|| corrupt(&e.id, format!("unknown label `{}`", e.label)))?;
        let kind = SignalKind::parse(&e.kind).ok_or_else(|| corrupt(&e.id, format!("unknown kind `{}`", e.kind)))?;
        let path = dir.join(&e.file);
        let bytes = fs::read(&path).map_err(|err| corrupt(&e.id, format!("cannot read {}: {err}", path.display())))?;
        if bytes.len() != manifest.p * 8 {
            return Err(corrupt(
                &e.id,
                format!("{} bytes on disk, manifest length {} needs {}", bytes.len(), manifest.p, manifest.p * 8),
            ));
        }
        let samples: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(corrupt(&e.id, format!("sample {i} is not finite")));
        }
        sweeps.push(Sweep {
            id: e.id,
            samples,
            sample_rate: manifest.sample_rate,
            label,
            kind,
            seed: e.seed,
        });
    }
    Corpus::new(manifest.sample_rate, manifest.p, sweeps)
}

#[derive(Serialize, Deserialize)]
struct TruthFile {
    version: u32,
    /// `null` encodes a noiseless corpus.
    snr_db: Option<f64>,
    noise_sigma: f64,
    dictionary_file: String,
    codes: Vec<SparseCode>,
}

pub fn save_truth(truth: &PlantedTruth, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    truth.dictionary.save(dir.join(TRUTH_DICTIONARY_FILE))?;
    let file = TruthFile {
        version: 1,
        snr_db: truth.snr_db.is_finite().then_some(truth.snr_db),
        noise_sigma: truth.noise_sigma,
        dictionary_file: TRUTH_DICTIONARY_FILE.to_string(),
        codes: truth.codes.clone(),
    };
    let path = dir.join(TRUTH_FILE);
    fs::write(&path, serde_json::to_string(&file).expect("truth serializes")).map_err(|e| Error::io(&path, e))
}

pub fn load_truth(dir: impl AsRef<Path>) -> Result<PlantedTruth> {
    let dir = dir.as_ref();
    let path = dir.join(TRUTH_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: TruthFile = serde_json::from_str(&text).map_err(|e| Error::CorruptFile {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let dictionary = Dictionary::load(dir.join(&file.dictionary_file))?;
    Ok(PlantedTruth {
        dictionary,
        codes: file.codes,
        snr_db: file.snr_db.unwrap_or(f64::INFINITY),
        noise_sigma: file.noise_sigma,
    })
}
