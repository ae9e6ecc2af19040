//! Fixed-length feature vectors per sweep: rectified cross-correlation sums
//! against dictionary bases, and wavelet band energies.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::dsp::{dwt_multilevel, FilterBank, WaveletFilterPair};
use crate::error::{Error, Result};
use crate::sisc::{fmt_real, Dictionary};
use crate::synth::Corpus;

pub const DEFAULT_WAVELET_LEVELS: usize = 4;

/// `f_j = sum_t max(0, xcorr_valid(x, a_j)[t])`.
pub fn sisc_features(x: &[f64], dict: &Dictionary) -> Result<Vec<f64>> {
    let bank = FilterBank::new(dict.bases(), x.len())?;
    crate::dsp::ensure_signal("x", x)?;
    Ok(sisc_features_with(x, &bank))
}

fn sisc_features_with(x: &[f64], bank: &FilterBank) -> Vec<f64> {
    let mut out = vec![0.0; bank.len()];
    bank.for_each_correlation(x, |j, c| {
        out[j] = c.iter().map(|v| v.max(0.0)).sum();
    });
    out
}

/// Energy per DWT band, ordered `d1..d_levels`, then the approximation.
pub fn wavelet_features(x: &[f64], levels: usize, filters: &WaveletFilterPair) -> Result<Vec<f64>> {
    let bands = dwt_multilevel(x, levels, filters)?;
    Ok(bands.iter_bands().map(|b| b.iter().map(|v| v * v).sum()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    pub levels: usize,
    pub filters: WaveletFilterPair,
}

impl Default for WaveletSpec {
    fn default() -> Self {
        WaveletSpec {
            levels: DEFAULT_WAVELET_LEVELS,
            filters: WaveletFilterPair::sym4(),
        }
    }
}

/// Which extractors to run; when both are set the SISC columns come first.
#[derive(Debug, Clone, Default)]
pub struct FeatureSpec<'a> {
    pub dictionary: Option<&'a Dictionary>,
    pub wavelet: Option<WaveletSpec>,
}

impl<'a> FeatureSpec<'a> {
    pub fn sisc(dict: &'a Dictionary) -> Self {
        FeatureSpec { dictionary: Some(dict), wavelet: None }
    }

    pub fn wavelet() -> Self {
        FeatureSpec { dictionary: None, wavelet: Some(WaveletSpec::default()) }
    }

    pub fn with_wavelet(mut self, spec: WaveletSpec) -> Self {
        self.wavelet = Some(spec);
        self
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if let Some(d) = self.dictionary {
            names.extend((1..=d.len()).map(|j| format!("basis_{j}")));
        }
        if let Some(w) = &self.wavelet {
            names.extend((1..=w.levels).map(|l| format!("wavelet_d{l}")));
            names.push(format!("wavelet_a{}", w.levels));
        }
        names
    }
}

/// Observations by features, with binary labels (1 = fault) aligned to rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>, ids: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(Error::invalid("rows, labels and ids must have equal length"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(Error::invalid(format!("row {i} has {} values for {} columns", r.len(), columns.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} contains a non-finite value")));
            }
        }
        if let Some(l) = labels.iter().find(|l| **l > 1) {
            return Err(Error::invalid(format!("label {l} is not binary")));
        }
        Ok(FeatureMatrix { columns, rows, labels, ids })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Keeps the listed columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> Result<FeatureMatrix> {
        if let Some(c) = cols.iter().find(|c| **c >= self.n_cols()) {
            return Err(Error::invalid(format!("column {c} out of range")));
        }
        Ok(FeatureMatrix {
            columns: cols.iter().map(|c| self.columns[*c].clone()).collect(),
            rows: self.rows.iter().map(|r| cols.iter().map(|c| r[*c]).collect()).collect(),
            labels: self.labels.clone(),
            ids: self.ids.clone(),
        })
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Result<FeatureMatrix> {
        FeatureMatrix::new(self.columns.clone(), self.rows.clone(), labels, self.ids.clone())
    }

    /// Header row of column names plus a final `label` column; reals to 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("id,");
        for c in &self.columns {
            out.push_str(c);
            out.push(',');
        }
        out.push_str("label\n");
        for ((id, r), l) in self.ids.iter().zip(&self.rows).zip(&self.labels) {
            out.push_str(id);
            for v in r {
                out.push(',');
                out.push_str(&fmt_real(*v));
            }
            let _ = writeln!(out, ",{l}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<FeatureMatrix> {
        let bad = |line: usize, why: &str| Error::invalid(format!("feature CSV line {line}: {why}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad(1, "missing header"))?.split(',').collect();
        if header.len() < 2 || header[0] != "id" || header[header.len() - 1] != "label" {
            return Err(bad(1, "header must be `id,...,label`"));
        }
        let columns: Vec<String> = header[1..header.len() - 1].iter().map(|s| s.to_string()).collect();
        let (mut rows, mut labels, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(bad(i + 2, "wrong field count"));
            }
            ids.push(fields[0].to_string());
            let row = fields[1..fields.len() - 1]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(i + 2, "unparsable value")))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
            labels.push(fields[fields.len() - 1].parse::<u8>().map_err(|_| bad(i + 2, "bad label"))?);
        }
        FeatureMatrix::new(columns, rows, labels, ids)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Runs the chosen extractors on every sweep (in parallel, assembled in corpus order).
pub fn build_feature_matrix(corpus: &Corpus, spec: &FeatureSpec<'_>) -> Result<FeatureMatrix> {
    if corpus.is_empty() {
        return Err(Error::invalid("cannot build features for an empty corpus"));
    }
    if spec.dictionary.is_none() && spec.wavelet.is_none() {
        return Err(Error::invalid("no feature extractor selected"));
    }
    let p = corpus.sweep_len;
    if let Some(s) = corpus.sweeps.iter().find(|s| s.samples.len() != p) {
        return Err(Error::invalid(format!("sweep {} has length {}, expected {p}", s.id, s.samples.len())));
    }
    let bank = spec.dictionary.map(|d| FilterBank::new(d.bases(), p)).transpose()?;
    let rows = corpus
        .sweeps
        .par_iter()
        .map(|s| {
            let mut row = Vec::new();
            if let Some(bank) = &bank {
                row.extend(sisc_features_with(&s.samples, bank));
            }
            if let Some(w) = &spec.wavelet {
                row.extend(wavelet_features(&s.samples, w.levels, &w.filters)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(
        spec.column_names(),
        rows,
        corpus.sweeps.iter().map(|s| s.label.as_class()).collect(),
        corpus.sweeps.iter().map(|s| s.id.clone()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict() -> Dictionary {
        Dictionary::normalized(vec![vec![1.0, -1.0, 0.5, 0.0], vec![0.2, 0.4, 0.4, 0.2]], 1.0).unwrap()
    }

    #[test]
    fn silence_and_scaling() {
        let d = dict();
        assert_eq!(sisc_features(&[0.0; 32], &d).unwrap(), vec![0.0, 0.0]);
        let x: Vec<f64> = (0..32).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let f = sisc_features(&x, &d).unwrap();
        let g = sisc_features(&x.iter().map(|v| 4.0 * v).collect::<Vec<_>>(), &d).unwrap();
        for (a, b) in f.iter().zip(&g) {
            assert!((4.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn basis_longer_than_signal() {
        assert!(sisc_features(&[1.0; 3], &dict()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.1, 1.0 / 3.0], vec![2.5e-300, 7.0]],
            vec![1, 0],
            vec!["s0".into(), "s1".into()],
        )
        .unwrap();
        let text = m.to_csv();
        assert!(text.starts_with("id,a,b,label\n"));
        assert_eq!(FeatureMatrix::from_csv(&text).unwrap(), m);
    }

    #[test]
    fn rejects_non_finite_and_non_binary() {
        let cols = vec!["a".to_string()];
        assert!(FeatureMatrix::new(cols.clone(), vec![vec![f64::NAN]], vec![0], vec!["x".into()]).is_err());
        assert!(FeatureMatrix::new(cols, vec![vec![1.0]], vec![2], vec!["x".into()]).is_err());
    }
}
