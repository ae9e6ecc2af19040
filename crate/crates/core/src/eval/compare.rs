use serde::{Deserialize, Serialize};

use crate::dsp::{equivalent_filters, magnitude_response, next_pow2, WaveletFilterPair};
use crate::error::{Error, Result};

pub const MAX_COMPARE_LEVEL: usize = 4;
const MIN_FFT: usize = 4096;

/// Largest `|sum_t a[t] b[t + k]| / (|a| |b|)` over all linear lags `k`.
pub fn max_normalized_xcorr(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("cannot correlate empty signals"));
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let (p, q) = (a.len() as isize, b.len() as isize);
    let mut best = 0.0f64;
    for k in -(p - 1)..q {
        let lo = 0.max(-k);
        let hi = p.min(q - k);
        let s: f64 = (lo..hi).map(|t| a[t as usize] * b[(t + k) as usize]).sum();
        best = best.max(s.abs());
    }
    Ok((best / (na * nb)).min(1.0))
}

/// Cosine similarity of the zero-padded magnitude spectra.
pub fn spectral_overlap(a: &[f64], b: &[f64], n_fft: usize) -> Result<f64> {
    let ma = magnitude_response(a, n_fft)?;
    let mb = magnitude_response(b, n_fft)?;
    let dot: f64 = ma.iter().zip(&mb).map(|(x, y)| x * y).sum();
    let na = ma.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = mb.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletComparison {
    pub level: usize,
    pub n_fft: usize,
    pub time_correlation: f64,
    pub spectral_overlap: f64,
    /// The level's equivalent wavelet filter.
    pub wavelet: Vec<f64>,
}

pub fn comparison_fft_len(a: usize, b: usize) -> usize {
    next_pow2(2 * a.max(b)).max(MIN_FFT)
}

/// Compares a basis with the equivalent wavelet filter of the given DWT level.
pub fn compare_wavelet_basis(basis: &[f64], filters: &WaveletFilterPair, level: usize) -> Result<WaveletComparison> {
    if !(1..=MAX_COMPARE_LEVEL).contains(&level) {
        return Err(Error::invalid(format!("level must be in 1..={MAX_COMPARE_LEVEL}, got {level}")));
    }
    crate::dsp::ensure_signal("basis", basis)?;
    let (_, wavelet) = equivalent_filters(filters, level)?;
    let n_fft = comparison_fft_len(basis.len(), wavelet.len());
    Ok(WaveletComparison {
        level,
        n_fft,
        time_correlation: max_normalized_xcorr(basis, &wavelet)?,
        spectral_overlap: spectral_overlap(basis, &wavelet, n_fft)?,
        wavelet,
    })
}
