use serde::{Deserialize, Serialize};

use crate::dsp::conv::{ensure_signal, Plan};
use crate::error::{Error, Result};

/// One-sided magnitude spectrum with its frequency axis in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    /// Frequency of the largest magnitude bin.
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .magnitudes
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        self.frequencies[i]
    }
}

/// DFT magnitude of the mean-removed signal, bins `0..=len/2`.
pub fn power_spectrum(x: &[f64], sample_rate: f64) -> Result<Spectrum> {
    ensure_signal("x", x)?;
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::invalid(format!("sample rate must be positive, got {sample_rate}")));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let n = x.len();
    let spec = Plan::new(n).forward(&centered);
    let df = sample_rate / n as f64;
    Ok(Spectrum {
        frequencies: (0..spec.len()).map(|k| k as f64 * df).collect(),
        magnitudes: spec.iter().map(|c| c.norm()).collect(),
    })
}

/// Magnitude of the `n_fft`-point zero-padded DFT (no mean removal), bins `0..=n_fft/2`.
pub fn magnitude_response(h: &[f64], n_fft: usize) -> Result<Vec<f64>> {
    ensure_signal("h", h)?;
    if n_fft < h.len() {
        return Err(Error::invalid(format!("n_fft {n_fft} shorter than filter {}", h.len())));
    }
    Ok(Plan::new(n_fft).forward(h).iter().map(|c| c.norm()).collect())
}
