//! Periodized multilevel discrete wavelet transform.

use serde::{Deserialize, Serialize};

use crate::dsp::conv::{convolve_direct, ensure_signal};
use crate::error::{Error, Result};

/// Symlet-4 decomposition lowpass filter.
pub const SYM4_LOWPASS: [f64; 8] = [
    -0.075_765_714_789_273_33,
    -0.029_635_527_645_998_51,
    0.49761866763201545,
    0.803_738_751_805_916_1,
    0.29785779560527736,
    -0.099_219_543_576_847_22,
    -0.012603967262037833,
    0.032_223_100_604_042_7,
];

/// Orthogonal two-channel filter bank; the highpass is the quadrature mirror of the lowpass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletFilterPair {
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFilterPair {
    pub fn sym4() -> Self {
        Self::from_lowpass(&SYM4_LOWPASS).expect("sym4 satisfies the orthogonality checks")
    }

    /// Builds the pair from an orthonormal lowpass, checking `sum = sqrt(2)` and unit energy.
    pub fn from_lowpass(lowpass: &[f64]) -> Result<Self> {
        ensure_signal("lowpass", lowpass)?;
        if !lowpass.len().is_multiple_of(2) {
            return Err(Error::invalid("lowpass length must be even"));
        }
        let sum: f64 = lowpass.iter().sum();
        let energy: f64 = lowpass.iter().map(|v| v * v).sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-10 || (energy - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "lowpass is not orthonormal (sum {sum}, energy {energy})"
            )));
        }
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Ok(WaveletFilterPair {
            lowpass: lowpass.to_vec(),
            highpass,
        })
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// Detail bands (finest first) plus the final approximation band.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBands {
    pub details: Vec<Vec<f64>>,
    pub approximation: Vec<f64>,
}

impl WaveletBands {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Bands in feature order: detail 1..=L, then approximation.
    pub fn iter_bands(&self) -> impl Iterator<Item = &[f64]> {
        self.details
            .iter()
            .map(Vec::as_slice)
            .chain(std::iter::once(self.approximation.as_slice()))
    }
}

/// Pyramid analysis with periodic extension at every level.
pub fn dwt_multilevel(x: &[f64], levels: usize, filters: &WaveletFilterPair) -> Result<WaveletBands> {
    ensure_signal("x", x)?;
    if levels == 0 {
        return Err(Error::invalid("levels must be at least 1"));
    }
    let flen = filters.len();
    let mut n = x.len();
    for level in 1..=levels {
        if !n.is_multiple_of(2) || n < flen {
            return Err(Error::invalid(format!(
                "signal of length {} too short for {levels} levels (length {n} at level {level})",
                x.len()
            )));
        }
        n /= 2;
    }

    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, filters);
        details.push(d);
        approx = a;
    }
    Ok(WaveletBands {
        details,
        approximation: approx,
    })
}

fn analysis_step(x: &[f64], filters: &WaveletFilterPair) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        let (mut sa, mut sd) = (0.0, 0.0);
        for (m, (lo, hi)) in filters.lowpass.iter().zip(&filters.highpass).enumerate() {
            let v = x[(2 * k + m) % n];
            sa += lo * v;
            sd += hi * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

/// Inverse of [`dwt_multilevel`] for bands produced with the same filters.
pub fn idwt_multilevel(bands: &WaveletBands, filters: &WaveletFilterPair) -> Result<Vec<f64>> {
    let mut approx = bands.approximation.clone();
    for (level, d) in bands.details.iter().enumerate().rev() {
        if d.len() != approx.len() {
            return Err(Error::invalid(format!(
                "detail band {} has length {}, approximation has {}",
                level + 1,
                d.len(),
                approx.len()
            )));
        }
        approx = synthesis_step(&approx, d, filters);
    }
    Ok(approx)
}

fn synthesis_step(a: &[f64], d: &[f64], filters: &WaveletFilterPair) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for k in 0..a.len() {
        for (m, (lo, hi)) in filters.lowpass.iter().zip(&filters.highpass).enumerate() {
            x[(2 * k + m) % n] += lo * a[k] + hi * d[k];
        }
    }
    x
}

/// Equivalent single-rate filters of the `level`-deep cascade, `(scaling, wavelet)`.
///
/// Correlating a signal with the wavelet filter and keeping every `2^level`-th
/// output reproduces the level-`level` detail band (away from the periodic wrap).
pub fn equivalent_filters(filters: &WaveletFilterPair, level: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if level == 0 {
        return Err(Error::invalid("level must be at least 1"));
    }
    let mut scaling = vec![1.0];
    let mut wavelet = Vec::new();
    for j in 0..level {
        let up = 1usize << j;
        let lo = upsample(&filters.lowpass, up);
        let hi = upsample(&filters.highpass, up);
        wavelet = convolve_direct(&scaling, &hi);
        scaling = convolve_direct(&scaling, &lo);
    }
    Ok((scaling, wavelet))
}

fn upsample(h: &[f64], factor: usize) -> Vec<f64> {
    let mut out = vec![0.0; (h.len() - 1) * factor + 1];
    for (i, v) in h.iter().enumerate() {
        out[i * factor] = *v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym4_invariants() {
        let f = WaveletFilterPair::sym4();
        let sum: f64 = f.lowpass().iter().sum();
        let energy: f64 = f.lowpass().iter().map(|v| v * v).sum();
        assert!((sum - 2f64.sqrt()).abs() < 1e-10);
        assert!((energy - 1.0).abs() < 1e-10);
        let l = f.len();
        for k in 0..l {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(f.highpass()[k], sign * f.lowpass()[l - 1 - k]);
        }
        // double-shift orthogonality
        for shift in [2usize, 4, 6] {
            let dot: f64 = (0..l - shift).map(|m| f.lowpass()[m] * f.lowpass()[m + shift]).sum();
            assert!(dot.abs() < 1e-10, "shift {shift}: {dot}");
        }
    }

    #[test]
    fn non_orthonormal_lowpass_rejected() {
        assert!(WaveletFilterPair::from_lowpass(&[1.0, 1.0]).is_err());
        assert!(WaveletFilterPair::from_lowpass(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn constant_has_zero_details() {
        let f = WaveletFilterPair::sym4();
        let bands = dwt_multilevel(&[3.25; 256], 4, &f).unwrap();
        for d in &bands.details {
            assert!(d.iter().all(|c| c.abs() < 1e-10));
        }
    }

    #[test]
    fn too_short_for_depth() {
        let f = WaveletFilterPair::sym4();
        assert!(dwt_multilevel(&[1.0; 32], 4, &f).is_err());
        assert!(dwt_multilevel(&[1.0; 128], 4, &f).is_ok());
        assert!(dwt_multilevel(&[1.0; 130], 4, &f).is_err());
        assert!(dwt_multilevel(&[1.0; 128], 0, &f).is_err());
    }

    #[test]
    fn zeroed_details_of_constant_reconstruct_constant() {
        let f = WaveletFilterPair::sym4();
        let mut bands = dwt_multilevel(&[-1.5; 64], 3, &f).unwrap();
        bands.details.iter_mut().for_each(|d| d.iter_mut().for_each(|c| *c = 0.0));
        let x = idwt_multilevel(&bands, &f).unwrap();
        let worst = x.iter().map(|v| (v + 1.5).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn inconsistent_band_lengths() {
        let f = WaveletFilterPair::sym4();
        let bands = WaveletBands {
            details: vec![vec![0.0; 8], vec![0.0; 3]],
            approximation: vec![0.0; 4],
        };
        assert!(idwt_multilevel(&bands, &f).is_err());
    }

    #[test]
    fn equivalent_filter_reproduces_detail_band() {
        let f = WaveletFilterPair::sym4();
        let x: Vec<f64> = (0..512).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let bands = dwt_multilevel(&x, 3, &f).unwrap();
        let (_, g3) = equivalent_filters(&f, 3).unwrap();
        assert_eq!(g3.len(), 50);
        // coefficients whose support does not wrap
        for k in 0..(512 - 50) / 8 {
            let direct: f64 = g3.iter().enumerate().map(|(m, g)| g * x[8 * k + m]).sum();
            assert!((direct - bands.details[2][k]).abs() < 1e-10);
        }
    }
}
