//! Numerical primitives: FFT convolution, cross-correlation, spectra and the
//! periodized discrete wavelet transform.

mod conv;
mod spectrum;
mod wavelet;

pub use conv::{convolve_fft, convolve_full, cross_correlate_valid, next_pow2, FilterBank, DIRECT_CROSSOVER};
pub use spectrum::{magnitude_response, power_spectrum, Spectrum};
pub use wavelet::{
    dwt_multilevel, equivalent_filters, idwt_multilevel, WaveletBands, WaveletFilterPair, SYM4_LOWPASS,
};

pub(crate) use conv::ensure_signal;
