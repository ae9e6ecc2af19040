//! Convolution, cross-correlation, spectra and the wavelet transform on a
//! damped sinusoid.

use std::f64::consts::PI;

use hifsig::dsp::{
    convolve_full, cross_correlate_valid, dwt_multilevel, idwt_multilevel, power_spectrum, WaveletFilterPair,
};

fn main() -> hifsig::Result<()> {
    let fs = 2.0e6;
    let pulse: Vec<f64> = (0..200)
        .map(|i| {
            let t = i as f64 / fs;
            (-3e4 * t).exp() * (2.0 * PI * 150e3 * t).sin()
        })
        .collect();
    let mut x = vec![0.0; 4096];
    x[1200..1400].copy_from_slice(&pulse);

    let xc = cross_correlate_valid(&x, &pulse)?;
    let lag = (0..xc.len()).max_by(|a, b| xc[*a].total_cmp(&xc[*b])).unwrap_or(0);
    println!("pulse found at sample {lag}");

    let echo = convolve_full(&[1.0, 0.0, 0.0, -0.5], &pulse)?;
    println!("echo has {} samples", echo.len());

    println!("spectral peak {:.1} kHz", power_spectrum(&x, fs)?.peak_frequency() / 1e3);

    let filters = WaveletFilterPair::sym4();
    let bands = dwt_multilevel(&x, 4, &filters)?;
    let energy: f64 = x.iter().map(|v| v * v).sum();
    for (k, band) in bands.iter_bands().enumerate() {
        let e: f64 = band.iter().map(|v| v * v).sum();
        let name = if k < bands.levels() { format!("d{}", k + 1) } else { format!("a{}", bands.levels()) };
        println!("{name}: {:5.1}% of the energy", 100.0 * e / energy);
    }
    let back = idwt_multilevel(&bands, &filters)?;
    let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("reconstruction error {err:.1e}");
    Ok(())
}
