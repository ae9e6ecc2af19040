//! Compares every basis of a learned dictionary with the sym4 equivalent
//! wavelet filters of levels 1 to 4, in time and in frequency.
//!
//! ```text
//! cargo run --release --example wavelet_compare
//! ```

use hifsig::dsp::{power_spectrum, WaveletFilterPair};
use hifsig::eval::{compare_wavelet_basis, MAX_COMPARE_LEVEL};
use hifsig::sisc::{learn_from_signals, TrainConfig};
use hifsig::synth::{gen_corpus, SynthConfig};

fn main() -> hifsig::Result<()> {
    let corpus = gen_corpus(&SynthConfig { sweeps_per_class: 40, seed: 9, ..SynthConfig::default() })?;
    let windows = corpus.windows(4000, 64, 1)?;
    let signals: Vec<&[f64]> = windows.sweeps.iter().map(|s| s.samples.as_slice()).collect();
    let cfg = TrainConfig { n_bases: 6, outer_iterations: 15, seed: 3, ..TrainConfig::default() };
    let (dict, _) = learn_from_signals(&signals, &cfg, |_| {})?;

    let filters = WaveletFilterPair::sym4();
    println!("basis  peak kHz  best level  time corr  spectral overlap");
    for (j, basis) in dict.bases().iter().enumerate() {
        let peak = power_spectrum(basis, corpus.sample_rate)?.peak_frequency();
        let best = (1..=MAX_COMPARE_LEVEL)
            .map(|level| compare_wavelet_basis(basis, &filters, level))
            .collect::<hifsig::Result<Vec<_>>>()?
            .into_iter()
            .max_by(|a, b| a.spectral_overlap.total_cmp(&b.spectral_overlap))
            .expect("at least one level");
        println!(
            "{:>5}  {:>8.1}  {:>10}  {:>9.3}  {:>16.3}",
            j + 1,
            peak / 1e3,
            best.level,
            best.time_correlation,
            best.spectral_overlap
        );
    }
    Ok(())
}
