//! Generates a small fault corpus, writes it to disk, reads it back and
//! summarizes the band energy of each class.

use hifsig::dsp::power_spectrum;
use hifsig::synth::{gen_corpus, load_corpus, save_corpus, Label, SynthConfig};

fn main() -> hifsig::Result<()> {
    let cfg = SynthConfig { sweeps_per_class: 20, seed: 1, ..SynthConfig::default() };
    let corpus = gen_corpus(&cfg)?;
    let dir = std::env::temp_dir().join("hifsig-corpus-example");
    save_corpus(&corpus, &dir)?;
    let back = load_corpus(&dir)?;
    assert_eq!(back, corpus);
    println!("{} sweeps of {} samples at {} MHz in {}", back.len(), back.sweep_len, back.sample_rate / 1e6, dir.display());

    for label in [Label::Fault, Label::NonFault] {
        let subset = back.with_label(label);
        let mut total = 0.0;
        for sweep in &subset.sweeps {
            let s = power_spectrum(&sweep.samples, sweep.sample_rate)?;
            total += s
                .frequencies
                .iter()
                .zip(&s.magnitudes)
                .filter(|(f, _)| (40e3..=200e3).contains(*f))
                .map(|(_, m)| m * m)
                .sum::<f64>();
        }
        println!("{:>9}: mean 40-200 kHz energy {:.3e}", label.as_str(), total / subset.len() as f64);
    }
    Ok(())
}
