//! Builds combined learned-basis and wavelet features for a fault corpus,
//! ranks them, and prints the first CSV lines.

use hifsig::eval::rank_bases;
use hifsig::features::{build_feature_matrix, FeatureSpec, WaveletSpec};
use hifsig::sisc::{learn_from_signals, TrainConfig};
use hifsig::synth::{gen_corpus, SynthConfig};

fn main() -> hifsig::Result<()> {
    let corpus = gen_corpus(&SynthConfig { sweeps_per_class: 60, seed: 12, ..SynthConfig::default() })?;
    let windows = corpus.windows(4000, 48, 2)?;
    let signals: Vec<&[f64]> = windows.sweeps.iter().map(|s| s.samples.as_slice()).collect();
    let cfg = TrainConfig { n_bases: 8, outer_iterations: 15, seed: 5, ..TrainConfig::default() };
    let (dict, _) = learn_from_signals(&signals, &cfg, |_| {})?;

    let spec = FeatureSpec::sisc(&dict).with_wavelet(WaveletSpec::default());
    let features = build_feature_matrix(&corpus, &spec)?;
    print!("{}", rank_bases(&features)?.to_table());
    for line in features.to_csv().lines().take(3) {
        println!("{}", &line[..line.len().min(120)]);
    }
    Ok(())
}
