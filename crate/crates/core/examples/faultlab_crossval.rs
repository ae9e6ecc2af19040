//! Synthetic fault corpus, dictionaries of several sizes learned on cropped
//! windows, and 10-fold cross-validation of a random forest on the
//! resulting features.
//!
//! ```text
//! cargo run --release --example faultlab_crossval -- 8 128
//! ```

use std::time::Instant;

use hifsig::eval::{kfold_cv, CVReport, ForestParams};
use hifsig::features::{build_feature_matrix, FeatureSpec};
use hifsig::sisc::{learn_from_signals, TrainConfig};
use hifsig::synth::{gen_corpus, SynthConfig};

fn main() -> hifsig::Result<()> {
    let sizes: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sizes = if sizes.is_empty() { vec![8, 128] } else { sizes };

    let t0 = Instant::now();
    let corpus = gen_corpus(&SynthConfig { seed: 2024, ..SynthConfig::default() })?;
    println!("{} sweeps in {:.1?}", corpus.len(), t0.elapsed());
    let windows = corpus.windows(4000, 64, 5)?;
    let signals: Vec<&[f64]> = windows.sweeps.iter().map(|s| s.samples.as_slice()).collect();

    println!("{}", CVReport::summary_header());
    for n in sizes {
        let t = Instant::now();
        let cfg = TrainConfig { n_bases: n, outer_iterations: 20, seed: 11, ..TrainConfig::default() };
        let (dict, history) = learn_from_signals(&signals, &cfg, |_| {})?;
        let learn_time = t.elapsed();
        let features = build_feature_matrix(&corpus, &FeatureSpec::sisc(&dict))?;
        let report = kfold_cv(&features, 10, &ForestParams::default(), 3)?;
        println!(
            "{}    (learn {:.1?} over {} iterations, total {:.1?})",
            report.summary_row(&n.to_string()),
            learn_time,
            history.records.len(),
            t.elapsed()
        );
    }
    Ok(())
}
