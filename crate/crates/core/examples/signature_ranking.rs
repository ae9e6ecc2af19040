//! Ranks learned bases by how well a single threshold on their feature
//! separates fault from non-fault sweeps, on a planted corpus where one
//! pattern occurs only in faults.
//!
//! ```text
//! cargo run --release --example signature_ranking
//! ```

use hifsig::eval::rank_bases;
use hifsig::features::{build_feature_matrix, FeatureSpec};
use hifsig::sisc::{basis_match_score, learn_dictionary, TrainConfig};
use hifsig::synth::{gen_planted_corpus, PlantedConfig};

fn main() -> hifsig::Result<()> {
    let planted = PlantedConfig { signature_basis: Some(0), seed: 21, ..PlantedConfig::default() };
    let (corpus, truth) = gen_planted_corpus(&planted)?;
    let cfg = TrainConfig {
        n_bases: planted.n_bases,
        basis_len: planted.basis_len,
        outer_iterations: 40,
        seed: 2,
        ..TrainConfig::default()
    };
    let (dict, _) = learn_dictionary(&corpus, &cfg)?;

    let matched = basis_match_score(&dict, &truth.dictionary)?;
    for m in &matched.matches {
        println!("planted {} ~ basis_{} ({:.3})", m.truth, m.learned + 1, m.score);
    }
    let features = build_feature_matrix(&corpus, &FeatureSpec::sisc(&dict))?;
    print!("{}", rank_bases(&features)?.to_table());
    Ok(())
}
