//! Learns a dictionary from a planted corpus and checks how well the
//! hidden bases are recovered.
//!
//! ```text
//! cargo run --example planted_recovery
//! ```

use hifsig::sisc::{basis_match_score, learn_dictionary, TrainConfig};
use hifsig::synth::{gen_planted_corpus, PlantedConfig};

fn main() -> hifsig::Result<()> {
    let planted = PlantedConfig { seed: 7, ..PlantedConfig::default() };
    let (corpus, truth) = gen_planted_corpus(&planted)?;
    println!(
        "{} sweeps of {} samples, noise sigma {:.4}",
        corpus.len(),
        corpus.sweep_len,
        truth.noise_sigma
    );

    let cfg = TrainConfig {
        n_bases: planted.n_bases,
        basis_len: planted.basis_len,
        outer_iterations: 60,
        objective_tolerance: 0.0,
        seed: 1,
        ..TrainConfig::default()
    };
    let t0 = std::time::Instant::now();
    let (dict, history) = learn_dictionary(&corpus, &cfg)?;
    println!("beta {:.4}, {} iterations in {:.1?}", history.beta, history.records.len(), t0.elapsed());
    for r in history.records.iter().step_by(10) {
        println!("  iter {:3}  objective {:.6e}  nnz/sweep {:.1}", r.iteration, r.objective, r.mean_nnz);
    }

    let report = basis_match_score(&dict, &truth.dictionary)?;
    for m in &report.matches {
        println!("truth basis {} <- learned {}  similarity {:.4}", m.truth, m.learned, m.score);
    }
    Ok(())
}
