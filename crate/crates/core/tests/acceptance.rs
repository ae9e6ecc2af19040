//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_best_split, dense_objective, direct_conv, lasso_cd, synthesis_matrix};
use hifsig::dsp::{convolve_fft, dwt_multilevel, idwt_multilevel, WaveletFilterPair};
use hifsig::eval::{best_split, gini_impurity, kfold_cv, rank_bases, CVReport, ForestParams};
use hifsig::features::{build_feature_matrix, FeatureMatrix, FeatureSpec};
use hifsig::sisc::{
    basis_match_score, infer_codes, learn_dictionary, learn_from_signals, Dictionary, SolverOptions, TrainConfig,
    TrainHistory,
};
use hifsig::synth::{gen_corpus, gen_planted_corpus, PlantedConfig, PlantedTruth, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn failed(name: &'static str, err: hifsig::Error) -> Outcome {
    check(name, false, format!("error: {err}"))
}

struct Recovery {
    dict: Dictionary,
    history: TrainHistory,
    truth: PlantedTruth,
    elapsed: Duration,
}

fn recovery_run() -> hifsig::Result<Recovery> {
    let planted = PlantedConfig {
        n_bases: 4,
        basis_len: 250,
        sweeps: 200,
        sweep_len: 4000,
        activations_per_sweep: 3,
        snr_db: 10.0,
        seed: 7,
        ..PlantedConfig::default()
    };
    let (corpus, truth) = gen_planted_corpus(&planted)?;
    let cfg = TrainConfig {
        n_bases: 4,
        basis_len: 250,
        outer_iterations: 60,
        objective_tolerance: 0.0,
        seed: 1,
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let (dict, history) = learn_dictionary(&corpus, &cfg)?;
    Ok(Recovery {
        dict,
        history,
        truth,
        elapsed: t0.elapsed(),
    })
}

fn recovery(r: &Recovery) -> hifsig::Result<Outcome> {
    let report = basis_match_score(&r.dict, &r.truth.dictionary)?;
    let scores: Vec<String> = report.matches.iter().map(|m| format!("{:.3}", m.score)).collect();
    Ok(check(
        "dictionary recovery",
        report.min_score() >= 0.8 && r.elapsed <= Duration::from_secs(600),
        format!("match scores [{}], learned in {:.1?}", scores.join(", "), r.elapsed),
    ))
}

fn descent(r: &Recovery) -> Outcome {
    let recs = &r.history.records;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut prev = f64::INFINITY;
    for rec in recs {
        worst_rise = worst_rise.max(rec.objective - rec.objective_before).max(rec.objective - prev);
        prev = rec.objective;
    }
    let max_norm = recs.iter().map(|r| r.max_norm_sq).fold(0.0, f64::max);
    check(
        "monotone descent",
        recs.len() >= 50 && worst_rise <= 1e-9 && max_norm <= 1.0 + 1e-9,
        format!(
            "{} iterations, largest objective increase {worst_rise:.3e}, largest |a|^2 {max_norm:.12}",
            recs.len()
        ),
    )
}

fn small_instance() -> hifsig::Result<Outcome> {
    let planted = PlantedConfig {
        n_bases: 2,
        basis_len: 16,
        sweeps: 20,
        sweep_len: 16,
        activations_per_sweep: 1,
        seed: 3,
        ..PlantedConfig::default()
    };
    let (corpus, _) = gen_planted_corpus(&planted)?;
    let cfg = TrainConfig {
        n_bases: 2,
        basis_len: 16,
        outer_iterations: 30,
        seed: 4,
        ..TrainConfig::default()
    };
    let (dict, history) = learn_dictionary(&corpus, &cfg)?;
    let beta = history.beta;
    let opts = SolverOptions {
        tolerance: 1e-14,
        max_iterations: 100_000,
        ..SolverOptions::default()
    };
    let cols = synthesis_matrix(dict.bases(), 16);
    assert_eq!(cols.len(), 2);
    let (mut ours, mut dense) = (0.0, 0.0);
    for sweep in &corpus.sweeps {
        ours += infer_codes(&sweep.samples, &dict, beta, &opts)?.objective.total;
        dense += dense_objective(&sweep.samples, &cols, &lasso_cd(&sweep.samples, &cols, beta), beta);
    }
    let rel = ((ours - dense) / dense).abs();
    Ok(check(
        "small-instance equivalence",
        rel <= 1e-6,
        format!("shift-invariant {ours:.12e} vs dense {dense:.12e}, relative gap {rel:.2e}"),
    ))
}

fn dsp_exactness() -> hifsig::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut gauss = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
    let mut conv_err: f64 = 0.0;
    for _ in 0..1000 {
        let (a, x) = (gauss(250), gauss(4000));
        let fast = convolve_fft(&a, &x);
        let slow = direct_conv(&a, &x);
        conv_err = fast.iter().zip(&slow).map(|(u, v)| (u - v).abs()).fold(conv_err, f64::max);
    }
    let filters = WaveletFilterPair::sym4();
    let (mut rt_err, mut energy_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let x = gauss(1024);
        let bands = dwt_multilevel(&x, 4, &filters)?;
        let back = idwt_multilevel(&bands, &filters)?;
        rt_err = x.iter().zip(&back).map(|(u, v)| (u - v).abs()).fold(rt_err, f64::max);
        let e: f64 = x.iter().map(|v| v * v).sum();
        let eb: f64 = bands.iter_bands().flatten().map(|v| v * v).sum();
        energy_err = energy_err.max(((e - eb) / e).abs());
    }
    Ok(check(
        "dsp exactness",
        conv_err < 1e-9 && rt_err < 1e-10 && energy_err < 1e-9,
        format!("convolution {conv_err:.2e}, wavelet round trip {rt_err:.2e}, energy {energy_err:.2e}"),
    ))
}

fn gini_oracle() -> hifsig::Result<Outcome> {
    let hand = gini_impurity(&[6, 0])? == 0.0 && gini_impurity(&[3, 3])? == 0.5 && gini_impurity(&[1, 3])? == 0.375;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut mismatches = 0;
    for i in 0..100 {
        let n = rng.random_range(2..=200);
        let coarse = i % 2 == 0;
        let x: Vec<f64> = (0..n)
            .map(|_| if coarse { rng.random_range(0..15) as f64 } else { rng.sample(StandardNormal) })
            .collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let s = best_split(&x, &y)?;
        let agree = match brute_best_split(&x, &y) {
            Some((thr, g, acc)) if !s.degenerate => {
                s.threshold == thr && (s.weighted_gini - g).abs() < 1e-12 && s.separability == acc
            }
            _ => s.degenerate,
        };
        if !agree {
            mismatches += 1;
        }
    }
    Ok(check(
        "gini oracle",
        hand && mismatches == 0,
        format!("hand values {}, {mismatches} of 100 random instances disagree", if hand { "exact" } else { "wrong" }),
    ))
}

struct Faultlab {
    /// `(n_bases, dictionary json, report)` per size.
    runs: Vec<(usize, String, CVReport)>,
    features_8: FeatureMatrix,
    elapsed: Duration,
}

const FAULTLAB_SIZES: [usize; 2] = [8, 128];

fn faultlab_run() -> hifsig::Result<Faultlab> {
    let t0 = Instant::now();
    let corpus = gen_corpus(&SynthConfig {
        sweeps_per_class: 566,
        seed: 2024,
        ..SynthConfig::default()
    })?;
    let windows = corpus.windows(4000, 64, 5)?;
    let signals: Vec<&[f64]> = windows.sweeps.iter().map(|s| s.samples.as_slice()).collect();
    let mut runs = Vec::new();
    let mut features_8 = None;
    for n in FAULTLAB_SIZES {
        let cfg = TrainConfig {
            n_bases: n,
            outer_iterations: 20,
            seed: 11,
            ..TrainConfig::default()
        };
        let (dict, _) = learn_from_signals(&signals, &cfg, |_| {})?;
        let features = build_feature_matrix(&corpus, &FeatureSpec::sisc(&dict))?;
        let report = kfold_cv(&features, 10, &ForestParams::default(), 3)?;
        runs.push((n, dict.to_json(), report));
        if n == 8 {
            features_8 = Some(features);
        }
    }
    Ok(Faultlab {
        runs,
        features_8: features_8.expect("8-basis run"),
        elapsed: t0.elapsed(),
    })
}

fn trend(f: &Faultlab) -> Outcome {
    let acc = |n: usize| f.runs.iter().find(|r| r.0 == n).map(|r| r.2.mean_accuracy).unwrap_or(f64::NAN);
    let (a8, a128) = (acc(8), acc(128));
    let rows: Vec<String> = f
        .runs
        .iter()
        .map(|(n, _, r)| {
            format!("{n} bases: acc {:.2}% tpr {:.2}% tnr {:.2}%", 100.0 * r.mean_accuracy, 100.0 * r.mean_tpr, 100.0 * r.mean_tnr)
        })
        .collect();
    check(
        "basis-count trend",
        a8 >= 0.90 && a8 >= a128 && f.elapsed <= Duration::from_secs(3600),
        format!("{}; total {:.1?}", rows.join("; "), f.elapsed),
    )
}

fn signature_ranking() -> hifsig::Result<Outcome> {
    let planted = PlantedConfig {
        signature_basis: Some(0),
        seed: 21,
        ..PlantedConfig::default()
    };
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
    let signature = matched.matches.iter().find(|m| m.truth == 0).expect("every truth basis is matched");
    let features = build_feature_matrix(&corpus, &FeatureSpec::sisc(&dict))?;
    let ranking = rank_bases(&features)?;
    let (first, second) = (&ranking.entries[0], &ranking.entries[1]);
    let margin = first.split.separability - second.split.separability;
    Ok(check(
        "signature ranking",
        first.column == signature.learned && margin >= 5.0,
        format!(
            "signature matches learned basis {} (score {:.3}); top {} at {:.2}%, runner-up {} at {:.2}%",
            signature.learned + 1,
            signature.score,
            first.name,
            first.split.separability,
            second.name,
            second.split.separability
        ),
    ))
}

fn permutation_null(f: &Faultlab) -> hifsig::Result<Outcome> {
    let fm = &f.features_8;
    let mut labels = fm.labels().to_vec();
    use rand::seq::SliceRandom;
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(77));
    let report = kfold_cv(&fm.with_labels(labels)?, 10, &ForestParams::default(), 3)?;
    let n = fm.n_rows() as f64;
    let band = 3.0 * (0.25 / n).sqrt();
    let acc = report.mean_accuracy;
    Ok(check(
        "permutation null",
        (acc - 0.5).abs() <= band,
        format!("accuracy {:.2}% with band [{:.2}%, {:.2}%]", 100.0 * acc, 100.0 * (0.5 - band), 100.0 * (0.5 + band)),
    ))
}

fn determinism(first: &Recovery, faultlab: &Faultlab) -> hifsig::Result<Outcome> {
    let again = recovery_run()?;
    let dict_same = again.dict.to_json() == first.dict.to_json() && again.history.to_csv() == first.history.to_csv();
    let rerun = faultlab_run()?;
    let reports_same = rerun.runs.len() == faultlab.runs.len()
        && rerun
            .runs
            .iter()
            .zip(&faultlab.runs)
            .all(|(a, b)| a.0 == b.0 && a.1 == b.1 && a.2.to_json() == b.2.to_json());
    Ok(check(
        "determinism",
        dict_same && reports_same,
        format!("recovery outputs identical: {dict_same}; faultlab dictionaries and reports identical: {reports_same}"),
    ))
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let mut report = |o: Outcome| {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        outcomes.push(o.pass);
    };

    let recovered = recovery_run();
    match &recovered {
        Ok(r) => {
            report(recovery(r).unwrap_or_else(|e| failed("dictionary recovery", e)));
            report(descent(r));
        }
        Err(e) => {
            report(check("dictionary recovery", false, format!("error: {e}")));
            report(check("monotone descent", false, format!("error: {e}")));
        }
    }
    report(small_instance().unwrap_or_else(|e| failed("small-instance equivalence", e)));
    report(dsp_exactness().unwrap_or_else(|e| failed("dsp exactness", e)));
    report(gini_oracle().unwrap_or_else(|e| failed("gini oracle", e)));

    let faultlab = faultlab_run();
    match &faultlab {
        Ok(f) => report(trend(f)),
        Err(e) => report(check("basis-count trend", false, format!("error: {e}"))),
    }
    report(signature_ranking().unwrap_or_else(|e| failed("signature ranking", e)));
    match &faultlab {
        Ok(f) => report(permutation_null(f).unwrap_or_else(|e| failed("permutation null", e))),
        Err(e) => report(check("permutation null", false, format!("error: {e}"))),
    }
    match (&recovered, &faultlab) {
        (Ok(r), Ok(f)) => report(determinism(r, f).unwrap_or_else(|e| failed("determinism", e))),
        _ => report(check("determinism", false, "a first run failed".into())),
    }

    let failures = outcomes.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", outcomes.len() - failures, outcomes.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
