//! Shift-invariant sparse coding: each signal is modeled as a sparse sum of
//! shifted copies of a few short bases,
//! `x ~ sum_j a_j * s_j`, fitted by minimizing
//! `|x - sum_j a_j * s_j|^2 + beta * sum_j |s_j|_1` subject to `|a_j|^2 <= c`.

mod code;
mod dictionary;
mod learn;
mod matching;
mod objective;
mod solver;
mod update;

pub use code::{Activation, SparseCode};
pub use dictionary::{fmt_real, Dictionary, DictionaryMeta, DICTIONARY_FORMAT_VERSION, NORM_SLACK};
pub use learn::{
    default_beta, learn_dictionary, learn_from_signals, IterationRecord, TrainConfig, TrainHistory,
    DEAD_BASIS_PATIENCE, DEFAULT_BATCH, FULL_BATCH_LIMIT, MIN_BASIS_LEN,
};
pub use matching::{basis_match_score, circular_similarity, BasisMatch, MatchReport};
pub use objective::{objective, reconstruct, sweep_objective, Objective};
pub use solver::{infer_codes, infer_codes_with, CodeSolution, SolverMethod, SolverOptions};
pub use update::{update_dictionary, UpdateOptions, UpdateStats};
