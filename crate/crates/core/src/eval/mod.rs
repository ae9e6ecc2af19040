//! Dictionary evaluation: tree-ensemble cross-validation, single-split Gini
//! separability per feature, and basis-versus-wavelet comparison.

mod compare;
mod cv;
mod forest;
mod split;

pub use compare::{
    compare_wavelet_basis, comparison_fft_len, max_normalized_xcorr, spectral_overlap, WaveletComparison,
    MAX_COMPARE_LEVEL,
};
pub use cv::{cross_validate, kfold_cv, stratified_folds, CVReport, FoldResult};
pub use forest::{train_forest, Ensemble, ForestModel, ForestParams, Node, Tree};
pub use split::{best_split, gini_impurity, rank_bases, SeparabilityEntry, SeparabilityReport, Split};
