//! Shift-invariant sparse coding for high-frequency fault recordings.
//!
//! The crate learns convolutional dictionaries from sampled sweeps, turns
//! sweeps into rectified cross-correlation features, and scores the learned
//! bases with tree-ensemble cross-validation and single-split Gini
//! separability. A synthetic corpus generator with planted ground truth
//! stands in for field recordings.

pub mod cli;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod sisc;
pub mod synth;

pub use error::{Error, Result};
