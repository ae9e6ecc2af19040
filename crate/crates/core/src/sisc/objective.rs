use serde::{Deserialize, Serialize};

use super::{Dictionary, SparseCode};
use crate::error::{Error, Result};

/// The two terms of the shift-invariant sparse coding objective and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Objective {
    pub total: f64,
    pub residual: f64,
    pub sparsity: f64,
}

impl Objective {
    fn add(self, other: Objective) -> Objective {
        Objective {
            total: self.total + other.total,
            residual: self.residual + other.residual,
            sparsity: self.sparsity + other.sparsity,
        }
    }
}

pub(crate) fn check_shapes(dict: &Dictionary, code: &SparseCode, p: usize) -> Result<()> {
    let q = dict.basis_len();
    if q > p {
        return Err(Error::invalid(format!("basis length {q} exceeds signal length {p}")));
    }
    if code.n_bases() != dict.len() {
        return Err(Error::invalid(format!(
            "code has {} bases, dictionary has {}",
            code.n_bases(),
            dict.len()
        )));
    }
    if code.shifts() != p - q + 1 {
        return Err(Error::invalid(format!(
            "code covers {} shifts, expected {}",
            code.shifts(),
            p - q + 1
        )));
    }
    Ok(())
}

/// `sum_j a_j * s_j`, length `p` (the full convolution of a length-`p - q + 1` code with a length-`q` basis).
pub fn reconstruct(dict: &Dictionary, code: &SparseCode, p: usize) -> Result<Vec<f64>> {
    check_shapes(dict, code, p)?;
    Ok(reconstruct_unchecked(dict.bases(), code, p))
}

pub(crate) fn reconstruct_unchecked(bases: &[Vec<f64>], code: &SparseCode, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for (a, list) in bases.iter().zip(code.iter_bases()) {
        for act in list {
            for (o, v) in out[act.shift..act.shift + a.len()].iter_mut().zip(a) {
                *o += v * act.value;
            }
        }
    }
    out
}

pub(crate) fn sweep_objective_unchecked(x: &[f64], bases: &[Vec<f64>], code: &SparseCode, beta: f64) -> Objective {
    let rec = reconstruct_unchecked(bases, code, x.len());
    let residual: f64 = x.iter().zip(&rec).map(|(u, v)| (u - v) * (u - v)).sum();
    let sparsity = beta * code.l1_norm();
    Objective {
        total: residual + sparsity,
        residual,
        sparsity,
    }
}

/// Objective of one sweep.
pub fn sweep_objective(x: &[f64], dict: &Dictionary, code: &SparseCode, beta: f64) -> Result<Objective> {
    check_shapes(dict, code, x.len())?;
    Ok(sweep_objective_unchecked(x, dict.bases(), code, beta))
}

/// `sum_i |x_i - sum_j a_j * s_ij|^2 + beta * sum_ij |s_ij|_1`, summed in sweep order.
pub fn objective<S: AsRef<[f64]>>(
    signals: &[S],
    dict: &Dictionary,
    codes: &[SparseCode],
    beta: f64,
) -> Result<Objective> {
    if signals.len() != codes.len() {
        return Err(Error::invalid(format!(
            "{} signals but {} codes",
            signals.len(),
            codes.len()
        )));
    }
    signals
        .iter()
        .zip(codes)
        .try_fold(Objective::default(), |acc, (x, c)| {
            Ok(acc.add(sweep_objective(x.as_ref(), dict, c, beta)?))
        })
}

pub(crate) fn sum_objectives(parts: impl IntoIterator<Item = Objective>) -> Objective {
    parts.into_iter().fold(Objective::default(), Objective::add)
}
