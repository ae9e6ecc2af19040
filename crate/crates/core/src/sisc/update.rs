//! Basis update with the codes held fixed: projected gradient on the
//! reconstruction error, each basis projected back onto `|a_j|^2 <= c`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{check_shapes, reconstruct_unchecked, sum_objectives, sweep_objective_unchecked};
use super::{Dictionary, Objective, SparseCode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpdateOptions {
    pub max_steps: usize,
    /// Stop when a step lowers the reconstruction error by less than this fraction.
    pub tolerance: f64,
}

impl Default for UpdateOptions {
    fn default() -> Self {
        UpdateOptions {
            max_steps: 25,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub steps: usize,
    pub before: Objective,
    pub after: Objective,
    /// Bases with no activation anywhere in the batch; they are left untouched.
    pub unused: Vec<usize>,
}

const CHUNK: usize = 64;

/// One dictionary step. The returned objective never exceeds the input's.
pub fn update_dictionary<S: AsRef<[f64]> + Sync>(
    signals: &[S],
    codes: &[SparseCode],
    dict: &Dictionary,
    beta: f64,
    opts: &UpdateOptions,
) -> Result<(Dictionary, UpdateStats)> {
    if signals.is_empty() {
        return Err(Error::invalid("dictionary update needs at least one signal"));
    }
    if signals.len() != codes.len() {
        return Err(Error::invalid(format!("{} signals but {} codes", signals.len(), codes.len())));
    }
    for (x, c) in signals.iter().zip(codes) {
        check_shapes(dict, c, x.as_ref().len())?;
    }
    let n = dict.len();
    let q = dict.basis_len();
    let c = dict.c();

    let usage: Vec<f64> = (0..n)
        .map(|j| codes.iter().map(|code| code.basis_l1(j)).sum())
        .collect();
    let unused: Vec<usize> = (0..n).filter(|j| usage[*j] == 0.0).collect();

    let before = batch_objective(signals, dict.bases(), codes, beta);
    if unused.len() == n {
        return Ok((
            dict.clone(),
            UpdateStats { steps: 0, before, after: before, unused },
        ));
    }

    // |sum_j s_j * a_j| <= sqrt(sum_j |s_j|_1^2) |A|, so this bounds the curvature
    let lipschitz_max: f64 = 2.0
        * codes
            .iter()
            .map(|code| (0..n).map(|j| code.basis_l1(j).powi(2)).sum::<f64>())
            .sum::<f64>();
    let mut lipschitz = lipschitz_max / 16.0;

    let mut bases = dict.bases().to_vec();
    let mut current = before;
    let mut steps = 0;
    while steps < opts.max_steps {
        steps += 1;
        let grad = gradient(signals, &bases, codes, q);
        let mut accepted = None;
        loop {
            let trial: Vec<Vec<f64>> = bases
                .iter()
                .zip(&grad)
                .map(|(a, g)| {
                    let mut b: Vec<f64> = a.iter().zip(g).map(|(u, v)| u - v / lipschitz).collect();
                    project(&mut b, c);
                    b
                })
                .collect();
            let obj = batch_objective(signals, &trial, codes, beta);
            if obj.total <= current.total {
                accepted = Some((trial, obj));
                break;
            }
            if lipschitz >= lipschitz_max {
                break;
            }
            lipschitz = (2.0 * lipschitz).min(lipschitz_max);
        }
        let Some((trial, obj)) = accepted else { break };
        let decrease = current.total - obj.total;
        bases = trial;
        let scale = current.residual.max(f64::MIN_POSITIVE);
        current = obj;
        if decrease / scale < opts.tolerance {
            break;
        }
        lipschitz = (0.5 * lipschitz).max(lipschitz_max * 1e-6);
    }

    let mut updated = dict.clone();
    for (d, b) in updated.bases_mut().iter_mut().zip(bases) {
        *d = b;
    }
    Ok((updated, UpdateStats { steps, before, after: current, unused }))
}

fn project(b: &mut [f64], c: f64) {
    let norm_sq: f64 = b.iter().map(|v| v * v).sum();
    if norm_sq > c {
        let s = (c / norm_sq).sqrt();
        b.iter_mut().for_each(|v| *v *= s);
    }
}

pub(crate) fn batch_objective<S: AsRef<[f64]> + Sync>(
    signals: &[S],
    bases: &[Vec<f64>],
    codes: &[SparseCode],
    beta: f64,
) -> Objective {
    let parts: Vec<Objective> = signals
        .par_iter()
        .zip(codes.par_iter())
        .map(|(x, code)| sweep_objective_unchecked(x.as_ref(), bases, code, beta))
        .collect();
    sum_objectives(parts)
}

/// `d/da_j[k] = -2 sum_i sum_(t, v) v * r_i[t + k]`, accumulated in sweep order.
fn gradient<S: AsRef<[f64]> + Sync>(
    signals: &[S],
    bases: &[Vec<f64>],
    codes: &[SparseCode],
    q: usize,
) -> Vec<Vec<f64>> {
    let n = bases.len();
    let mut total = vec![vec![0.0; q]; n];
    for (xs, cs) in signals.chunks(CHUNK).zip(codes.chunks(CHUNK)) {
        let parts: Vec<Vec<Vec<f64>>> = xs
            .par_iter()
            .zip(cs.par_iter())
            .map(|(x, code)| {
                let x = x.as_ref();
                let rec = reconstruct_unchecked(bases, code, x.len());
                let r: Vec<f64> = x.iter().zip(&rec).map(|(u, v)| u - v).collect();
                let mut g = vec![vec![0.0; q]; n];
                for (gj, list) in g.iter_mut().zip(code.iter_bases()) {
                    for act in list {
                        for (gk, rv) in gj.iter_mut().zip(&r[act.shift..act.shift + q]) {
                            *gk -= 2.0 * act.value * rv;
                        }
                    }
                }
                g
            })
            .collect();
        for g in parts {
            for (tj, gj) in total.iter_mut().zip(g) {
                for (t, v) in tj.iter_mut().zip(gj) {
                    *t += v;
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sisc::Activation;

    fn setup() -> (Vec<Vec<f64>>, Dictionary, Vec<SparseCode>) {
        let x = vec![vec![0.0, 1.0, 2.0, 1.0, 0.0, -1.0, -2.0, -1.0], vec![3.0, 1.0, 0.0, 0.0, 0.0, 0.5, 1.0, 0.5]];
        let dict = Dictionary::normalized(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]], 1.0).unwrap();
        let codes = vec![
            SparseCode::from_atoms(6, vec![vec![Activation { shift: 1, value: 1.5 }], vec![]]).unwrap(),
            SparseCode::from_atoms(6, vec![vec![Activation { shift: 0, value: 2.0 }, Activation { shift: 5, value: 0.7 }], vec![]]).unwrap(),
        ];
        (x, dict, codes)
    }

    #[test]
    fn zero_codes_leave_dictionary_unchanged() {
        let (x, dict, _) = setup();
        let zeros = vec![SparseCode::zeros(2, 6); 2];
        let (out, stats) = update_dictionary(&x, &zeros, &dict, 0.1, &UpdateOptions::default()).unwrap();
        assert_eq!(out, dict);
        assert_eq!(stats.unused, vec![0, 1]);
    }

    #[test]
    fn decreases_objective_within_norm_ball() {
        let (x, dict, codes) = setup();
        let (out, stats) = update_dictionary(&x, &codes, &dict, 0.1, &UpdateOptions::default()).unwrap();
        assert!(stats.after.total < stats.before.total);
        assert_eq!(stats.unused, vec![1]);
        assert_eq!(out.basis(1), dict.basis(1));
        for b in out.bases() {
            assert!(b.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12);
        }
        let direct = crate::sisc::objective(&x, &out, &codes, 0.1).unwrap();
        assert_eq!(direct, stats.after);
    }

    #[test]
    fn empty_batch_rejected() {
        let (_, dict, _) = setup();
        let none: Vec<Vec<f64>> = Vec::new();
        assert!(update_dictionary(&none, &[], &dict, 0.1, &UpdateOptions::default()).is_err());
    }
}
