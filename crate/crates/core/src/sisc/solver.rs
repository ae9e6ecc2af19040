//! Coefficient inference with the dictionary held fixed, minimizing
//! `|x - sum_j a_j * s_j|^2 + beta * sum_j |s_j|_1`.
//!
//! Two solvers share one contract (never worse than the start, same
//! stopping rule):
//!
//! * locally greedy coordinate descent: the signal is cut into
//!   basis-length segments and each pass makes the single best coordinate
//!   move in every segment, keeping the correlations current through the
//!   basis Gram matrix. A run that reaches the pass cap continues with
//!   FISTA from its last iterate, under the same cap;
//! * monotone FISTA with backtracking, with FFT gradients.

use serde::{Deserialize, Serialize};

use super::objective::sweep_objective_unchecked;
use super::{Dictionary, Objective, SparseCode};
use crate::dsp::FilterBank;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop when the relative objective decrease of one pass falls below this.
    pub tolerance: f64,
    /// Cap on passes (coordinate descent) or iterations (FISTA). A coordinate
    /// descent run that hits it gets a second budget of FISTA iterations.
    pub max_iterations: usize,
    pub method: SolverMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-5,
            max_iterations: 1000,
            method: SolverMethod::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    #[default]
    CoordinateDescent,
    Fista,
}

struct Progress {
    iterations: usize,
    relative_change: f64,
    converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeSolution {
    pub code: SparseCode,
    pub objective: Objective,
    pub iterations: usize,
    pub relative_change: f64,
    /// Largest violation of the subgradient optimality conditions.
    pub optimality: f64,
    pub converged: bool,
}

/// Solves the L1-regularized deconvolution for one signal from a zero start.
///
/// Returns a convergence error (carrying the last iterate) when the
/// tolerance is not met within `max_iterations`.
pub fn infer_codes(x: &[f64], dict: &Dictionary, beta: f64, opts: &SolverOptions) -> Result<CodeSolution> {
    let bank = FilterBank::new(dict.bases(), x.len())?;
    let sol = infer_codes_with(x, &bank, beta, None, opts)?;
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::Convergence {
            iterations: sol.iterations,
            relative_change: sol.relative_change,
            optimality: sol.optimality,
            last_iterate: sol.code.to_dense(),
        })
    }
}

/// Solver core: optional warm start, never errors on non-convergence
/// (see [`CodeSolution::converged`]). The returned objective is never above
/// the starting point's.
pub fn infer_codes_with(
    x: &[f64],
    bank: &FilterBank,
    beta: f64,
    warm: Option<&SparseCode>,
    opts: &SolverOptions,
) -> Result<CodeSolution> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    if x.len() != bank.signal_len() {
        return Err(Error::invalid(format!(
            "signal length {} does not match filter bank length {}",
            x.len(),
            bank.signal_len()
        )));
    }
    crate::dsp::ensure_signal("x", x)?;
    let n = bank.len();
    let shifts = bank.shifts();
    let bases = bank.filters();

    let mut s = Dense::zeros(n, shifts);
    if let Some(w) = warm {
        if w.n_bases() != n || w.shifts() != shifts {
            return Err(Error::invalid("warm start shape does not match the problem"));
        }
        s = Dense::from_code(w);
    }
    let start_code = s.to_code();
    let start_obj = sweep_objective_unchecked(x, bases, &start_code, beta);

    if x.iter().all(|v| *v == 0.0) && s.nnz() == 0 {
        return Ok(CodeSolution {
            code: start_code,
            objective: start_obj,
            iterations: 0,
            relative_change: 0.0,
            optimality: 0.0,
            converged: true,
        });
    }

    let (s, progress) = match opts.method {
        SolverMethod::CoordinateDescent => {
            let (s, cd) = coordinate_descent(x, bank, beta, s, opts);
            if cd.converged {
                (s, cd)
            } else {
                // finish stalled greedy runs with FISTA from the last iterate
                let (s, f) = fista(x, bank, beta, s, opts);
                (s, Progress { iterations: cd.iterations + f.iterations, ..f })
            }
        }
        SolverMethod::Fista => fista(x, bank, beta, s, opts),
    };
    let Progress {
        iterations,
        relative_change,
        converged,
    } = progress;

    let mut code = s.to_code();
    let mut objective = sweep_objective_unchecked(x, bases, &code, beta);
    if objective.total > start_obj.total {
        code = start_code;
        objective = start_obj;
    }
    let resid: Vec<f64> = {
        let rec = super::objective::reconstruct_unchecked(bases, &code, x.len());
        x.iter().zip(&rec).map(|(u, v)| u - v).collect()
    };
    let optimality = optimality_violation(&Dense::from_code(&code), &gradient(bank, &resid), beta);

    Ok(CodeSolution {
        code,
        objective,
        iterations,
        relative_change,
        optimality,
        converged,
    })
}

fn fista(x: &[f64], bank: &FilterBank, beta: f64, mut s: Dense, opts: &SolverOptions) -> (Dense, Progress) {
    let lipschitz_max = 2.0 * bank.operator_norm_sq();
    let mut lipschitz = lipschitz_max / 8.0;

    let mut rec_s = synthesize(bank, &s);
    let mut obj_s = residual_sq(x, &rec_s) + beta * s.l1();

    let mut y = s.clone();
    let mut rec_y = rec_s.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut relative_change = f64::INFINITY;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        let resid_y: Vec<f64> = x.iter().zip(&rec_y).map(|(u, v)| u - v).collect();
        let f_y: f64 = resid_y.iter().map(|v| v * v).sum();
        let grad = gradient(bank, &resid_y);

        // backtracking on the quadratic upper bound
        let (z, rec_z, f_z) = loop {
            let z = y.prox_step(&grad, lipschitz, beta);
            let rec_z = synthesize(bank, &z);
            let f_z = residual_sq(x, &rec_z);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for ((zv, yv), g) in z.data.iter().zip(&y.data).zip(&grad) {
                let d = zv - yv;
                lin += g * d;
                quad += d * d;
            }
            let bound = f_y + lin + 0.5 * lipschitz * quad;
            if f_z <= bound + 1e-12 * f_y.abs().max(1.0) || lipschitz >= lipschitz_max {
                break (z, rec_z, f_z);
            }
            lipschitz = (2.0 * lipschitz).min(lipschitz_max);
        };
        let obj_z = f_z + beta * z.l1();

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if obj_z <= obj_s {
            relative_change = if obj_s > 0.0 { (obj_s - obj_z) / obj_s } else { 0.0 };
            // y = z + ((t - 1) / t_next) (z - s)
            let momentum = (t - 1.0) / t_next;
            y = z.extrapolate(&s, momentum);
            rec_y = rec_z.iter().zip(&rec_s).map(|(a, b)| a + momentum * (a - b)).collect();
            s = z;
            rec_s = rec_z;
            obj_s = obj_z;
            t = t_next;
            if relative_change < opts.tolerance {
                converged = true;
                break;
            }
        } else if t == 1.0 {
            // a plain prox-gradient step from the incumbent did not improve it
            if lipschitz < lipschitz_max {
                lipschitz = (2.0 * lipschitz).min(lipschitz_max);
                continue;
            }
            relative_change = 0.0;
            converged = true;
            break;
        } else {
            // rejected: restart momentum from the incumbent
            y = s.clone();
            rec_y = rec_s.clone();
            t = 1.0;
        }
    }

    (
        s,
        Progress {
            iterations,
            relative_change,
            converged,
        },
    )
}

fn coordinate_descent(x: &[f64], bank: &FilterBank, beta: f64, mut s: Dense, opts: &SolverOptions) -> (Dense, Progress) {
    let (n, q, shifts) = (bank.len(), bank.filter_len(), bank.shifts());
    let width = 2 * q - 1;
    let gram = bank.gram();
    let norms: Vec<f64> = (0..n).map(|k| gram[(k * n + k) * width + q - 1]).collect();
    let inv_norms: Vec<f64> = norms.iter().map(|v| if *v > 0.0 { 1.0 / v } else { 0.0 }).collect();

    // b[k][t] = <a_k at t, residual> + |a_k|^2 s[k][t]: the 1-D problem at (k, t) is
    // |a_k|^2 v^2 - 2 b v + beta |v|, minimized by soft(b, beta / 2) / |a_k|^2
    let rec = synthesize(bank, &s);
    let resid: Vec<f64> = x.iter().zip(&rec).map(|(u, v)| u - v).collect();
    let mut b = vec![0.0; n * shifts];
    bank.for_each_correlation(&resid, |k, c| b[k * shifts..(k + 1) * shifts].copy_from_slice(c));
    for (k, norm) in norms.iter().enumerate() {
        for (bv, sv) in b[k * shifts..(k + 1) * shifts].iter_mut().zip(s.row(k)) {
            *bv += norm * sv;
        }
    }
    let mut obj = residual_sq(x, &rec) + beta * s.l1();

    let half = 0.5 * beta;
    let segments = shifts.div_ceil(q);
    let mut iterations = 0;
    let mut relative_change = f64::INFINITY;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut decrease = 0.0;
        for m in 0..segments {
            let (lo, hi) = (m * q, ((m + 1) * q).min(shifts));
            let mut best = (0.0, 0, 0, 0.0);
            for k in 0..n {
                if norms[k] <= 0.0 {
                    continue;
                }
                let row_b = &b[k * shifts + lo..k * shifts + hi];
                let row_s = &s.data[k * shifts + lo..k * shifts + hi];
                for (i, (bv, sv)) in row_b.iter().zip(row_s).enumerate() {
                    let new = soft_threshold(*bv, half) * inv_norms[k];
                    let d = (new - sv).abs();
                    if d > best.0 {
                        best = (d, k, lo + i, new);
                    }
                }
            }
            let (d, k0, t0, new) = best;
            if d == 0.0 {
                continue;
            }
            let idx = k0 * shifts + t0;
            let (old, bk) = (s.data[idx], b[idx]);
            let f = |v: f64| norms[k0] * v * v - 2.0 * bk * v + beta * v.abs();
            decrease += (f(old) - f(new)).max(0.0);
            s.data[idx] = new;
            let delta = new - old;
            let t_lo = t0.saturating_sub(q - 1);
            let t_hi = (t0 + q).min(shifts);
            for j in 0..n {
                let g = &gram[(k0 * n + j) * width..(k0 * n + j + 1) * width];
                let g = &g[t_lo + q - 1 - t0..t_hi + q - 1 - t0];
                for (bv, gv) in b[j * shifts + t_lo..j * shifts + t_hi].iter_mut().zip(g) {
                    *bv -= delta * gv;
                }
            }
            b[idx] = bk;
        }
        relative_change = if obj > 0.0 { decrease / obj } else { 0.0 };
        obj -= decrease;
        if relative_change < opts.tolerance {
            converged = true;
            break;
        }
    }
    (
        s,
        Progress {
            iterations,
            relative_change,
            converged,
        },
    )
}

/// Row-major `n x shifts` dense code.
#[derive(Debug, Clone)]
pub(crate) struct Dense {
    n: usize,
    shifts: usize,
    data: Vec<f64>,
}

impl Dense {
    fn zeros(n: usize, shifts: usize) -> Self {
        Dense { n, shifts, data: vec![0.0; n * shifts] }
    }

    fn from_code(code: &SparseCode) -> Self {
        let mut d = Dense::zeros(code.n_bases(), code.shifts());
        for (j, list) in code.iter_bases().enumerate() {
            for a in list {
                d.data[j * d.shifts + a.shift] = a.value;
            }
        }
        d
    }

    fn to_code(&self) -> SparseCode {
        let rows: Vec<Vec<f64>> = self.data.chunks(self.shifts).map(<[f64]>::to_vec).collect();
        SparseCode::from_dense(&rows)
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.shifts..(j + 1) * self.shifts]
    }

    fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    fn l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    fn prox_step(&self, grad: &[f64], lipschitz: f64, beta: f64) -> Dense {
        let thresh = beta / lipschitz;
        let data = self
            .data
            .iter()
            .zip(grad)
            .map(|(v, g)| soft_threshold(v - g / lipschitz, thresh))
            .collect();
        Dense { n: self.n, shifts: self.shifts, data }
    }

    fn extrapolate(&self, prev: &Dense, momentum: f64) -> Dense {
        let data = self
            .data
            .iter()
            .zip(&prev.data)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        Dense { n: self.n, shifts: self.shifts, data }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn residual_sq(x: &[f64], rec: &[f64]) -> f64 {
    x.iter().zip(rec).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Gradient of the smooth term: `-2 * corr(r, a_j)` for every basis, flattened.
fn gradient(bank: &FilterBank, resid: &[f64]) -> Vec<f64> {
    let mut g = Vec::with_capacity(bank.len() * bank.shifts());
    bank.for_each_correlation(resid, |_, c| g.extend(c.iter().map(|v| -2.0 * v)));
    g
}

/// Direct sparse synthesis when cheaper than the FFT path.
fn synthesize(bank: &FilterBank, s: &Dense) -> Vec<f64> {
    let nnz = s.nnz();
    let q = bank.filter_len();
    let p = bank.signal_len();
    let fft_cost = (bank.len() + 1) * p.next_power_of_two() * 12;
    if nnz * q <= fft_cost {
        let mut out = vec![0.0; p];
        for (j, a) in bank.filters().iter().enumerate() {
            for (t, v) in s.row(j).iter().enumerate() {
                if *v != 0.0 {
                    for (o, av) in out[t..t + q].iter_mut().zip(a) {
                        *o += av * v;
                    }
                }
            }
        }
        out
    } else {
        let rows: Vec<Vec<f64>> = (0..s.n).map(|j| s.row(j).to_vec()).collect();
        bank.synthesize(&rows)
    }
}

fn optimality_violation(s: &Dense, grad: &[f64], beta: f64) -> f64 {
    s.data
        .iter()
        .zip(grad)
        .map(|(v, g)| {
            if *v > 0.0 {
                (g + beta).abs()
            } else if *v < 0.0 {
                (g - beta).abs()
            } else {
                (g.abs() - beta).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
