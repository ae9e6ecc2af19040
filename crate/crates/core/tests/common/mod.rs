//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

/// Full linear convolution by the defining double sum.
pub fn direct_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Column `j * shifts + t` of the explicit synthesis matrix is basis `j` placed at offset `t`.
pub fn synthesis_matrix(bases: &[Vec<f64>], p: usize) -> Vec<Vec<f64>> {
    let q = bases[0].len();
    let shifts = p - q + 1;
    let mut cols = Vec::with_capacity(bases.len() * shifts);
    for a in bases {
        for t in 0..shifts {
            let mut col = vec![0.0; p];
            col[t..t + q].copy_from_slice(a);
            cols.push(col);
        }
    }
    cols
}

/// `|x - D s|^2 + beta |s|_1` with `D` given by its columns.
pub fn dense_objective(x: &[f64], cols: &[Vec<f64>], s: &[f64], beta: f64) -> f64 {
    let mut r = x.to_vec();
    for (col, v) in cols.iter().zip(s) {
        for (ri, ci) in r.iter_mut().zip(col) {
            *ri -= ci * v;
        }
    }
    r.iter().map(|v| v * v).sum::<f64>() + beta * s.iter().map(|v| v.abs()).sum::<f64>()
}

pub fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Cyclic coordinate descent on `|x - D s|^2 + beta |s|_1`, run to a fixed point.
pub fn lasso_cd(x: &[f64], cols: &[Vec<f64>], beta: f64) -> Vec<f64> {
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut s = vec![0.0; cols.len()];
    let mut r = x.to_vec();
    for _ in 0..100_000 {
        let mut delta: f64 = 0.0;
        for (j, col) in cols.iter().enumerate() {
            if norms[j] == 0.0 {
                continue;
            }
            let rho: f64 = col.iter().zip(&r).map(|(c, v)| c * v).sum::<f64>() + norms[j] * s[j];
            let new = soft(rho, beta / 2.0) / norms[j];
            let d = new - s[j];
            if d != 0.0 {
                for (ri, ci) in r.iter_mut().zip(col) {
                    *ri -= ci * d;
                }
                s[j] = new;
                delta = delta.max(d.abs());
            }
        }
        if delta < 1e-15 {
            break;
        }
    }
    s
}

pub fn gini2(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c0 as f64 / n, c1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

/// Every midpoint threshold tried by counting both sides from scratch.
/// Returns `(threshold, weighted gini, accuracy percent)` of the lowest-Gini
/// threshold (first one on ties), or `None` when there is no candidate.
pub fn brute_best_split(x: &[f64], y: &[u8]) -> Option<(f64, f64, f64)> {
    let mut vals: Vec<f64> = x.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let n = x.len() as f64;
    let mut best: Option<(f64, f64, f64)> = None;
    for w in vals.windows(2) {
        let thr = 0.5 * w[0] + 0.5 * w[1];
        let (mut l, mut r) = ([0usize; 2], [0usize; 2]);
        for (v, c) in x.iter().zip(y) {
            if *v <= thr {
                l[*c as usize] += 1;
            } else {
                r[*c as usize] += 1;
            }
        }
        let nl = (l[0] + l[1]) as f64;
        let nr = (r[0] + r[1]) as f64;
        let g = nl / n * gini2(l[0], l[1]) + nr / n * gini2(r[0], r[1]);
        let correct = l[0].max(l[1]) + r[0].max(r[1]);
        let acc = 100.0 * correct as f64 / n;
        if best.is_none_or(|b| g < b.1 - 1e-12) {
            best = Some((thr, g, acc));
        }
    }
    best
}
