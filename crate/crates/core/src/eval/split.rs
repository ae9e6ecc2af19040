use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// `1 - sum_i (c_i / total)^2`.
pub fn gini_impurity(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("gini impurity of an empty set"));
    }
    let t = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    /// Observations with `x <= threshold` go left.
    pub threshold: f64,
    pub weighted_gini: f64,
    /// Accuracy (percent) of the one-threshold classifier predicting each side's majority.
    pub separability: f64,
    /// `100 * (1 - 2 * weighted_gini)`.
    pub gini_separability: f64,
    /// Constant column or single-class labels: no informative split exists.
    pub degenerate: bool,
}

fn check_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().find(|l| **l > 1) {
        Some(l) => Err(Error::invalid(format!("label {l} is not binary"))),
        None => Ok(()),
    }
}

fn weighted(l: [usize; 2], r: [usize; 2]) -> f64 {
    let (nl, nr) = (l[0] + l[1], r[0] + r[1]);
    let side = |c: [usize; 2], n: usize| if n == 0 { 0.0 } else { n as f64 * gini_impurity(&c).unwrap_or(0.0) };
    (side(l, nl) + side(r, nr)) / (nl + nr) as f64
}

fn majority_hits(c: [usize; 2]) -> usize {
    c[0].max(c[1])
}

fn finish(threshold: f64, l: [usize; 2], r: [usize; 2], degenerate: bool) -> Split {
    let n = l[0] + l[1] + r[0] + r[1];
    let wg = weighted(l, r);
    Split {
        threshold,
        weighted_gini: wg,
        separability: 100.0 * (majority_hits(l) + majority_hits(r)) as f64 / n as f64,
        gini_separability: 100.0 * (1.0 - 2.0 * wg),
        degenerate,
    }
}

/// Minimum weighted Gini over midpoints between consecutive distinct values;
/// ties go to the smaller threshold.
pub fn best_split(feature: &[f64], labels: &[u8]) -> Result<Split> {
    if feature.len() != labels.len() {
        return Err(Error::invalid("feature and labels differ in length"));
    }
    if feature.len() < 2 {
        return Err(Error::invalid("best split needs at least two observations"));
    }
    if feature.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature contains a non-finite value"));
    }
    check_labels(labels)?;

    let mut order: Vec<usize> = (0..feature.len()).collect();
    order.sort_by(|&a, &b| feature[a].total_cmp(&feature[b]));
    let mut total = [0usize; 2];
    for &l in labels {
        total[l as usize] += 1;
    }
    let single_class = total[0] == 0 || total[1] == 0;
    let lo = feature[order[0]];
    let hi = feature[order[order.len() - 1]];
    if lo == hi || single_class {
        return Ok(finish(lo, total, [0, 0], true));
    }

    // maximize (l0^2 + l1^2) / nl + (r0^2 + r1^2) / nr, compared exactly as fractions
    let mut left = [0usize; 2];
    let mut best: Option<(u128, u128, usize, [usize; 2])> = None;
    for k in 0..order.len() - 1 {
        left[labels[order[k]] as usize] += 1;
        if feature[order[k]] == feature[order[k + 1]] {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let (nl, nr) = ((left[0] + left[1]) as u128, (right[0] + right[1]) as u128);
        let sq = |c: [usize; 2]| (c[0] as u128).pow(2) + (c[1] as u128).pow(2);
        let num = nr * sq(left) + nl * sq(right);
        let den = nl * nr;
        let better = match best {
            None => true,
            Some((bn, bd, _, _)) => (num * bd).cmp(&(bn * den)) == Ordering::Greater,
        };
        if better {
            best = Some((num, den, k, left));
        }
    }
    let (_, _, k, left) = best.expect("non-constant column has a boundary");
    let right = [total[0] - left[0], total[1] - left[1]];
    let threshold = midpoint(feature[order[k]], feature[order[k + 1]]);
    Ok(finish(threshold, left, right, false))
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = 0.5 * a + 0.5 * b;
    if m >= b {
        a
    } else {
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityEntry {
    pub rank: usize,
    /// Zero-based feature column.
    pub column: usize,
    pub name: String,
    #[serde(flatten)]
    pub split: Split,
}

/// Per-feature single-split scores, most separable first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub entries: Vec<SeparabilityEntry>,
}

impl SeparabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table: rank, basis number (one-based column), separability.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>4}  {:<16}  {:>14}  {:>13}", "rank", "feature", "separability %", "weighted gini");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:>4}  {:<16}  {:>14.2}  {:>13.4}{}",
                e.rank,
                e.name,
                e.split.separability,
                e.split.weighted_gini,
                if e.split.degenerate { "  (degenerate)" } else { "" }
            );
        }
        out
    }
}

pub fn rank_bases(features: &FeatureMatrix) -> Result<SeparabilityReport> {
    let labels = features.labels();
    let mut entries = (0..features.n_cols())
        .map(|j| {
            Ok(SeparabilityEntry {
                rank: 0,
                column: j,
                name: features.columns()[j].clone(),
                split: best_split(&features.column(j), labels)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.split.separability.total_cmp(&a.split.separability).then(a.column.cmp(&b.column)));
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(SeparabilityReport { entries })
}
