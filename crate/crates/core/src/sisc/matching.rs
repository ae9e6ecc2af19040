use serde::{Deserialize, Serialize};

use super::Dictionary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisMatch {
    pub truth: usize,
    pub learned: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// One entry per matched truth basis, ordered by truth index.
    pub matches: Vec<BasisMatch>,
    /// `scores[t][l]` for truth basis `t` against learned basis `l`.
    pub scores: Vec<Vec<f64>>,
}

impl MatchReport {
    pub fn min_score(&self) -> f64 {
        self.matches.iter().map(|m| m.score).fold(f64::INFINITY, f64::min)
    }

    pub fn score_for(&self, truth: usize) -> Option<f64> {
        self.matches.iter().find(|m| m.truth == truth).map(|m| m.score)
    }
}

/// Largest `|<a, roll(b, k)>| / (|a| |b|)` over circular shifts `k`; sign is ignored.
pub fn circular_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid("bases must be non-empty and of equal length"));
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let q = a.len();
    let best = (0..q)
        .map(|k| {
            a.iter()
                .enumerate()
                .map(|(t, v)| v * b[(t + k) % q])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    Ok((best / (na * nb)).min(1.0))
}

/// Greedy one-to-one assignment of learned bases to truth bases by
/// decreasing [`circular_similarity`].
pub fn basis_match_score(learned: &Dictionary, truth: &Dictionary) -> Result<MatchReport> {
    if learned.basis_len() != truth.basis_len() {
        return Err(Error::invalid(format!(
            "basis lengths differ: learned {} vs truth {}",
            learned.basis_len(),
            truth.basis_len()
        )));
    }
    let scores: Vec<Vec<f64>> = truth
        .bases()
        .iter()
        .map(|t| {
            learned
                .bases()
                .iter()
                .map(|l| circular_similarity(t, l))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut pairs: Vec<(usize, usize)> = (0..truth.len())
        .flat_map(|t| (0..learned.len()).map(move |l| (t, l)))
        .collect();
    pairs.sort_by(|x, y| scores[y.0][y.1].total_cmp(&scores[x.0][x.1]).then(x.cmp(y)));
    let mut truth_used = vec![false; truth.len()];
    let mut learned_used = vec![false; learned.len()];
    let mut matches = Vec::new();
    for (t, l) in pairs {
        if !truth_used[t] && !learned_used[l] {
            truth_used[t] = true;
            learned_used[l] = true;
            matches.push(BasisMatch { truth: t, learned: l, score: scores[t][l] });
        }
    }
    matches.sort_by_key(|m| m.truth);
    Ok(MatchReport { matches, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_and_negated_copies_match() {
        let a = vec![0.1, 0.5, -0.3, 0.8, 0.0, -0.2];
        let mut b: Vec<f64> = a.iter().map(|v| -2.0 * v).collect();
        b.rotate_right(2);
        assert!((circular_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(circular_similarity(&a, &[0.0; 6]).unwrap(), 0.0);
    }

    #[test]
    fn greedy_assignment_is_one_to_one() {
        let truth = Dictionary::normalized(vec![vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0, 0.0]], 1.0).unwrap();
        let learned = Dictionary::normalized(
            vec![vec![1.0, 1.0, 0.0, 0.1], vec![1.0, 1.0, 0.0, 0.0], vec![1.0, -1.0, 1.0, -1.0]],
            1.0,
        )
        .unwrap();
        let r = basis_match_score(&learned, &truth).unwrap();
        assert_eq!(r.matches.len(), 2);
        assert_eq!(r.matches[1].learned, 1);
        assert!((r.matches[1].score - 1.0).abs() < 1e-12);
        assert_ne!(r.matches[0].learned, 1);
        assert!(r.min_score() < 1.0);
    }
}
