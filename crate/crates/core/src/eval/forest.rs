//! Axis-aligned decision-tree ensembles: bagged random forests (default) or
//! discrete AdaBoost.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::derive_seed;

const STREAM_TREE: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    Bagging,
    Boosting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub ensemble: Ensemble,
    pub n_trees: usize,
    pub max_splits: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` is `ceil(sqrt(d))` for bagging and all features for boosting.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            ensemble: Ensemble::Bagging,
            n_trees: 100,
            max_splits: 32,
            min_leaf: 3,
            max_features: None,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 || self.max_features == Some(0) {
            return Err(Error::invalid("n_trees, min_leaf and max_features must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Class weights reaching the leaf.
    Leaf { counts: [f64; 2] },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, row: &[f64]) -> [f64; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return *counts,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        let c = self.leaf(row);
        u8::from(c[1] > c[0])
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Vote weight per tree (1 for bagging, the AdaBoost coefficient for boosting).
    pub weights: Vec<f64>,
}

impl ForestModel {
    /// Weighted majority vote; an exact tie goes to class 0.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let score: f64 = self
            .trees
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| if t.predict(row) == 1 { *w } else { -*w })
            .sum();
        u8::from(score > 0.0)
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }
}

pub fn train_forest(rows: &[Vec<f64>], labels: &[u8], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    params.validate()?;
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::invalid("need equal, non-zero numbers of rows and labels"));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("rows must share a non-zero feature count"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature values must be finite"));
    }
    if let Some(l) = labels.iter().find(|l| **l > 1) {
        return Err(Error::invalid(format!("label {l} is not binary")));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::invalid("training data must contain both classes"));
    }
    let n = rows.len();
    match params.ensemble {
        Ensemble::Bagging => {
            let mtry = params.max_features.unwrap_or((d as f64).sqrt().ceil() as usize).min(d);
            let trees: Vec<Tree> = (0..params.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_TREE, t as u64));
                    let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    let weights = vec![1.0; n];
                    grow_tree(rows, labels, &weights, sample, mtry, params, &mut rng)
                })
                .collect();
            let weights = vec![1.0; trees.len()];
            Ok(ForestModel { params: *params, n_features: d, trees, weights })
        }
        Ensemble::Boosting => {
            let mtry = params.max_features.unwrap_or(d).min(d);
            let mut w = vec![1.0 / n as f64; n];
            let mut trees = Vec::new();
            let mut alphas = Vec::new();
            for t in 0..params.n_trees {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_TREE, t as u64));
                let tree = grow_tree(rows, labels, &w, (0..n).collect(), mtry, params, &mut rng);
                let miss: Vec<bool> = rows.iter().zip(labels).map(|(r, l)| tree.predict(r) != *l).collect();
                let err: f64 = w.iter().zip(&miss).filter(|(_, m)| **m).map(|(v, _)| v).sum();
                if err >= 0.5 {
                    if trees.is_empty() {
                        trees.push(tree);
                        alphas.push(1.0);
                    }
                    break;
                }
                let err = err.max(1e-10);
                let alpha = 0.5 * ((1.0 - err) / err).ln();
                trees.push(tree);
                alphas.push(alpha);
                if err <= 1e-10 {
                    break;
                }
                for (v, m) in w.iter_mut().zip(&miss) {
                    *v *= if *m { alpha.exp() } else { (-alpha).exp() };
                }
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= total);
            }
            Ok(ForestModel { params: *params, n_features: d, trees, weights: alphas })
        }
    }
}

fn class_weights(idx: &[usize], labels: &[u8], w: &[f64]) -> [f64; 2] {
    let mut c = [0.0; 2];
    for &i in idx {
        c[labels[i] as usize] += w[i];
    }
    c
}

/// Sum of squared class weights over total weight; larger is purer.
fn purity(c: [f64; 2]) -> f64 {
    let t = c[0] + c[1];
    if t > 0.0 {
        (c[0] * c[0] + c[1] * c[1]) / t
    } else {
        0.0
    }
}

/// Breadth-first CART on the (possibly repeated) row indices in `sample`.
fn grow_tree(
    rows: &[Vec<f64>],
    labels: &[u8],
    w: &[f64],
    sample: Vec<usize>,
    mtry: usize,
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let d = rows[0].len();
    let mut nodes = vec![Node::Leaf { counts: class_weights(&sample, labels, w) }];
    let mut queue = VecDeque::from([(0usize, sample)]);
    let mut splits = 0;
    let mut features: Vec<usize> = (0..d).collect();

    while let Some((node, idx)) = queue.pop_front() {
        if splits >= params.max_splits {
            break;
        }
        let counts = class_weights(&idx, labels, w);
        if idx.len() < 2 * params.min_leaf || counts[0] == 0.0 || counts[1] == 0.0 {
            continue;
        }
        // partial Fisher-Yates for the candidate features
        for k in 0..mtry {
            let j = rng.random_range(k..d);
            features.swap(k, j);
        }
        let parent = purity(counts);
        let mut best: Option<(f64, usize, f64, usize)> = None;
        let mut sorted = idx.clone();
        for &f in &features[..mtry] {
            sorted.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
            let mut left = [0.0; 2];
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                left[labels[i] as usize] += w[i];
                let (v, next) = (rows[i][f], rows[sorted[k + 1]][f]);
                if v == next || k + 1 < params.min_leaf || sorted.len() - k - 1 < params.min_leaf {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let score = purity(left) + purity(right);
                if score > parent * (1.0 + 1e-12) && best.is_none_or(|b| score > b.0) {
                    best = Some((score, f, v, k + 1));
                }
            }
        }
        let Some((_, f, threshold, _)) = best else { continue };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][f] <= threshold);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { counts: class_weights(&l, labels, w) });
        nodes.push(Node::Leaf { counts: class_weights(&r, labels, w) });
        nodes[node] = Node::Split { feature: f, threshold, left: li, right: ri };
        splits += 1;
        queue.push_back((li, l));
        queue.push_back((ri, r));
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 37) % 11) as f64]).collect();
        let labels = (0..40).map(|i| u8::from(i >= 20)).collect();
        (rows, labels)
    }

    #[test]
    fn fits_separable_data() {
        let (rows, labels) = separable();
        for ensemble in [Ensemble::Bagging, Ensemble::Boosting] {
            let params = ForestParams { ensemble, n_trees: 15, ..ForestParams::default() };
            let m = train_forest(&rows, &labels, &params, 3).unwrap();
            assert_eq!(m.predict_all(&rows), labels);
        }
    }

    #[test]
    fn deterministic_serialization() {
        let (rows, labels) = separable();
        let p = ForestParams { n_trees: 10, ..ForestParams::default() };
        assert_eq!(
            train_forest(&rows, &labels, &p, 9).unwrap().to_json(),
            train_forest(&rows, &labels, &p, 9).unwrap().to_json()
        );
    }

    #[test]
    fn split_budget_and_leaf_size() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![((i * 7919) % 200) as f64]).collect();
        let labels: Vec<u8> = (0..200).map(|i| ((i * 31 / 7) % 2) as u8).collect();
        let p = ForestParams { n_trees: 3, max_splits: 5, ..ForestParams::default() };
        let m = train_forest(&rows, &labels, &p, 1).unwrap();
        for t in &m.trees {
            assert!(t.n_splits() <= 5);
            for n in &t.nodes {
                if let Node::Leaf { counts } = n {
                    assert!(counts[0] + counts[1] >= 3.0);
                }
            }
        }
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(train_forest(&rows, &[1, 1], &ForestParams::default(), 0).is_err());
    }
}
