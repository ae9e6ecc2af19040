use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{train_forest, ForestParams};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::synth::derive_seed;

const STREAM_FOLDS: u64 = 31;
const STREAM_FOLD_MODEL: u64 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    /// `None` when the test fold holds no positives.
    pub tpr: Option<f64>,
    /// `None` when the test fold holds no negatives.
    pub tnr: Option<f64>,
}

impl FoldResult {
    fn new(fold: usize, truth: &[u8], predicted: &[u8]) -> Self {
        let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
        for (t, p) in truth.iter().zip(predicted) {
            match (t, p) {
                (1, 1) => tp += 1,
                (0, 0) => tn += 1,
                (0, _) => fp += 1,
                _ => fn_ += 1,
            }
        }
        let rate = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
        FoldResult {
            fold,
            n_test: truth.len(),
            tp,
            tn,
            fp,
            fn_,
            accuracy: (tp + tn) as f64 / truth.len() as f64,
            tpr: rate(tp, fn_),
            tnr: rate(tn, fp),
        }
    }
}

/// Fractions in `[0, 1]`; means are over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub mean_tpr: f64,
    pub mean_tnr: f64,
    /// Test fold of every row.
    pub fold_of: Vec<usize>,
    /// Out-of-fold prediction for every row.
    pub predictions: Vec<u8>,
}

impl CVReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line in the accuracy / true positives / true negatives layout, percent.
    pub fn summary_row(&self, label: &str) -> String {
        format!(
            "{label:>10}  {:>12.2}  {:>18.2}  {:>18.2}",
            100.0 * self.mean_accuracy,
            100.0 * self.mean_tpr,
            100.0 * self.mean_tnr
        )
    }

    pub fn summary_header() -> String {
        format!("{:>10}  {:>12}  {:>18}  {:>18}", "bases", "accuracy %", "true positives %", "true negatives %")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>4}  {:>6}  {:>10}  {:>8}  {:>8}", "fold", "n", "accuracy %", "TPR %", "TNR %");
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.2}", 100.0 * v));
        for f in &self.folds {
            let _ = writeln!(
                out,
                "{:>4}  {:>6}  {:>10.2}  {:>8}  {:>8}",
                f.fold + 1,
                f.n_test,
                100.0 * f.accuracy,
                pct(f.tpr),
                pct(f.tnr)
            );
        }
        let _ = writeln!(
            out,
            "mean  {:>6}  {:>10.2}  {:>8.2}  {:>8.2}",
            self.fold_of.len(),
            100.0 * self.mean_accuracy,
            100.0 * self.mean_tpr,
            100.0 * self.mean_tnr
        );
        out
    }
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::invalid(format!("k = {k} exceeds the {} rows", labels.len())));
    }
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == class).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_FOLDS, class as u64));
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(fold_of)
}

/// Generic k-fold driver. `fit_predict(fold, train_rows, test_rows)` returns
/// predictions for `test_rows`, in order.
pub fn cross_validate<F>(features: &FeatureMatrix, k: usize, seed: u64, fit_predict: F) -> Result<CVReport>
where
    F: Fn(usize, &[usize], &[usize]) -> Result<Vec<u8>> + Sync,
{
    let labels = features.labels();
    if labels.iter().any(|l| *l > 1) {
        return Err(Error::invalid("labels must be binary"));
    }
    let fold_of = stratified_folds(labels, k, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| (0..labels.len()).partition(|i| fold_of[*i] != f))
        .collect();
    for (f, (train, _)) in splits.iter().enumerate() {
        for class in 0..2u8 {
            if !train.iter().any(|i| labels[*i] == class) {
                return Err(Error::Stratification(format!(
                    "training set of fold {} has no rows of class {class}",
                    f + 1
                )));
            }
        }
    }
    let outcomes = splits
        .par_iter()
        .enumerate()
        .map(|(f, (train, test))| {
            let pred = fit_predict(f, train, test)?;
            if pred.len() != test.len() {
                return Err(Error::invalid("fit_predict returned the wrong number of predictions"));
            }
            Ok(pred)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut predictions = vec![0u8; labels.len()];
    let mut folds = Vec::with_capacity(k);
    for (f, ((_, test), pred)) in splits.iter().zip(&outcomes).enumerate() {
        for (i, p) in test.iter().zip(pred) {
            predictions[*i] = *p;
        }
        let truth: Vec<u8> = test.iter().map(|i| labels[*i]).collect();
        folds.push(FoldResult::new(f, &truth, pred));
    }
    let mean = |vals: Vec<f64>| if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
    Ok(CVReport {
        k,
        seed,
        mean_accuracy: mean(folds.iter().map(|f| f.accuracy).collect()),
        mean_tpr: mean(folds.iter().filter_map(|f| f.tpr).collect()),
        mean_tnr: mean(folds.iter().filter_map(|f| f.tnr).collect()),
        folds,
        fold_of,
        predictions,
    })
}

/// Stratified k-fold cross-validation of a tree ensemble.
pub fn kfold_cv(features: &FeatureMatrix, k: usize, params: &ForestParams, seed: u64) -> Result<CVReport> {
    params.validate()?;
    let rows = features.rows();
    let labels = features.labels();
    cross_validate(features, k, seed, |fold, train, test| {
        let x: Vec<Vec<f64>> = train.iter().map(|i| rows[*i].clone()).collect();
        let y: Vec<u8> = train.iter().map(|i| labels[*i]).collect();
        let model = train_forest(&x, &y, params, derive_seed(seed, STREAM_FOLD_MODEL, fold as u64))?;
        Ok(test.iter().map(|i| model.predict(&rows[*i])).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_and_cover() {
        let labels: Vec<u8> = (0..53).map(|i| u8::from(i % 3 == 0)).collect();
        let f = stratified_folds(&labels, 5, 1).unwrap();
        for fold in 0..5 {
            let pos = (0..53).filter(|i| f[*i] == fold && labels[*i] == 1).count();
            assert!((3..=4).contains(&pos));
        }
        assert!(stratified_folds(&labels, 1, 0).is_err());
        assert!(stratified_folds(&labels, 54, 0).is_err());
    }

    #[test]
    fn missing_class_in_training_fold() {
        let fm = FeatureMatrix::new(
            vec!["x".into()],
            (0..4).map(|i| vec![i as f64]).collect(),
            vec![0, 0, 0, 1],
            (0..4).map(|i| i.to_string()).collect(),
        )
        .unwrap();
        assert!(matches!(
            kfold_cv(&fm, 4, &ForestParams::default(), 0),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn fold_metrics() {
        let r = FoldResult::new(0, &[1, 1, 0, 0], &[1, 0, 0, 0]);
        assert_eq!((r.tp, r.fn_, r.tn, r.fp), (1, 1, 2, 0));
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.tpr, Some(0.5));
        assert_eq!(FoldResult::new(0, &[0], &[0]).tpr, None);
    }
}
