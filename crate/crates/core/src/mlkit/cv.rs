use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::forest::{fit_forest, ForestParams};
use super::{auroc, labels, mean_std, Classifier, LabeledSample};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

/// One train/test partition; both index lists are ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split.
///
/// Each class is shuffled independently, then dealt round-robin over the
/// folds; the negative class continues where the positives stopped so fold
/// sizes stay balanced.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::domain(format!("k must be >= 2, got {k}")));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    for (name, class) in [("positive", &pos), ("negative", &neg)] {
        if class.len() < k {
            return Err(Error::domain(format!(
                "{name} class has {} members, need at least k={k}",
                class.len()
            )));
        }
    }
    let mut rng = seeded(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut assignment = vec![0usize; labels.len()];
    for (slot, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignment[i] = slot % k;
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

pub(crate) fn subset(samples: &[LabeledSample], idx: &[usize]) -> Vec<LabeledSample> {
    idx.iter().map(|&i| samples[i].clone()).collect()
}

/// Cross-validated held-out AUROC of a random forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvAuroc {
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
    pub folds: Vec<f64>,
}

/// Forest for fold `f` is seeded with `derive_seed(params.seed, [f])`.
pub fn cv_auroc(
    samples: &[LabeledSample],
    params: &ForestParams,
    k: usize,
    seed: u64,
) -> Result<CvAuroc> {
    let folds = stratified_kfold(&labels(samples), k, seed)?;
    let scores = folds
        .iter()
        .enumerate()
        .map(|(f, fold)| {
            let p = ForestParams {
                seed: derive_seed(params.seed, &[f as u64]),
                ..*params
            };
            let model = fit_forest(&subset(samples, &fold.train), &p)?;
            let test = subset(samples, &fold.test);
            auroc(&model.predict_many(&test), &labels(&test))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&scores);
    Ok(CvAuroc {
        mean,
        std,
        folds: scores,
    })
}
