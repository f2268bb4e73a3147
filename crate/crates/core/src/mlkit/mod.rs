//! Statistical analysis stack: AUROC, CART trees, random forests,
//! stratified cross-validation and permutation importance.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod auroc;
pub mod cv;
pub mod forest;
pub mod importance;
pub mod tree;

pub use auroc::{auroc, orient_score};
pub use cv::{cv_auroc, stratified_kfold, CvAuroc, Fold};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use importance::{permutation_importance, Importance};
pub use tree::{fit_tree, Node, TreeModel, TreeParams};

/// A feature vector with its binary outcome (`true` = recoverable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: bool,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, label: bool) -> Self {
        LabeledSample { features, label }
    }
}

/// A fitted model that scores samples by predicted probability of the
/// positive class.
pub trait Classifier {
    fn predict_proba(&self, x: &[f64]) -> f64;

    /// Feature indices used by at least one split.
    fn split_features(&self) -> BTreeSet<usize>;

    fn predict_many(&self, samples: &[LabeledSample]) -> Vec<f64> {
        samples
            .iter()
            .map(|s| self.predict_proba(&s.features))
            .collect()
    }
}

/// Checks a training set: non-empty, rectangular, finite. Returns the width.
pub(crate) fn check_samples(samples: &[LabeledSample]) -> Result<usize> {
    let first = samples
        .first()
        .ok_or_else(|| Error::domain("empty sample set"))?;
    let d = first.features.len();
    if d == 0 {
        return Err(Error::domain("samples have no features"));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.features.len() != d {
            return Err(Error::domain(format!(
                "sample {i} has {} features, expected {d}",
                s.features.len()
            )));
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "sample {i} has a non-finite feature"
            )));
        }
    }
    Ok(d)
}

pub(crate) fn labels(samples: &[LabeledSample]) -> Vec<bool> {
    samples.iter().map(|s| s.label).collect()
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
