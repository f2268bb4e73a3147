use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{auroc, labels, mean_std, Classifier, LabeledSample};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

/// Held-out AUROC drop from shuffling one feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub mean: f64,
    /// Population standard deviation across repeats.
    pub std: f64,
    pub drops: Vec<f64>,
}

/// Baseline AUROC minus AUROC with column `feature` shuffled, per repeat.
/// Repeat `i` shuffles with `derive_seed(seed, [feature, i])`.
pub fn permutation_importance<M: Classifier + ?Sized>(
    model: &M,
    heldout: &[LabeledSample],
    feature: usize,
    repeats: usize,
    seed: u64,
) -> Result<Importance> {
    if repeats == 0 {
        return Err(Error::domain("repeats must be positive"));
    }
    if heldout.iter().any(|s| feature >= s.features.len()) {
        return Err(Error::domain(format!(
            "feature index {feature} out of range"
        )));
    }
    let y = labels(heldout);
    let baseline = auroc(&model.predict_many(heldout), &y)?;
    let column: Vec<f64> = heldout.iter().map(|s| s.features[feature]).collect();
    let mut row = Vec::new();
    let drops = (0..repeats as u64)
        .map(|rep| {
            let mut shuffled = column.clone();
            shuffled.shuffle(&mut seeded(derive_seed(seed, &[feature as u64, rep])));
            let scores: Vec<f64> = heldout
                .iter()
                .zip(&shuffled)
                .map(|(s, &v)| {
                    row.clear();
                    row.extend_from_slice(&s.features);
                    row[feature] = v;
                    model.predict_proba(&row)
                })
                .collect();
            Ok(baseline - auroc(&scores, &y)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&drops);
    Ok(Importance { mean, std, drops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlkit::{fit_tree, TreeParams};
    use rand::Rng;

    fn label_copy_data(n: usize, seed: u64) -> Vec<LabeledSample> {
        let mut r = seeded(seed);
        (0..n)
            .map(|i| {
                let label = i % 2 == 0;
                let x = vec![r.random(), if label { 1.0 } else { 0.0 }, r.random()];
                LabeledSample::new(x, label)
            })
            .collect()
    }

    #[test]
    fn unused_feature_has_zero_importance() {
        let train = label_copy_data(200, 1);
        let tree = fit_tree(
            &train,
            &TreeParams {
                max_depth: Some(1),
                ..TreeParams::default()
            },
        )
        .unwrap();
        assert_eq!(
            tree.split_features().into_iter().collect::<Vec<_>>(),
            vec![1]
        );
        let test = label_copy_data(100, 2);
        for f in [0, 2] {
            let imp = permutation_importance(&tree, &test, f, 5, 3).unwrap();
            assert_eq!(imp.mean, 0.0);
            assert!(imp.drops.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn label_feature_drops_to_chance() {
        let train = label_copy_data(200, 4);
        let tree = fit_tree(
            &train,
            &TreeParams {
                max_depth: Some(1),
                ..TreeParams::default()
            },
        )
        .unwrap();
        let test = label_copy_data(200, 5);
        let imp = permutation_importance(&tree, &test, 1, 20, 6).unwrap();
        assert!((imp.mean - 0.5).abs() <= 0.1, "{}", imp.mean);
    }

    #[test]
    fn deterministic_per_seed() {
        let train = label_copy_data(100, 7);
        let tree = fit_tree(&train, &TreeParams::default()).unwrap();
        let test = label_copy_data(60, 8);
        let a = permutation_importance(&tree, &test, 1, 1, 11).unwrap();
        let b = permutation_importance(&tree, &test, 1, 1, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_heldout_is_rejected() {
        let train = label_copy_data(50, 9);
        let tree = fit_tree(&train, &TreeParams::default()).unwrap();
        let test: Vec<_> = label_copy_data(20, 10)
            .into_iter()
            .filter(|s| s.label)
            .collect();
        assert!(permutation_importance(&tree, &test, 0, 3, 0).is_err());
        assert!(permutation_importance(&tree, &train, 7, 3, 0).is_err());
    }
}
