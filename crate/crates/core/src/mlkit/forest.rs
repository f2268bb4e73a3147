use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, TreeModel, TreeParams};
use super::{check_samples, Classifier, LabeledSample};
use crate::error::Result;
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features examined per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_features: None,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_max_features(&self, d: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<TreeModel>,
    max_features: usize,
    tree_seeds: Vec<u64>,
}

impl ForestModel {
    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn tree_seeds(&self) -> &[u64] {
        &self.tree_seeds
    }

    /// Same forest with trees in a different order.
    pub fn reordered(&self, order: &[usize]) -> ForestModel {
        ForestModel {
            trees: order.iter().map(|&i| self.trees[i].clone()).collect(),
            max_features: self.max_features,
            tree_seeds: order.iter().map(|&i| self.tree_seeds[i]).collect(),
        }
    }
}

impl Classifier for ForestModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict_proba(x)).sum();
        total / self.trees.len() as f64
    }

    fn split_features(&self) -> BTreeSet<usize> {
        self.trees.iter().flat_map(|t| t.split_features()).collect()
    }
}

/// Random forest of CART trees. Tree `i` draws its bootstrap sample and
/// per-split feature subsets from `derive_seed(seed, [i])`, so the model
/// does not depend on how the trees are scheduled.
pub fn fit_forest(samples: &[LabeledSample], params: &ForestParams) -> Result<ForestModel> {
    let d = check_samples(samples)?;
    let max_features = params.resolved_max_features(d);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(max_features),
    };
    let n = samples.len();
    let tree_seeds: Vec<u64> = (0..params.n_trees.max(1) as u64)
        .map(|i| derive_seed(params.seed, &[i]))
        .collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = seeded(seed);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree_on(samples, rows, &tree_params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        max_features,
        tree_seeds,
    })
}
