//! CART classification trees with Gini impurity.
//!
//! Split selection is exact: impurity comparisons are done on integer
//! cross-products, and ties go to the lowest feature index, then the lowest
//! threshold, so fitted trees are identical on every platform.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_samples, Classifier, LabeledSample};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

/// Tree node. Counts are `[not recoverable, recoverable]` for the training
/// samples routed to the node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Child for `x[feature] <= threshold`.
        left: usize,
        /// Child for `x[feature] > threshold`.
        right: usize,
        counts: [usize; 2],
    },
    Leaf {
        counts: [usize; 2],
        probability: f64,
    },
}

impl Node {
    pub fn counts(&self) -> [usize; 2] {
        match self {
            Node::Split { counts, .. } | Node::Leaf { counts, .. } => *counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
    n_features: usize,
}

impl TreeModel {
    /// Nodes in pre-order; index 0 is the root.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                leaf => return leaf,
            }
        }
    }

    /// Indented rules, one line per node.
    pub fn to_text(&self, names: &[&str]) -> String {
        let mut out = String::new();
        self.text_node(0, 0, names, &mut out);
        out
    }

    fn text_node(&self, i: usize, depth: usize, names: &[&str], out: &mut String) {
        let indent = "|   ".repeat(depth);
        match &self.nodes[i] {
            Node::Leaf { counts, .. } => {
                let _ = writeln!(
                    out,
                    "{indent}|--- predict: {} {:?}",
                    class_name(counts),
                    counts
                );
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
                counts,
            } => {
                let name = feature_name(names, *feature);
                let _ = writeln!(out, "{indent}|--- {name} <= {threshold:.6} {counts:?}");
                self.text_node(*left, depth + 1, names, out);
                let _ = writeln!(out, "{indent}|--- {name} > {threshold:.6}");
                self.text_node(*right, depth + 1, names, out);
            }
        }
    }

    /// Graphviz description: one statement per node and per edge. Solid
    /// edges are the `<=` branch, dashed edges the `>` branch.
    pub fn to_dot(&self, names: &[&str]) -> String {
        let mut out = String::from("digraph tree {\n  node [shape=box];\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let c = node.counts();
            match node {
                Node::Split {
                    feature, threshold, ..
                } => {
                    let _ = writeln!(
                        out,
                        "  n{i} [label=\"{} <= {threshold:.6}\\n[{}, {}]\"];",
                        feature_name(names, *feature),
                        c[0],
                        c[1]
                    );
                }
                Node::Leaf { .. } => {
                    let _ = writeln!(
                        out,
                        "  n{i} [label=\"{}\\n[{}, {}]\"];",
                        class_name(&c),
                        c[0],
                        c[1]
                    );
                }
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = node {
                let _ = writeln!(out, "  n{i} -> n{left} [style=solid, label=\"true\"];");
                let _ = writeln!(out, "  n{i} -> n{right} [style=dashed, label=\"false\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

fn feature_name(names: &[&str], i: usize) -> String {
    names
        .get(i)
        .map_or_else(|| format!("x{i}"), |s| s.to_string())
}

/// Majority class; ties predict "not recoverable".
pub fn class_name(counts: &[usize; 2]) -> &'static str {
    if counts[1] > counts[0] {
        "recoverable"
    } else {
        "not recoverable"
    }
}

impl Classifier for TreeModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        match self.leaf_for(x) {
            Node::Leaf { probability, .. } => *probability,
            Node::Split { .. } => unreachable!("leaf_for returns leaves"),
        }
    }

    fn split_features(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

pub fn fit_tree(samples: &[LabeledSample], params: &TreeParams) -> Result<TreeModel> {
    let rows: Vec<usize> = (0..samples.len()).collect();
    fit_tree_on(samples, rows, params, &mut NoRng)
}

/// Source of per-node feature subsets.
pub(crate) trait FeatureSampler {
    fn choose(&mut self, d: usize, k: usize) -> Vec<usize>;
}

struct NoRng;

impl FeatureSampler for NoRng {
    fn choose(&mut self, d: usize, _k: usize) -> Vec<usize> {
        (0..d).collect()
    }
}

impl<R: Rng> FeatureSampler for R {
    fn choose(&mut self, d: usize, k: usize) -> Vec<usize> {
        if k >= d {
            return (0..d).collect();
        }
        let mut picked = index::sample(self, d, k).into_vec();
        picked.sort_unstable();
        picked
    }
}

fn class_counts(samples: &[LabeledSample], rows: &[usize]) -> [usize; 2] {
    let pos = rows.iter().filter(|&&r| samples[r].label).count();
    [rows.len() - pos, pos]
}

/// Candidate split quality as the exact fraction `num / den`; larger is
/// better. This is `sum over children of (neg^2 + pos^2) / n_child`, which
/// orders splits the same way as the decrease in weighted Gini impurity.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(l: [usize; 2], r: [usize; 2]) -> Self {
        let sq = |c: [usize; 2]| (c[0] * c[0] + c[1] * c[1]) as u128;
        let (nl, nr) = ((l[0] + l[1]) as u128, (r[0] + r[1]) as u128);
        Score {
            num: sq(l) * nr + sq(r) * nl,
            den: nl * nr,
        }
    }

    fn beats(&self, other: &Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Best threshold on one feature, scanning distinct values in ascending order.
fn best_on_feature(
    samples: &[LabeledSample],
    rows: &mut [usize],
    feature: usize,
    total: [usize; 2],
    min_leaf: usize,
) -> Option<Candidate> {
    rows.sort_by(|&a, &b| samples[a].features[feature].total_cmp(&samples[b].features[feature]));
    let n = rows.len();
    let mut left = [0usize; 2];
    let mut best: Option<Candidate> = None;
    for i in 0..n - 1 {
        left[samples[rows[i]].label as usize] += 1;
        let lo = samples[rows[i]].features[feature];
        let hi = samples[rows[i + 1]].features[feature];
        if lo == hi {
            continue;
        }
        let n_left = i + 1;
        if n_left < min_leaf || n - n_left < min_leaf {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let score = Score::new(left, right);
        if best.as_ref().is_none_or(|b| score.beats(&b.score)) {
            best = Some(Candidate {
                feature,
                threshold: midpoint(lo, hi),
                score,
            });
        }
    }
    best
}

fn best_split(
    samples: &[LabeledSample],
    rows: &mut [usize],
    features: &[usize],
    total: [usize; 2],
    min_leaf: usize,
) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for &f in features {
        if let Some(c) = best_on_feature(samples, rows, f, total, min_leaf) {
            if best.as_ref().is_none_or(|b| c.score.beats(&b.score)) {
                best = Some(c);
            }
        }
    }
    best
}

/// Grows a tree on `rows` (indices into `samples`, repeats allowed).
pub(crate) fn fit_tree_on<S: FeatureSampler>(
    samples: &[LabeledSample],
    rows: Vec<usize>,
    params: &TreeParams,
    sampler: &mut S,
) -> Result<TreeModel> {
    let d = check_samples(samples)?;
    let min_leaf = params.min_samples_leaf.max(1);
    let k = params.max_features.unwrap_or(d).clamp(1, d);

    let mut nodes: Vec<Node> = Vec::new();
    // (slot to fill, rows, depth); slots are reserved in pre-order.
    let mut stack = vec![(0usize, rows, 0usize)];
    nodes.push(Node::Leaf {
        counts: [0, 0],
        probability: 0.0,
    });
    while let Some((slot, mut rows, depth)) = stack.pop() {
        let counts = class_counts(samples, &rows);
        let leaf = Node::Leaf {
            counts,
            probability: counts[1] as f64 / rows.len().max(1) as f64,
        };
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || rows.len() < 2 * min_leaf {
            nodes[slot] = leaf;
            continue;
        }
        let chosen = sampler.choose(d, k);
        let mut split = best_split(samples, &mut rows, &chosen, counts, min_leaf);
        if split.is_none() && chosen.len() < d {
            // Every sampled feature was constant here; widen to the rest.
            let rest: Vec<usize> = (0..d).filter(|f| !chosen.contains(f)).collect();
            split = best_split(samples, &mut rows, &rest, counts, min_leaf);
        }
        let Some(split) = split else {
            nodes[slot] = leaf;
            continue;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| samples[r].features[split.feature] <= split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(leaf.clone());
        nodes.push(leaf);
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            counts,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    Ok(TreeModel {
        nodes,
        n_features: d,
    })
}
