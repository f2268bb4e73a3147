//! Full analysis of a labeled dataset: single-feature AUROC, cross-validated
//! random forest, permutation importance and an interpretable tree.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{summarize, RunRecord, Summary};
use crate::error::{Error, Result};
use crate::features::Feature;
use crate::mlkit::cv::subset;
use crate::mlkit::{
    auroc, fit_forest, fit_tree, mean_std, orient_score, permutation_importance, stratified_kfold,
    Classifier, CvAuroc, ForestParams, LabeledSample, Node, TreeModel, TreeParams,
};
use crate::rng::derive_seed;

pub const REPORT_VERSION: u32 = 1;

pub fn feature_names() -> Vec<&'static str> {
    Feature::ALL.iter().map(|f| f.name()).collect()
}

/// Feature rows in canonical order, labeled by recoverability.
pub fn samples_from_records(records: &[RunRecord]) -> Vec<LabeledSample> {
    records
        .iter()
        .map(|r| LabeledSample::new(r.features.to_array().to_vec(), r.recoverable))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub k: usize,
    /// Drives fold assignment and permutation shuffles.
    pub seed: u64,
    pub forest: ForestParams,
    pub tree: TreeParams,
    pub perm_repeats: usize,
    pub single_feature: bool,
    pub cv_forest: bool,
    pub permutation: bool,
    pub interpretable_tree: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            k: 5,
            seed: 0,
            forest: ForestParams::default(),
            tree: TreeParams {
                max_depth: Some(3),
                min_samples_leaf: 5,
                max_features: None,
            },
            perm_repeats: 10,
            single_feature: true,
            cv_forest: true,
            permutation: true,
            interpretable_tree: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAuroc {
    pub feature: Feature,
    /// AUROC of the oriented score (sign flipped for reversed features).
    pub auroc: f64,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestReport {
    pub k: usize,
    pub n_trees: usize,
    pub max_features: usize,
    pub cv_auroc: CvAuroc,
}

/// Permutation importance averaged over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: Feature,
    pub mean_drop: f64,
    /// Spread of the per-fold mean drops.
    pub std_across_folds: f64,
    /// Per-fold spread across repeats, averaged over folds.
    pub std_across_repeats: f64,
    pub per_fold: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeReport {
    pub params: TreeParams,
    pub rules: String,
    pub dot: String,
    pub model: TreeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub features: Vec<Feature>,
    pub single_feature_auroc: Option<Vec<FeatureAuroc>>,
    pub forest: Option<ForestReport>,
    pub permutation_importance: Option<Vec<FeatureImportance>>,
    pub tree: Option<TreeReport>,
    pub summary: Summary,
}

fn check_both_classes(samples: &[LabeledSample]) -> Result<()> {
    let pos = samples.iter().filter(|s| s.label).count();
    if pos == 0 || pos == samples.len() {
        return Err(Error::analysis("AUROC undefined for single-class data"));
    }
    Ok(())
}

/// Oriented single-feature AUROC, canonical feature order.
pub fn single_feature_auroc(samples: &[LabeledSample]) -> Result<Vec<FeatureAuroc>> {
    let labels: Vec<bool> = samples.iter().map(|s| s.label).collect();
    Feature::ALL
        .iter()
        .map(|&f| {
            let raw: Vec<f64> = samples.iter().map(|s| s.features[f.index()]).collect();
            Ok(FeatureAuroc {
                feature: f,
                auroc: auroc(&orient_score(f, &raw), &labels)?,
                reversed: f.is_reversed(),
            })
        })
        .collect()
}

pub fn analyze(records: &[RunRecord], cfg: &AnalysisConfig) -> Result<Report> {
    let summary = summarize(records)?;
    let samples = samples_from_records(records);
    check_both_classes(&samples)?;

    let single_feature_auroc = if cfg.single_feature {
        Some(single_feature_auroc(&samples)?)
    } else {
        None
    };

    let (forest, permutation_importance) = if cfg.cv_forest || cfg.permutation {
        let (forest, perm) = cross_validate(&samples, cfg)?;
        (
            cfg.cv_forest.then_some(forest),
            cfg.permutation.then_some(perm),
        )
    } else {
        (None, None)
    };

    let tree = if cfg.interpretable_tree {
        let model = fit_tree(&samples, &cfg.tree)?;
        let names = feature_names();
        Some(TreeReport {
            params: cfg.tree,
            rules: model.to_text(&names),
            dot: model.to_dot(&names),
            model,
        })
    } else {
        None
    };

    Ok(Report {
        version: REPORT_VERSION,
        features: Feature::ALL.to_vec(),
        single_feature_auroc,
        forest,
        permutation_importance,
        tree,
        summary,
    })
}

/// One forest per fold; held-out AUROC and per-feature permutation
/// importance are both measured on that fold's test split. Forest seeds
/// match [`crate::mlkit::cv_auroc`].
fn cross_validate(
    samples: &[LabeledSample],
    cfg: &AnalysisConfig,
) -> Result<(ForestReport, Vec<FeatureImportance>)> {
    let labels: Vec<bool> = samples.iter().map(|s| s.label).collect();
    let folds = stratified_kfold(&labels, cfg.k, cfg.seed)?;
    let d = Feature::ALL.len();
    let mut fold_auroc = Vec::with_capacity(folds.len());
    // [feature][fold] -> (mean, std) over repeats
    let mut drops = vec![Vec::with_capacity(folds.len()); d];
    for (f, fold) in folds.iter().enumerate() {
        let params = ForestParams {
            seed: derive_seed(cfg.forest.seed, &[f as u64]),
            ..cfg.forest
        };
        let model = fit_forest(&subset(samples, &fold.train), &params)?;
        let test = subset(samples, &fold.test);
        let test_labels: Vec<bool> = test.iter().map(|s| s.label).collect();
        fold_auroc.push(auroc(&model.predict_many(&test), &test_labels)?);
        if cfg.permutation {
            let perm_seed = derive_seed(cfg.seed, &[f as u64, 0x7065_726d]);
            for (feature, slot) in drops.iter_mut().enumerate() {
                let imp =
                    permutation_importance(&model, &test, feature, cfg.perm_repeats, perm_seed)?;
                slot.push((imp.mean, imp.std));
            }
        }
    }
    let (mean, std) = mean_std(&fold_auroc);
    let forest = ForestReport {
        k: cfg.k,
        n_trees: cfg.forest.n_trees,
        max_features: cfg.forest.resolved_max_features(d),
        cv_auroc: CvAuroc {
            mean,
            std,
            folds: fold_auroc,
        },
    };
    let importance = if cfg.permutation {
        Feature::ALL
            .iter()
            .zip(&drops)
            .map(|(&feature, per)| {
                let means: Vec<f64> = per.iter().map(|p| p.0).collect();
                let (mean_drop, std_across_folds) = mean_std(&means);
                let std_across_repeats = per.iter().map(|p| p.1).sum::<f64>() / per.len() as f64;
                FeatureImportance {
                    feature,
                    mean_drop,
                    std_across_folds,
                    std_across_repeats,
                    per_fold: means,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((forest, importance))
}

/// Formats with six significant digits for human-readable tables.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

impl Report {
    /// Plain-text rendering of every section that was computed.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.summary.headline());
        if let Some(rows) = &self.single_feature_auroc {
            let _ = writeln!(out, "\nSingle-feature AUROC (oriented)");
            for r in rows {
                let flip = if r.reversed { " (sign reversed)" } else { "" };
                let _ = writeln!(out, "  {:<12} {}{flip}", r.feature.name(), sig6(r.auroc));
            }
        }
        if let Some(f) = &self.forest {
            let _ = writeln!(
                out,
                "\nRandom forest ({} trees, {}-fold CV): AUROC = {} ± {}",
                f.n_trees,
                f.k,
                sig6(f.cv_auroc.mean),
                sig6(f.cv_auroc.std)
            );
        }
        if let Some(rows) = &self.permutation_importance {
            let _ = writeln!(out, "\nPermutation importance (held-out AUROC drop)");
            for r in rows {
                let _ = writeln!(
                    out,
                    "  {:<12} {}  (fold std {}, repeat std {})",
                    r.feature.name(),
                    sig6(r.mean_drop),
                    sig6(r.std_across_folds),
                    sig6(r.std_across_repeats)
                );
            }
        }
        if let Some(t) = &self.tree {
            let _ = writeln!(out, "\nDecision tree [not recoverable, recoverable]");
            out.push_str(&t.rules);
        }
        out
    }
}

/// CSV and SVG renderings of the analysis figures.
pub mod plots {
    use super::*;

    /// Feature pairs for the two scatter panels.
    pub const SCATTER_PAIRS: [(Feature, Feature, &str); 2] = [
        (Feature::APeak, Feature::HNorm, "scatter_hnorm_vs_apeak"),
        (Feature::MarginFrac, Feature::M1Frac, "scatter_m1_vs_margin"),
    ];

    pub const HISTOGRAM_BINS: usize = 20;

    /// Columns `x,y,label` with `label` 1 for recoverable.
    pub fn scatter_csv(samples: &[LabeledSample], x: Feature, y: Feature) -> String {
        let mut out = String::from("x,y,label\n");
        for s in samples {
            let _ = writeln!(
                out,
                "{},{},{}",
                s.features[x.index()],
                s.features[y.index()],
                s.label as u8
            );
        }
        out
    }

    fn median(mut v: Vec<f64>) -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            (v[m - 1] + v[m]) / 2.0
        }
    }

    /// Per-class histogram on a shared binning.
    #[derive(Debug, Clone, PartialEq)]
    pub struct ClassHistogram {
        pub edges: Vec<f64>,
        pub density_neg: Vec<f64>,
        pub density_pos: Vec<f64>,
        pub median_neg: f64,
        pub median_pos: f64,
    }

    pub fn class_histogram(samples: &[LabeledSample], f: Feature, bins: usize) -> ClassHistogram {
        let vals: Vec<f64> = samples.iter().map(|s| s.features[f.index()]).collect();
        let mut lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo >= hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = [vec![0usize; bins], vec![0usize; bins]];
        for (s, v) in samples.iter().zip(&vals) {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[s.label as usize][b] += 1;
        }
        let density = |c: &[usize]| {
            let n: usize = c.iter().sum();
            c.iter()
                .map(|&k| {
                    if n == 0 {
                        0.0
                    } else {
                        k as f64 / (n as f64 * width)
                    }
                })
                .collect::<Vec<f64>>()
        };
        let class_vals = |label: bool| {
            samples
                .iter()
                .zip(&vals)
                .filter(|(s, _)| s.label == label)
                .map(|(_, v)| *v)
                .collect::<Vec<f64>>()
        };
        ClassHistogram {
            density_neg: density(&counts[0]),
            density_pos: density(&counts[1]),
            median_neg: median(class_vals(false)),
            median_pos: median(class_vals(true)),
            edges,
        }
    }

    /// Columns `bin_left,bin_right,density_neg,density_pos`; the final row
    /// `median,,<neg>,<pos>` holds the class medians.
    pub fn histogram_csv(h: &ClassHistogram) -> String {
        let mut out = String::from("bin_left,bin_right,density_neg,density_pos\n");
        for i in 0..h.density_neg.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                h.edges[i],
                h.edges[i + 1],
                h.density_neg[i],
                h.density_pos[i]
            );
        }
        let _ = writeln!(out, "median,,{},{}", h.median_neg, h.median_pos);
        out
    }

    pub fn importance_csv(rows: &[FeatureImportance]) -> String {
        let mut out = String::from("feature,mean_drop,std_across_folds,std_across_repeats\n");
        for r in rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.feature.name(),
                r.mean_drop,
                r.std_across_folds,
                r.std_across_repeats
            );
        }
        out
    }

    pub fn tree_nodes_csv(tree: &TreeModel) -> String {
        let names = feature_names();
        let mut out =
            String::from("id,kind,feature,threshold,not_recoverable,recoverable,predicted\n");
        for (i, n) in tree.nodes().iter().enumerate() {
            let c = n.counts();
            let predicted = crate::mlkit::tree::class_name(&c);
            match n {
                Node::Split {
                    feature, threshold, ..
                } => {
                    let _ = writeln!(
                        out,
                        "{i},split,{},{threshold},{},{},{predicted}",
                        names.get(*feature).copied().unwrap_or("?"),
                        c[0],
                        c[1]
                    );
                }
                Node::Leaf { .. } => {
                    let _ = writeln!(out, "{i},leaf,,,{},{},{predicted}", c[0], c[1]);
                }
            }
        }
        out
    }

    /// Columns `parent,child,branch` with branch `true` for `<=`.
    pub fn tree_edges_csv(tree: &TreeModel) -> String {
        let mut out = String::from("parent,child,branch\n");
        for (i, n) in tree.nodes().iter().enumerate() {
            if let Node::Split { left, right, .. } = n {
                let _ = writeln!(out, "{i},{left},true");
                let _ = writeln!(out, "{i},{right},false");
            }
        }
        out
    }

    const NEG_COLOR: &str = "#e8772e";
    const POS_COLOR: &str = "#3274a1";

    pub fn histogram_svg(h: &ClassHistogram, title: &str) -> String {
        let (w, ht, pad) = (480.0, 300.0, 40.0);
        let bins = h.density_neg.len();
        let ymax = h
            .density_neg
            .iter()
            .chain(&h.density_pos)
            .copied()
            .fold(0.0, f64::max)
            .max(1e-12);
        let (lo, hi) = (h.edges[0], h.edges[bins]);
        let sx = |v: f64| pad + (v - lo) / (hi - lo) * (w - 2.0 * pad);
        let sy = |v: f64| ht - pad - v / ymax * (ht - 2.0 * pad);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{ht}\">\n\
             <text x=\"{pad}\" y=\"20\" font-size=\"14\">{title}</text>\n"
        );
        for i in 0..bins {
            let (x0, x1) = (sx(h.edges[i]), sx(h.edges[i + 1]));
            for (d, color) in [(h.density_neg[i], NEG_COLOR), (h.density_pos[i], POS_COLOR)] {
                let y = sy(d);
                let _ = writeln!(
                    out,
                    "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                     fill=\"{color}\" fill-opacity=\"0.5\"/>",
                    x1 - x0,
                    ht - pad - y
                );
            }
        }
        for (m, color) in [(h.median_neg, NEG_COLOR), (h.median_pos, POS_COLOR)] {
            if m.is_finite() {
                let x = sx(m);
                let _ = writeln!(
                    out,
                    "<line x1=\"{x:.2}\" y1=\"{pad}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                     stroke=\"{color}\" stroke-dasharray=\"4 3\"/>",
                    ht - pad
                );
            }
        }
        let _ = writeln!(
            out,
            "<line x1=\"{pad}\" y1=\"{0:.2}\" x2=\"{1:.2}\" y2=\"{0:.2}\" stroke=\"black\"/>",
            ht - pad,
            w - pad
        );
        out.push_str("</svg>\n");
        out
    }

    pub fn scatter_svg(samples: &[LabeledSample], x: Feature, y: Feature) -> String {
        let (w, ht, pad) = (400.0, 400.0, 40.0);
        let range = |f: Feature| {
            let v = samples.iter().map(|s| s.features[f.index()]);
            let lo = v.clone().fold(f64::INFINITY, f64::min);
            let hi = v.fold(f64::NEG_INFINITY, f64::max);
            if lo < hi {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let ((x0, x1), (y0, y1)) = (range(x), range(y));
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{ht}\">\n\
             <text x=\"{pad}\" y=\"20\" font-size=\"14\">{} vs {}</text>\n",
            y.name(),
            x.name()
        );
        for s in samples {
            let px = pad + (s.features[x.index()] - x0) / (x1 - x0) * (w - 2.0 * pad);
            let py = ht - pad - (s.features[y.index()] - y0) / (y1 - y0) * (ht - 2.0 * pad);
            let color = if s.label { POS_COLOR } else { NEG_COLOR };
            let _ = writeln!(
                out,
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2\" fill=\"{color}\" fill-opacity=\"0.6\"/>"
            );
        }
        out.push_str("</svg>\n");
        out
    }

    /// Every plot file as `(file name, contents)`. SVGs only when requested.
    pub fn render_all(records: &[RunRecord], report: &Report, svg: bool) -> Vec<(String, String)> {
        let samples = samples_from_records(records);
        let mut files = Vec::new();
        for (x, y, name) in SCATTER_PAIRS {
            files.push((format!("{name}.csv"), scatter_csv(&samples, x, y)));
            if svg {
                files.push((format!("{name}.svg"), scatter_svg(&samples, x, y)));
            }
        }
        for f in Feature::ALL {
            let h = class_histogram(&samples, f, HISTOGRAM_BINS);
            files.push((format!("hist_{}.csv", f.name()), histogram_csv(&h)));
            if svg {
                files.push((
                    format!("hist_{}.svg", f.name()),
                    histogram_svg(&h, f.name()),
                ));
            }
        }
        if let Some(rows) = &report.permutation_importance {
            files.push(("permutation_importance.csv".into(), importance_csv(rows)));
        }
        if let Some(t) = &report.tree {
            files.push(("tree_nodes.csv".into(), tree_nodes_csv(&t.model)));
            files.push(("tree_edges.csv".into(), tree_edges_csv(&t.model)));
            files.push(("tree.dot".into(), t.dot.clone()));
        }
        files
    }
}

#[cfg(test)]
mod tests {
    use super::plots::*;
    use super::*;
    use crate::mlkit::cv_auroc;

    fn toy(n: usize) -> Vec<LabeledSample> {
        (0..n)
            .map(|i| {
                let x = (i as f64 * 0.618_033_988_7) % 1.0;
                let z = (i as f64 * 0.414_213_562_3) % 1.0;
                LabeledSample::new(vec![x, 1.0 - x, z, x * z], x > 0.5)
            })
            .collect()
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(0.997), "0.997000");
        assert_eq!(sig6(123.456789), "123.457");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.00123456789), "-0.00123457");
    }

    #[test]
    fn single_feature_orientation() {
        let rows = single_feature_auroc(&toy(100)).unwrap();
        assert_eq!(rows[0].auroc, 1.0);
        // h_norm slot holds 1 - x here; flipping its sign makes it perfect.
        assert_eq!(rows[1].auroc, 1.0);
        assert!(rows[1].reversed);
    }

    #[test]
    fn cross_validation_matches_cv_auroc() {
        let samples = toy(120);
        let cfg = AnalysisConfig {
            forest: ForestParams {
                n_trees: 10,
                seed: 4,
                ..ForestParams::default()
            },
            perm_repeats: 2,
            seed: 9,
            ..AnalysisConfig::default()
        };
        let (forest, imp) = cross_validate(&samples, &cfg).unwrap();
        assert_eq!(
            forest.cv_auroc,
            cv_auroc(&samples, &cfg.forest, 5, 9).unwrap()
        );
        assert_eq!(imp.len(), 4);
        assert!(imp
            .iter()
            .all(|r| r.mean_drop.is_finite() && r.per_fold.len() == 5));
    }

    #[test]
    fn histogram_densities_integrate_to_one() {
        let samples = toy(200);
        let h = class_histogram(&samples, Feature::M1Frac, 20);
        let width = h.edges[1] - h.edges[0];
        for d in [&h.density_neg, &h.density_pos] {
            let total: f64 = d.iter().map(|v| v * width).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        let csv = histogram_csv(&h);
        assert_eq!(csv.lines().count(), 22);
        assert!(csv.lines().last().unwrap().starts_with("median,,"));
        assert!(csv.lines().all(|l| l.split(',').count() == 4));
    }

    #[test]
    fn tree_csvs_cover_all_nodes() {
        let samples = toy(80);
        let tree = fit_tree(&samples, &TreeParams::default()).unwrap();
        let nodes = tree_nodes_csv(&tree);
        assert_eq!(nodes.lines().count(), tree.nodes().len() + 1);
        let edges = tree_edges_csv(&tree);
        assert_eq!(edges.lines().count(), tree.nodes().len());
    }
}
