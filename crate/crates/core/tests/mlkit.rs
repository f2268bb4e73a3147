use order_recovery::mlkit::{
    auroc, fit_forest, fit_tree, permutation_importance, Classifier, ForestParams, LabeledSample,
    TreeParams,
};
use proptest::prelude::*;

fn labels(rows: &[LabeledSample]) -> Vec<bool> {
    rows.iter().map(|s| s.label).collect()
}

fn dataset() -> impl Strategy<Value = Vec<LabeledSample>> {
    prop::collection::vec((prop::collection::vec(0u8..6, 3), any::<bool>()), 4..80).prop_map(
        |rows| {
            rows.into_iter()
                .map(|(x, l)| LabeledSample::new(x.into_iter().map(f64::from).collect(), l))
                .collect()
        },
    )
}

/// Drops rows whose features repeat an earlier row.
fn dedup(rows: Vec<LabeledSample>) -> Vec<LabeledSample> {
    let mut seen = Vec::new();
    rows.into_iter()
        .filter(|s| {
            let fresh = !seen.contains(&s.features);
            seen.push(s.features.clone());
            fresh
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unlimited_tree_fits_distinct_rows(rows in dataset()) {
        let rows = dedup(rows);
        let tree = fit_tree(&rows, &TreeParams::default()).unwrap();
        for s in &rows {
            prop_assert_eq!(tree.predict_proba(&s.features) > 0.5, s.label);
        }
    }

    #[test]
    fn training_error_non_increasing_in_depth(rows in dataset()) {
        let mut last = usize::MAX;
        for depth in 0..6 {
            let p = TreeParams { max_depth: Some(depth), ..TreeParams::default() };
            let tree = fit_tree(&rows, &p).unwrap();
            let errors = rows.iter().filter(|s| (tree.predict_proba(&s.features) > 0.5) != s.label).count();
            prop_assert!(errors <= last);
            last = errors;
        }
    }

    #[test]
    fn unused_features_have_zero_importance(rows in dataset(), seed: u64) {
        let y = labels(&rows);
        prop_assume!(y.iter().any(|&l| l) && y.iter().any(|&l| !l));
        let p = TreeParams { max_depth: Some(1), ..TreeParams::default() };
        let tree = fit_tree(&rows, &p).unwrap();
        let used = tree.split_features();
        for f in (0..3).filter(|f| !used.contains(f)) {
            let imp = permutation_importance(&tree, &rows, f, 3, seed).unwrap();
            prop_assert_eq!(imp.mean, 0.0);
        }
    }

    #[test]
    fn forest_auroc_is_in_unit_interval(rows in dataset(), seed: u64) {
        let y = labels(&rows);
        prop_assume!(y.iter().any(|&l| l) && y.iter().any(|&l| !l));
        let forest = fit_forest(&rows, &ForestParams { n_trees: 10, seed, ..ForestParams::default() }).unwrap();
        let a = auroc(&forest.predict_many(&rows), &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
    }
}
