use crate::error::{Error, Result};
use crate::features::Feature;

/// Area under the ROC curve via the Mann-Whitney statistic, ties counted
/// as one half.
///
/// Ranks are kept doubled so the statistic is an exact integer; the result
/// is `2U / (2 P N)`.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("scores contain NaN"));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::analysis("AUROC undefined for single-class data"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // Positions start..=end share the mid-rank (start + end + 2) / 2.
        let doubled_mid = (start + end + 2) as u64;
        let tied_pos = order[start..=end].iter().filter(|&&i| labels[i]).count() as u64;
        doubled_rank_sum += doubled_mid * tied_pos;
        start = end + 1;
    }
    let doubled_u = doubled_rank_sum - pos * (pos + 1);
    Ok(doubled_u as f64 / (2 * pos * neg) as f64)
}

/// Flips reversed features so larger always means more recoverable.
pub fn orient_score(feature: Feature, values: &[f64]) -> Vec<f64> {
    if feature.is_reversed() {
        values.iter().map(|v| -v).collect()
    } else {
        values.to_vec()
    }
}
