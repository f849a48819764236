use crate::error::{invalid, DriftError, Result};

/// Normalised Mann-Whitney statistic: the probability that a drift score
/// exceeds a null score, ties counting one half.
pub fn roc_auc(scores_drift: &[f64], scores_null: &[f64]) -> Result<f64> {
    if scores_drift.is_empty() || scores_null.is_empty() {
        return Err(DriftError::EmptyInput("ROC-AUC needs scores in both groups"));
    }
    if scores_drift.iter().chain(scores_null).any(|s| s.is_nan()) {
        return Err(invalid("ROC-AUC scores must not be NaN"));
    }
    let mut null = scores_null.to_vec();
    null.sort_by(f64::total_cmp);
    let mut twice_wins: u128 = 0;
    for &d in scores_drift {
        let below = null.partition_point(|&x| x < d);
        let not_above = null.partition_point(|&x| x <= d);
        twice_wins += 2 * below as u128 + (not_above - below) as u128;
    }
    let pairs = scores_drift.len() as u128 * scores_null.len() as u128;
    Ok(twice_wins as f64 / (2 * pairs) as f64)
}
