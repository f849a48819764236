use crate::error::{invalid, Result};

/// Share of residual variance explained by a leave-one-out k-NN smoother in
/// time, `1 - SSE_knn / SSE_mean`, clipped to `[0, 1]`.
///
/// Neighbours of `i` are the `k_nn` closest grid indices other than `i`;
/// at equal distance the earlier index wins. Constant residuals score 0.
pub fn knn_structure_score(residuals: &[f64], k_nn: usize) -> Result<f64> {
    let n = residuals.len();
    if k_nn == 0 || k_nn >= n {
        return Err(invalid(format!("k_nn = {k_nn} must be in [1, n) with n = {n}")));
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let sse_mean: f64 = residuals.iter().map(|r| (r - mean).powi(2)).sum();
    let scale = residuals.iter().fold(1.0f64, |m, r| m.max(r * r));
    if sse_mean <= f64::EPSILON * f64::EPSILON * n as f64 * scale {
        return Ok(0.0);
    }
    let mut sse_knn = 0.0;
    for i in 0..n {
        let (mut lo, mut hi) = (i, i);
        let mut sum = 0.0;
        for _ in 0..k_nn {
            let left = lo.checked_sub(1);
            let right = (hi + 1 < n).then_some(hi + 1);
            match (left, right) {
                (Some(l), Some(r)) if i - l <= r - i => {
                    sum += residuals[l];
                    lo = l;
                }
                (_, Some(r)) => {
                    sum += residuals[r];
                    hi = r;
                }
                (Some(l), None) => {
                    sum += residuals[l];
                    lo = l;
                }
                (None, None) => unreachable!("k_nn < n"),
            }
        }
        sse_knn += (residuals[i] - sum / k_nn as f64).powi(2);
    }
    Ok((1.0 - sse_knn / sse_mean).clamp(0.0, 1.0))
}
