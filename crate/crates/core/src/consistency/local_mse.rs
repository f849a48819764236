use serde::{Deserialize, Serialize};

use crate::error::{invalid, DriftError, Result};
use crate::streams::Path;

/// Window size of the k-local MSE; `k` is odd with half width `k0 = (k-1)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalMseParams {
    k: usize,
}

impl LocalMseParams {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(invalid(format!("window size k must be odd and positive, got {k}")));
        }
        Ok(Self { k })
    }

    /// Largest odd `k <= sqrt(n)`.
    pub fn for_length(n: usize) -> Self {
        let mut k = (n as f64).sqrt().floor() as usize;
        // guard against sqrt rounding for perfect squares
        while (k + 1) * (k + 1) <= n {
            k += 1;
        }
        while k * k > n {
            k -= 1;
        }
        if k.is_multiple_of(2) {
            k = k.saturating_sub(1);
        }
        Self { k: k.max(1) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k0(&self) -> usize {
        (self.k - 1) / 2
    }
}

/// Whether the statistic is divided by a noise-variance estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmseNormalization {
    #[default]
    Raw,
    /// Divide by `sum (r_{i+1} - r_i)^2 / (2 (n - 1))`.
    NoiseVariance,
}

/// k-local MSE of `path` against model predictions on the same grid.
pub fn local_mse(path: &Path, predictions: &[f64], params: LocalMseParams) -> Result<f64> {
    if predictions.len() != path.len() {
        return Err(DriftError::GridMismatch {
            expected: path.len(),
            got: predictions.len(),
        });
    }
    let r: Vec<f64> = path.values.iter().zip(predictions).map(|(x, f)| x - f).collect();
    local_mse_of_residuals(&r, params)
}

/// `(1/(n-k)) sum_{i=k0+1}^{n-k0} ((1/k) sum_{|j|<=k0} r_{i+j})^2` with
/// one-based `i`; the sum has `n - k + 1` terms.
pub fn local_mse_of_residuals(residuals: &[f64], params: LocalMseParams) -> Result<f64> {
    let n = residuals.len();
    let k = params.k;
    if k >= n {
        return Err(invalid(format!("window size k = {k} must be < n = {n}")));
    }
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    let mut comp = 0.0;
    prefix.push(0.0);
    for &r in residuals {
        // Neumaier summation keeps window differences accurate
        let t = acc + r;
        if acc.abs() >= r.abs() {
            comp += (acc - t) + r;
        } else {
            comp += (r - t) + acc;
        }
        acc = t;
        prefix.push(acc + comp);
    }
    let kf = k as f64;
    let total: f64 = (0..=n - k)
        .map(|start| {
            let m = (prefix[start + k] - prefix[start]) / kf;
            m * m
        })
        .sum();
    Ok(total / (n - k) as f64)
}

/// Difference-based noise variance estimate `sum (r_{i+1} - r_i)^2 / (2(n-1))`.
pub fn difference_variance(residuals: &[f64]) -> f64 {
    if residuals.len() < 2 {
        return 0.0;
    }
    let ss: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    ss / (2.0 * (residuals.len() - 1) as f64)
}

pub(crate) fn normalize(lmse: f64, residuals: &[f64], how: LmseNormalization) -> f64 {
    match how {
        LmseNormalization::Raw => lmse,
        LmseNormalization::NoiseVariance => lmse / difference_variance(residuals).max(1e-12),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(r: &[f64], k: usize) -> f64 {
        let n = r.len();
        let k0 = (k - 1) / 2;
        let mut total = 0.0;
        for i in (k0 + 1)..=(n - k0) {
            let mut s = 0.0;
            for j in (i - k0)..=(i + k0) {
                s += r[j - 1];
            }
            total += (s / k as f64).powi(2);
        }
        total / (n - k) as f64
    }

    #[test]
    fn hand_example() {
        let r = [1.0, -1.0, 2.0, 0.0, 1.0];
        let v = local_mse_of_residuals(&r, LocalMseParams::new(3).unwrap()).unwrap();
        assert!((v - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_model_gives_zero() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let p = Path::new(x.clone(), 0).unwrap();
        assert_eq!(local_mse(&p, &x, LocalMseParams::new(7).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn parameter_errors() {
        assert!(LocalMseParams::new(4).is_err());
        assert!(LocalMseParams::new(0).is_err());
        let k5 = LocalMseParams::new(5).unwrap();
        assert!(local_mse_of_residuals(&[0.0; 5], k5).is_err());
        let p = Path::new(vec![0.0; 10], 0).unwrap();
        assert!(local_mse(&p, &[0.0; 9], k5).is_err());
    }

    #[test]
    fn default_window() {
        assert_eq!(LocalMseParams::for_length(1000).k(), 31);
        assert_eq!(LocalMseParams::for_length(500).k(), 21);
        assert_eq!(LocalMseParams::for_length(300).k(), 17);
        assert_eq!(LocalMseParams::for_length(3000).k(), 53);
        assert_eq!(LocalMseParams::for_length(49).k(), 7);
        assert_eq!(LocalMseParams::for_length(64).k(), 7);
        assert_eq!(LocalMseParams::for_length(2).k(), 1);
    }

    #[test]
    fn difference_variance_of_white_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let d = Normal::new(0.0, 0.3).unwrap();
        let r: Vec<f64> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        assert!((difference_variance(&r) - 0.09).abs() < 0.005);
        let lm = local_mse_of_residuals(&r, LocalMseParams::new(11).unwrap()).unwrap();
        let ratio = normalize(lm, &r, LmseNormalization::NoiseVariance);
        // E[lMSE] = sigma^2 / k for white noise
        assert!((ratio - 1.0 / 11.0).abs() < 0.02, "{ratio}");
    }

    proptest! {
        #[test]
        fn matches_naive_oracle(
            r in prop::collection::vec(-100.0f64..100.0, 2..200),
            kk in 0usize..100,
        ) {
            let n = r.len();
            let k = (2 * kk + 1).min(if n % 2 == 0 { n - 1 } else { n - 2 });
            let fast = local_mse_of_residuals(&r, LocalMseParams::new(k).unwrap()).unwrap();
            let slow = naive(&r, k);
            prop_assert!(fast >= 0.0);
            prop_assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1e-300), "{} vs {}", fast, slow);
        }
    }
}
