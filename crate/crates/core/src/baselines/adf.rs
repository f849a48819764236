//! Augmented Dickey-Fuller unit-root test.
//!
//! Regresses `dy_t` on a constant (and a linear trend), `y_{t-1}` and lagged
//! differences, and reports the t-ratio of `y_{t-1}`. Lag order is chosen by
//! AIC over a common estimation sample; p-values come from MacKinnon's
//! response-surface approximation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ols::ols;
use super::TestResult;
use crate::error::{DriftError, Result};
use crate::score::Method;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfRegression {
    #[default]
    Constant,
    ConstantTrend,
}

impl AdfRegression {
    fn trend_terms(&self) -> usize {
        match self {
            AdfRegression::Constant => 1,
            AdfRegression::ConstantTrend => 2,
        }
    }
}

/// How the number of lagged differences is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfLags {
    /// AIC search up to `floor(12 (n/100)^(1/4))`.
    #[default]
    Auto,
    /// AIC search up to the given maximum.
    MaxAic(usize),
    /// Exactly this many lags.
    Fixed(usize),
}

// MacKinnon (1994) single-series coefficients.
struct Surface {
    min: f64,
    max: f64,
    star: f64,
    small: [f64; 3],
    large: [f64; 4],
}

const SURFACE_C: Surface = Surface {
    min: -18.83,
    max: 2.74,
    star: -1.61,
    small: [2.1659, 1.4412, 3.8269e-2],
    large: [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
};

const SURFACE_CT: Surface = Surface {
    min: -16.18,
    max: 0.7,
    star: -2.89,
    small: [3.2512, 1.6047, 4.9588e-2],
    large: [2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2],
};

/// Approximate p-value of an ADF statistic.
pub fn mackinnon_p_value(stat: f64, regression: AdfRegression) -> f64 {
    let s = match regression {
        AdfRegression::Constant => &SURFACE_C,
        AdfRegression::ConstantTrend => &SURFACE_CT,
    };
    if stat > s.max {
        return 1.0;
    }
    if stat < s.min {
        return 0.0;
    }
    let coef: &[f64] = if stat <= s.star { &s.small } else { &s.large };
    let z = coef.iter().rev().fold(0.0, |acc, c| acc * stat + c);
    Normal::standard().cdf(z)
}

/// Default maximum lag `floor(12 (n/100)^(1/4))`, capped so the largest
/// regression keeps half the sample.
pub fn default_max_lag(n: usize, regression: AdfRegression) -> usize {
    let rule = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
    let cap = (n / 2).saturating_sub(regression.trend_terms() + 1);
    rule.min(cap)
}

/// Regression of the last `nobs` differences on `y_{t-1}`, `lags` lagged
/// differences and the trend terms, in that column order.
fn design(
    y: &[f64],
    dy: &[f64],
    lags: usize,
    nobs: usize,
    regression: AdfRegression,
) -> (Vec<f64>, DMatrix<f64>) {
    let start = dy.len() - nobs;
    let nt = regression.trend_terms();
    let x = DMatrix::from_fn(nobs, 1 + lags + nt, |row, col| {
        let t = start + row;
        match col {
            0 => y[t],
            c if c <= lags => dy[t - c],
            c if c == lags + 1 => 1.0,
            _ => (row + 1) as f64,
        }
    });
    (dy[start..].to_vec(), x)
}

pub fn adf_test(series: &[f64], lags: AdfLags, regression: AdfRegression) -> Result<TestResult> {
    let n = series.len();
    let max_lag = match lags {
        AdfLags::Auto => default_max_lag(n, regression),
        AdfLags::MaxAic(l) | AdfLags::Fixed(l) => l,
    };
    if n <= max_lag + 10 {
        return Err(DriftError::SeriesTooShort {
            needed: max_lag + 11,
            got: n,
        });
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let used = match lags {
        AdfLags::Fixed(l) => l,
        AdfLags::Auto | AdfLags::MaxAic(_) => {
            let nobs = dy.len() - max_lag;
            let mut best = (f64::INFINITY, 0usize);
            for l in 0..=max_lag {
                let (yv, x) = design(series, &dy, l, nobs, regression);
                let aic = ols(&yv, &x, "ADF lag selection")?.aic();
                if aic < best.0 {
                    best = (aic, l);
                }
            }
            best.1
        }
    };
    let nobs = dy.len() - used;
    let (yv, x) = design(series, &dy, used, nobs, regression);
    let fit = ols(&yv, &x, "ADF regression")?;
    let statistic = fit.t_value(0);
    Ok(TestResult {
        statistic,
        p_value: mackinnon_p_value(statistic, regression),
        method: Method::Adf,
        n_permutations: None,
        lags: Some(used),
    })
}
