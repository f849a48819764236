use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ols::ols;
use super::TestResult;
use crate::error::{invalid, DriftError, Result};
use crate::score::Method;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KpssRegression {
    #[default]
    Level,
    Trend,
}

const P_LEVELS: [f64; 4] = [0.10, 0.05, 0.025, 0.01];
// Kwiatkowski et al. (1992), Table 1.
const CRIT_LEVEL: [f64; 4] = [0.347, 0.463, 0.574, 0.739];
const CRIT_TREND: [f64; 4] = [0.119, 0.146, 0.176, 0.216];

/// Linear interpolation in the critical-value table, clamped to
/// `[0.01, 0.10]`.
pub fn kpss_p_value(stat: f64, regression: KpssRegression) -> f64 {
    let crit = match regression {
        KpssRegression::Level => &CRIT_LEVEL,
        KpssRegression::Trend => &CRIT_TREND,
    };
    if stat <= crit[0] {
        return P_LEVELS[0];
    }
    if stat >= crit[3] {
        return P_LEVELS[3];
    }
    let i = crit.iter().rposition(|&c| c <= stat).unwrap_or(0);
    let w = (stat - crit[i]) / (crit[i + 1] - crit[i]);
    P_LEVELS[i] + w * (P_LEVELS[i + 1] - P_LEVELS[i])
}

fn autocov_sum(e: &[f64], lag: usize) -> f64 {
    e[lag..].iter().zip(e).map(|(a, b)| a * b).sum()
}

/// Data-driven Bartlett bandwidth (Hobijn, Franses and Ooms).
pub fn auto_lags(resid: &[f64]) -> usize {
    let n = resid.len();
    let nf = n as f64;
    let covlags = nf.powf(2.0 / 9.0) as usize;
    let mut s0 = resid.iter().map(|e| e * e).sum::<f64>() / nf;
    let mut s1 = 0.0;
    for i in 1..=covlags.min(n - 1) {
        let prod = autocov_sum(resid, i) / (nf / 2.0);
        s0 += prod;
        s1 += i as f64 * prod;
    }
    let s_hat = s1 / s0;
    let gamma = 1.1447 * (s_hat * s_hat).powf(1.0 / 3.0);
    ((gamma * nf.powf(1.0 / 3.0)) as usize).min(n - 1)
}

/// KPSS stationarity test; `lags = None` selects the bandwidth from the data.
pub fn kpss_test(series: &[f64], regression: KpssRegression, lags: Option<usize>) -> Result<TestResult> {
    let n = series.len();
    if n < 30 {
        return Err(DriftError::SeriesTooShort { needed: 30, got: n });
    }
    let resid: Vec<f64> = match regression {
        KpssRegression::Level => {
            let mean = series.iter().sum::<f64>() / n as f64;
            series.iter().map(|x| x - mean).collect()
        }
        KpssRegression::Trend => {
            let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 });
            let fit = ols(series, &x, "KPSS detrending")?;
            series
                .iter()
                .enumerate()
                .map(|(i, y)| y - fit.coef[0] - fit.coef[1] * (i + 1) as f64)
                .collect()
        }
    };
    let lags = match lags {
        Some(l) if l >= n => {
            return Err(invalid(format!("KPSS lags {l} must be < n = {n}")));
        }
        Some(l) => l,
        None => auto_lags(&resid),
    };
    let mut partial = 0.0;
    let eta = resid
        .iter()
        .map(|e| {
            partial += e;
            partial * partial
        })
        .sum::<f64>()
        / (n as f64 * n as f64);
    let mut s2 = resid.iter().map(|e| e * e).sum::<f64>();
    for l in 1..=lags {
        s2 += 2.0 * (1.0 - l as f64 / (lags as f64 + 1.0)) * autocov_sum(&resid, l);
    }
    s2 /= n as f64;
    if !(s2 > 0.0) {
        return Err(invalid("KPSS long-run variance is not positive"));
    }
    let statistic = eta / s2;
    Ok(TestResult {
        statistic,
        p_value: kpss_p_value(statistic, regression),
        method: Method::Kpss,
        n_permutations: None,
        lags: Some(lags),
    })
}
