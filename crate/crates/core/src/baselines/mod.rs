//! Reference detectors: kernel two-sample tests (MMD, kernel Fisher
//! discriminant ratio), kernel change-point segmentation, and the ADF and
//! KPSS unit-root/stationarity tests.
//!
//! Kernel methods default to a Gaussian kernel with median-heuristic
//! bandwidth and permutation p-values.

mod adf;
mod kcpd;
mod kernel;
mod kpss;
mod ols;
mod two_sample;

pub use adf::{adf_test, default_max_lag, mackinnon_p_value, AdfLags, AdfRegression};
pub use kcpd::{
    kcpd_scan, kcpd_scan_with, ChangePointReport, KcpdConfig, DEFAULT_LEVEL, DEFAULT_MIN_SEGMENT,
};
pub use kernel::{
    gaussian, median_heuristic, pivoted_cholesky, Bandwidth, KernelSpec, LowRankFactor,
    FACTOR_TOLERANCE,
};
pub use kpss::{auto_lags as kpss_auto_lags, kpss_p_value, kpss_test, KpssRegression};
pub use two_sample::{kfdr_test, mmd_squared, mmd_test, DEFAULT_KFDR_GAMMA, DEFAULT_PERMUTATIONS};

use serde::Serialize;

use crate::score::Method;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    /// In `[0, 1]`.
    pub p_value: f64,
    pub method: Method,
    pub n_permutations: Option<usize>,
    /// Lag order used by ADF/KPSS.
    pub lags: Option<usize>,
}
