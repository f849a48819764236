use std::time::Instant;

use crate::baselines::{
    adf_test, kcpd_scan_with, kfdr_test, kpss_test, mmd_test, AdfLags, AdfRegression, KcpdConfig,
    KernelSpec, KpssRegression,
};
use crate::consistency::{ConsistencyDetector, LocalMseParams};
use crate::error::{invalid, Result};
use crate::score::Method;
use crate::seed::{derive, label};
use crate::streams::EquidistantGrid;

use super::config::DetectorSettings;

/// Detectors prepared for one grid, mapping a path to oriented scores
/// (higher = more drift).
pub struct DetectorSuite {
    methods: Vec<Method>,
    /// Construction errors are kept so that only gm cells fail.
    consistency: Option<std::result::Result<ConsistencyDetector, String>>,
    k_nn: usize,
    split: usize,
    settings: DetectorSettings,
}

impl DetectorSuite {
    pub fn new(
        methods: &[Method],
        grid: EquidistantGrid,
        onset: f64,
        settings: &DetectorSettings,
    ) -> Result<Self> {
        let params = match settings.lmse_k {
            Some(k) => LocalMseParams::new(k)?,
            None => LocalMseParams::for_length(grid.len()),
        };
        let needs_fit = methods.iter().any(|m| matches!(m, Method::Gm | Method::GmKnn));
        let consistency = if needs_fit {
            Some(
                ConsistencyDetector::new(settings.basis, grid, settings.ridge_lambda, params)
                    .map_err(|e| e.to_string()),
            )
        } else {
            None
        };
        Ok(Self {
            methods: methods.to_vec(),
            consistency,
            k_nn: settings.k_nn.unwrap_or(params.k()),
            split: grid.times().filter(|&t| t < onset).count(),
            settings: settings.clone(),
        })
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    /// One score per method with the seconds spent on it.
    pub fn score_all(&self, x: &[f64], seed: u64) -> Vec<(Result<f64>, f64)> {
        self.methods
            .iter()
            .map(|&m| {
                let start = Instant::now();
                let s = self.score(m, x, derive(seed, &[label(m.as_str())]));
                (s, start.elapsed().as_secs_f64())
            })
            .collect()
    }

    pub fn score(&self, method: Method, x: &[f64], seed: u64) -> Result<f64> {
        let s = &self.settings;
        let kernel = KernelSpec::median_heuristic();
        let (early, late) = x.split_at(self.split);
        match method {
            Method::Gm => Ok(self.fit()?.score(x)?.value),
            Method::GmKnn => Ok(self.fit()?.knn_score(x, self.k_nn)?.value),
            Method::Mmd => Ok(1.0 - mmd_test(early, late, &kernel, s.n_permutations, seed)?.p_value),
            Method::Kfrd => Ok(1.0
                - kfdr_test(early, late, &kernel, s.kfdr_gamma, s.n_permutations, seed)?.p_value),
            Method::Kcpd => {
                let cfg = KcpdConfig {
                    min_segment: s.kcpd_min_segment,
                    kernel,
                    n_permutations: s.kcpd_permutations,
                    level: s.kcpd_level,
                };
                Ok(kcpd_scan_with(x, &cfg, seed)?.ranking_score())
            }
            // unit root retained (large p) reads as drift
            Method::Adf => Ok(adf_test(x, AdfLags::Auto, AdfRegression::ConstantTrend)?.p_value),
            Method::Kpss => Ok(1.0 - kpss_test(x, KpssRegression::Trend, None)?.p_value),
        }
    }

    fn fit(&self) -> Result<&ConsistencyDetector> {
        match self.consistency.as_ref().expect("built whenever gm or gm_knn is requested") {
            Ok(d) => Ok(d),
            Err(msg) => Err(invalid(msg.clone())),
        }
    }
}
