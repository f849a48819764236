//! Consistency detector: fit one global model from a feature class to the
//! whole path, then measure how much structure the residuals keep.
//!
//! Two residual checks are provided. The k-local MSE averages residuals over
//! sliding windows of `k` points before squaring, so noise cancels while
//! systematic misfit survives. The k-NN check asks whether residuals are
//! predictable from their neighbours in time.

mod basis;
mod fit;
mod knn;
mod local_mse;

pub use basis::FeatureBasis;
pub use fit::{fit_global_model, GlobalModel, ModelFitter};
pub use knn::knn_structure_score;
pub use local_mse::{
    difference_variance, local_mse, local_mse_of_residuals, LmseNormalization, LocalMseParams,
};

pub use crate::score::{DetectorScore, Method};

use crate::error::{DriftError, Result};
use crate::streams::{EquidistantGrid, Path};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;

/// Fits the global model and returns the k-local MSE of its residuals.
pub fn consistency_score(
    path: &Path,
    basis: FeatureBasis,
    ridge_lambda: f64,
    params: LocalMseParams,
) -> Result<DetectorScore> {
    ConsistencyDetector::new(basis, path.grid, ridge_lambda, params)?.score(&path.values)
}

/// Residual k-NN structure score of `path` against an already fitted model.
pub fn residual_knn_score(path: &Path, model: &GlobalModel, k_nn: usize) -> Result<DetectorScore> {
    let pred = model.predict(&path.grid);
    let r: Vec<f64> = path.values.iter().zip(pred).map(|(x, f)| x - f).collect();
    let value = knn_structure_score(&r, k_nn)?;
    Ok(DetectorScore::new(
        Method::GmKnn,
        value,
        format!(
            "poly={};trig={};lambda={};k_nn={k_nn}",
            model.basis.poly_degree, model.basis.trig_degree, model.ridge_lambda
        ),
    ))
}

/// Reusable detector for many paths on one grid.
#[derive(Clone, Debug)]
pub struct ConsistencyDetector {
    fitter: ModelFitter,
    ridge_lambda: f64,
    params: LocalMseParams,
    normalization: LmseNormalization,
}

impl ConsistencyDetector {
    pub fn new(
        basis: FeatureBasis,
        grid: EquidistantGrid,
        ridge_lambda: f64,
        params: LocalMseParams,
    ) -> Result<Self> {
        Ok(Self {
            fitter: ModelFitter::new(basis, grid, ridge_lambda)?,
            ridge_lambda,
            params,
            normalization: LmseNormalization::Raw,
        })
    }

    pub fn with_normalization(mut self, normalization: LmseNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn fitter(&self) -> &ModelFitter {
        &self.fitter
    }

    fn params_string(&self) -> String {
        let b = self.fitter.basis();
        let norm = match self.normalization {
            LmseNormalization::Raw => "",
            LmseNormalization::NoiseVariance => ";normalized",
        };
        format!(
            "poly={};trig={};lambda={};k={}{norm}",
            b.poly_degree,
            b.trig_degree,
            self.ridge_lambda,
            self.params.k()
        )
    }

    /// k-local MSE of the residuals after the global fit.
    pub fn score(&self, values: &[f64]) -> Result<DetectorScore> {
        let r = self.fitter.residuals(values)?;
        let lmse = local_mse_of_residuals(&r, self.params)?;
        let value = local_mse::normalize(lmse, &r, self.normalization);
        if !value.is_finite() {
            return Err(DriftError::InvalidParameter(
                "non-finite local MSE; check the input values".into(),
            ));
        }
        Ok(DetectorScore::new(Method::Gm, value, self.params_string()))
    }

    /// k-NN structure score of the residuals after the global fit.
    pub fn knn_score(&self, values: &[f64], k_nn: usize) -> Result<DetectorScore> {
        let r = self.fitter.residuals(values)?;
        let b = self.fitter.basis();
        Ok(DetectorScore::new(
            Method::GmKnn,
            knn_structure_score(&r, k_nn)?,
            format!(
                "poly={};trig={};lambda={};k_nn={k_nn}",
                b.poly_degree, b.trig_degree, self.ridge_lambda
            ),
        ))
    }
}
