use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::FeatureBasis;
use crate::error::{invalid, DriftError, Result};
use crate::streams::{EquidistantGrid, Path};

/// Fitted global model `f(t) = phi(t) . beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalModel {
    pub basis: FeatureBasis,
    pub coefficients: Vec<f64>,
    pub ridge_lambda: f64,
}

impl GlobalModel {
    pub fn predict_at(&self, t: f64) -> f64 {
        self.basis
            .eval(t)
            .iter()
            .zip(&self.coefficients)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn predict(&self, grid: &EquidistantGrid) -> Vec<f64> {
        let mut row = vec![0.0; self.basis.feature_count()];
        grid.times()
            .map(|t| {
                self.basis.eval_into(t, &mut row);
                row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Ridge least-squares solver for one `(basis, grid, lambda)` triple.
///
/// Uses the SVD `Phi = U S V^T`, so `beta = V diag(s / (s^2 + lambda)) U^T x`.
/// The solve operator is formed once and reused for every path on the grid.
#[derive(Clone, Debug)]
pub struct ModelFitter {
    basis: FeatureBasis,
    grid: EquidistantGrid,
    ridge_lambda: f64,
    design: DMatrix<f64>,
    /// `p x n`
    solve: DMatrix<f64>,
    rank: usize,
}

impl ModelFitter {
    pub fn new(basis: FeatureBasis, grid: EquidistantGrid, ridge_lambda: f64) -> Result<Self> {
        if !(ridge_lambda.is_finite() && ridge_lambda >= 0.0) {
            return Err(invalid(format!(
                "ridge_lambda must be finite and >= 0, got {ridge_lambda}"
            )));
        }
        let design = basis.design_matrix(&grid);
        let (n, p) = design.shape();
        let svd = design.clone().svd(true, true);
        let u = svd.u.as_ref().expect("U requested");
        let v_t = svd.v_t.as_ref().expect("V^T requested");
        let s = &svd.singular_values;
        let s_max = s.iter().cloned().fold(0.0, f64::max);
        let tol = s_max * n.max(p) as f64 * f64::EPSILON;
        let rank = s.iter().filter(|&&x| x > tol).count();
        if ridge_lambda == 0.0 && rank < p {
            return Err(DriftError::RankDeficient { rank, features: p });
        }
        let gains: Vec<f64> = s
            .iter()
            .map(|&x| {
                if ridge_lambda == 0.0 {
                    if x > tol {
                        1.0 / x
                    } else {
                        0.0
                    }
                } else {
                    x / (x * x + ridge_lambda)
                }
            })
            .collect();
        // V diag(g) U^T
        let mut scaled_vt = v_t.clone();
        for (r, g) in gains.iter().enumerate() {
            scaled_vt.row_mut(r).scale_mut(*g);
        }
        let solve = scaled_vt.transpose() * u.transpose();
        Ok(Self {
            basis,
            grid,
            ridge_lambda,
            design,
            solve,
            rank,
        })
    }

    pub fn basis(&self) -> FeatureBasis {
        self.basis
    }

    pub fn grid(&self) -> EquidistantGrid {
        self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(DriftError::GridMismatch {
                expected: self.grid.len(),
                got: values.len(),
            });
        }
        Ok(())
    }

    pub fn coefficients(&self, values: &[f64]) -> Result<DVector<f64>> {
        self.check_len(values)?;
        Ok(&self.solve * DVector::from_column_slice(values))
    }

    pub fn fit(&self, values: &[f64]) -> Result<GlobalModel> {
        let beta = self.coefficients(values)?;
        Ok(GlobalModel {
            basis: self.basis,
            coefficients: beta.iter().copied().collect(),
            ridge_lambda: self.ridge_lambda,
        })
    }

    /// Fitted values `Phi beta` on the grid.
    pub fn fitted_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        let beta = self.coefficients(values)?;
        Ok((&self.design * beta).iter().copied().collect())
    }

    /// `x - Phi beta`.
    pub fn residuals(&self, values: &[f64]) -> Result<Vec<f64>> {
        let fitted = self.fitted_values(values)?;
        Ok(values.iter().zip(fitted).map(|(x, f)| x - f).collect())
    }
}

/// Minimises `sum_i (x_i - phi(t_i) . beta)^2 + lambda |beta|^2`.
pub fn fit_global_model(path: &Path, basis: FeatureBasis, ridge_lambda: f64) -> Result<GlobalModel> {
    ModelFitter::new(basis, path.grid, ridge_lambda)?.fit(&path.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn path(values: Vec<f64>) -> Path {
        Path::new(values, 0).unwrap()
    }

    #[test]
    fn constant_path_is_exact() {
        let m = fit_global_model(&path(vec![3.0; 40]), FeatureBasis::new(2, 0), 0.0).unwrap();
        assert!((m.coefficients[0] - 3.0).abs() < 1e-9);
        assert!(m.coefficients[1].abs() < 1e-9 && m.coefficients[2].abs() < 1e-9);
    }

    #[test]
    fn sine_is_interpolated() {
        let g = EquidistantGrid::new(64).unwrap();
        let x: Vec<f64> = g.times().map(|t| (TAU * t).sin()).collect();
        let basis = FeatureBasis::new(0, 3);
        let m = fit_global_model(&path(x.clone()), basis, 0.0).unwrap();
        let pred = m.predict(&g);
        let dev = pred.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9, "dev {dev}");
        // sin(2 pi t) is the first trig feature, right after the constant
        assert!((m.coefficients[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_counting() {
        let basis = FeatureBasis::new(2, 15);
        let fitter = ModelFitter::new(basis, EquidistantGrid::new(50).unwrap(), 0.0).unwrap();
        let res = fitter.residuals(&[1.5; 50]).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-9));
        assert!(matches!(
            ModelFitter::new(basis, EquidistantGrid::new(20).unwrap(), 0.0),
            Err(DriftError::RankDeficient { features: 33, .. })
        ));
        // ridge makes the under-determined system solvable
        assert!(ModelFitter::new(basis, EquidistantGrid::new(20).unwrap(), 1e-3).is_ok());
        assert!(ModelFitter::new(basis, EquidistantGrid::new(50).unwrap(), -1.0).is_err());
    }

    #[test]
    fn ridge_matches_normal_equations() {
        let g = EquidistantGrid::new(80).unwrap();
        let basis = FeatureBasis::new(3, 2);
        let x: Vec<f64> = g.times().map(|t| (5.0 * t).exp().sin() + t * t).collect();
        let lambda = 0.3;
        let m = ModelFitter::new(basis, g, lambda).unwrap().fit(&x).unwrap();
        let phi = basis.design_matrix(&g);
        let p = basis.feature_count();
        let lhs = phi.transpose() * &phi + DMatrix::identity(p, p) * lambda;
        let rhs = phi.transpose() * DVector::from_column_slice(&x);
        let beta = lhs.lu().solve(&rhs).unwrap();
        for (a, b) in m.coefficients.iter().zip(beta.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn refit_is_idempotent() {
        let g = EquidistantGrid::new(300).unwrap();
        let basis = FeatureBasis::new(5, 4);
        let x: Vec<f64> = g.times().map(|t| (3.0 * t).cos() + 0.2 * (40.0 * t).sin()).collect();
        let fitter = ModelFitter::new(basis, g, 0.0).unwrap();
        let first = fitter.fit(&x).unwrap();
        let second = fitter.fit(&first.predict(&g)).unwrap();
        for (a, b) in first.coefficients.iter().zip(&second.coefficients) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn default_basis_is_well_posed_with_ridge() {
        let g = EquidistantGrid::new(500).unwrap();
        let fitter = ModelFitter::new(FeatureBasis::default(), g, 1e-6).unwrap();
        let x: Vec<f64> = g.times().map(|t| (TAU * t).cos() + t).collect();
        let res = fitter.residuals(&x).unwrap();
        let worst = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        // ridge shrinkage along near-collinear poly/trig directions
        assert!(worst < 1e-4, "{worst}");
    }
}
