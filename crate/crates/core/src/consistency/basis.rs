use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::streams::EquidistantGrid;

/// Polynomial plus trigonometric feature basis on `[0, 1]`.
///
/// The polynomial part spans `1, t, ..., t^d` but is evaluated as Chebyshev
/// polynomials `T_j(2t - 1)`, so coefficients refer to that basis. The
/// trigonometric part is `sin(2 pi k t), cos(2 pi k t)` for `k = 1..=K`,
/// interleaved in that order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureBasis {
    pub poly_degree: usize,
    pub trig_degree: usize,
}

impl Default for FeatureBasis {
    fn default() -> Self {
        Self {
            poly_degree: 15,
            trig_degree: 15,
        }
    }
}

impl FeatureBasis {
    pub fn new(poly_degree: usize, trig_degree: usize) -> Self {
        Self {
            poly_degree,
            trig_degree,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.poly_degree + 1 + 2 * self.trig_degree
    }

    /// Writes the features at `t` into `row`.
    pub fn eval_into(&self, t: f64, row: &mut [f64]) {
        debug_assert_eq!(row.len(), self.feature_count());
        let x = 2.0 * t - 1.0;
        row[0] = 1.0;
        if self.poly_degree >= 1 {
            row[1] = x;
        }
        for j in 2..=self.poly_degree {
            row[j] = 2.0 * x * row[j - 1] - row[j - 2];
        }
        let off = self.poly_degree + 1;
        for k in 1..=self.trig_degree {
            let (s, c) = (TAU * k as f64 * t).sin_cos();
            row[off + 2 * (k - 1)] = s;
            row[off + 2 * (k - 1) + 1] = c;
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.feature_count()];
        self.eval_into(t, &mut row);
        row
    }

    /// `n x p` design matrix over the grid.
    pub fn design_matrix(&self, grid: &EquidistantGrid) -> DMatrix<f64> {
        let p = self.feature_count();
        let mut m = DMatrix::zeros(grid.len(), p);
        let mut row = vec![0.0; p];
        for (i, t) in grid.times().enumerate() {
            self.eval_into(t, &mut row);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }
}
