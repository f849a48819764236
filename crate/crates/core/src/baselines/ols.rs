use nalgebra::{DMatrix, DVector};

use crate::error::{DriftError, Result};

pub(crate) struct OlsFit {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub ssr: f64,
    pub nobs: usize,
}

impl OlsFit {
    /// Gaussian AIC with every column counted as a parameter.
    pub fn aic(&self) -> f64 {
        let n = self.nobs as f64;
        let llf = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (self.ssr / n).ln() + 1.0);
        -2.0 * llf + 2.0 * self.coef.len() as f64
    }

    pub fn t_value(&self, j: usize) -> f64 {
        self.coef[j] / self.se[j]
    }
}

/// Least squares through a thin QR decomposition.
pub(crate) fn ols(y: &[f64], x: &DMatrix<f64>, what: &'static str) -> Result<OlsFit> {
    let (n, k) = x.shape();
    debug_assert_eq!(y.len(), n);
    if n <= k {
        return Err(DriftError::SeriesTooShort {
            needed: k + 1,
            got: n,
        });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let q = qr.q();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= scale * n as f64 * f64::EPSILON) {
        return Err(DriftError::SingularRegression(what));
    }
    let yv = DVector::from_column_slice(y);
    let qty = q.transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(DriftError::SingularRegression(what))?;
    let resid = &yv - x * &beta;
    let ssr = resid.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(DriftError::SingularRegression(what))?;
    let sigma2 = ssr / (n - k) as f64;
    let se = (0..k)
        .map(|i| (sigma2 * r_inv.row(i).norm_squared()).sqrt())
        .collect();
    Ok(OlsFit {
        coef: beta.iter().copied().collect(),
        se,
        ssr,
        nobs: n,
    })
}
