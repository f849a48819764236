use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Bandwidth of the Gaussian kernel `exp(-(x - y)^2 / (2 h^2))`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    /// Median of the pooled pairwise absolute differences.
    #[default]
    MedianHeuristic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: Bandwidth,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid(format!("kernel bandwidth must be > 0, got {bandwidth}")));
        }
        Ok(Self {
            bandwidth: Bandwidth::Fixed(bandwidth),
        })
    }

    pub fn median_heuristic() -> Self {
        Self {
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }

    /// Bandwidth for the pooled sample `data`.
    pub fn resolve(&self, data: &[f64]) -> f64 {
        match self.bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::MedianHeuristic => median_heuristic(data),
        }
    }
}

#[inline]
pub fn gaussian(x: f64, y: f64, h: f64) -> f64 {
    let d = (x - y) / h;
    (-0.5 * d * d).exp()
}

/// Median of `|x_i - x_j|` over `i < j`; an even count averages the middle
/// pair. Falls back to the median of the nonzero differences when that is 0,
/// and to 1 when every difference is 0.
pub fn median_heuristic(data: &[f64]) -> f64 {
    let n = data.len();
    if n < 2 {
        return 1.0;
    }
    let mut diffs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            diffs.push((data[i] - data[j]).abs());
        }
    }
    let med = median_in_place(&mut diffs);
    if med > 0.0 {
        return med;
    }
    diffs.retain(|d| *d > 0.0);
    if diffs.is_empty() {
        1.0
    } else {
        median_in_place(&mut diffs)
    }
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let m = v.len();
    let (_, hi, _) = v.select_nth_unstable_by(m / 2, f64::total_cmp);
    let hi = *hi;
    if m % 2 == 1 {
        hi
    } else {
        let lo = v[..m / 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Low-rank factor `K ~ L L^T` of a Gaussian Gram matrix, rows stored
/// contiguously (`n x rank`).
#[derive(Clone, Debug)]
pub struct LowRankFactor {
    pub rows: Vec<f64>,
    pub n: usize,
    pub rank: usize,
}

impl LowRankFactor {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.rank..(i + 1) * self.rank]
    }
}

/// Relative trace tolerance at which the factorization stops.
pub const FACTOR_TOLERANCE: f64 = 1e-10;

/// Pivoted incomplete Cholesky of the Gram matrix of `data`.
///
/// Stops once the residual trace is below `tol * n`. Every entry, pivot rows
/// included, goes through the same arithmetic, so equal inputs get equal rows.
pub fn pivoted_cholesky(data: &[f64], h: f64, tol: f64) -> Result<LowRankFactor> {
    let n = data.len();
    if n == 0 {
        return Err(invalid("cannot factor an empty sample"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("kernel bandwidth must be > 0, got {h}")));
    }
    let mut diag = vec![1.0f64; n];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let stop = tol * n as f64;
    while cols.len() < n {
        let residual: f64 = diag.iter().map(|d| d.max(0.0)).sum();
        if residual <= stop {
            break;
        }
        let (pivot, &dp) = diag
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if dp <= 0.0 {
            break;
        }
        let scale = dp.sqrt();
        let xp = data[pivot];
        let mut col = vec![0.0; n];
        for i in 0..n {
            let mut v = gaussian(data[i], xp, h);
            for c in &cols {
                v -= c[i] * c[pivot];
            }
            col[i] = v / scale;
        }
        for (d, c) in diag.iter_mut().zip(&col) {
            *d -= c * c;
        }
        cols.push(col);
    }
    let rank = cols.len();
    let mut rows = vec![0.0; n * rank];
    for (c, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            rows[i * rank + c] = *v;
        }
    }
    Ok(LowRankFactor { rows, n, rank })
}
