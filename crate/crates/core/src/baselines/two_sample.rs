//! Kernel two-sample tests with permutation p-values.
//!
//! Both tests factor the pooled Gram matrix once, `K ~ L L^T`, after sorting
//! the pooled values. A permutation then only needs the mean of the factor
//! rows over a random subset, so each permutation costs `O(n rank)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::kernel::{gaussian, pivoted_cholesky, KernelSpec, LowRankFactor, FACTOR_TOLERANCE};
use super::TestResult;
use crate::error::{invalid, DriftError, Result};
use crate::score::Method;
use crate::seed::{derive, stream, stream_rng};

pub const DEFAULT_PERMUTATIONS: usize = 500;
pub const DEFAULT_KFDR_GAMMA: f64 = 1e-3;

/// Pooled sample in canonical (sorted) order with group labels.
struct Pooled {
    factor: LowRankFactor,
    /// Positions of the smaller group (group `a` on equal sizes).
    observed: Vec<usize>,
    complement: Vec<usize>,
    n_small: usize,
    total: Vec<f64>,
}

impl Pooled {
    fn new(a: &[f64], b: &[f64], h: f64) -> Result<Self> {
        let mut pooled: Vec<(f64, bool)> = a
            .iter()
            .map(|&x| (x, true))
            .chain(b.iter().map(|&x| (x, false)))
            .collect();
        pooled.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)));
        let values: Vec<f64> = pooled.iter().map(|p| p.0).collect();
        let factor = pivoted_cholesky(&values, h, FACTOR_TOLERANCE)?;
        let small_is_a = a.len() <= b.len();
        let (observed, complement): (Vec<usize>, Vec<usize>) =
            (0..pooled.len()).partition(|&i| pooled[i].1 == small_is_a);
        let mut total = vec![0.0; factor.rank];
        for i in 0..factor.n {
            for (t, v) in total.iter_mut().zip(factor.row(i)) {
                *t += v;
            }
        }
        Ok(Self {
            n_small: observed.len(),
            observed,
            complement,
            factor,
            total,
        })
    }

    /// `mean(small) - mean(large)` in feature space.
    fn mean_difference(&self, small: &[usize], large: &[usize], out: &mut [f64], scratch: &mut [f64]) {
        let sum_rows = |idx: &[usize], acc: &mut [f64]| {
            acc.iter_mut().for_each(|v| *v = 0.0);
            for &i in idx {
                for (a, v) in acc.iter_mut().zip(self.factor.row(i)) {
                    *a += v;
                }
            }
        };
        sum_rows(small, out);
        sum_rows(large, scratch);
        let ns = small.len() as f64;
        let nl = large.len() as f64;
        for (o, l) in out.iter_mut().zip(scratch.iter()) {
            *o = *o / ns - l / nl;
        }
    }

    /// `(1 + #{perm >= observed}) / (1 + R)` for a statistic of the mean
    /// difference.
    fn permutation_p_value<F>(&self, n_permutations: usize, seed: u64, stat: F) -> (f64, f64)
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = self.factor.n;
        let mut delta = vec![0.0; self.factor.rank];
        let mut scratch = vec![0.0; self.factor.rank];
        self.mean_difference(&self.observed, &self.complement, &mut delta, &mut scratch);
        let observed = stat(&delta);
        let threshold = observed - 1e-10 * (1.0 + observed.abs());
        let mut idx: Vec<usize> = Vec::with_capacity(n);
        let mut exceed = 0usize;
        for r in 0..n_permutations {
            let mut rng = stream_rng(derive(seed, &[r as u64]), stream::PERMUTATION);
            idx.clear();
            idx.extend(0..n);
            for j in 0..self.n_small {
                let k = rng.random_range(j..n);
                idx.swap(j, k);
            }
            let (small, large) = idx.split_at(self.n_small);
            self.mean_difference(small, large, &mut delta, &mut scratch);
            if stat(&delta) >= threshold {
                exceed += 1;
            }
        }
        (observed, (1 + exceed) as f64 / (1 + n_permutations) as f64)
    }
}

fn check_inputs(a: &[f64], b: &[f64], n_permutations: usize) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(DriftError::EmptyInput("two-sample test needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(invalid("two-sample test inputs must be finite"));
    }
    if n_permutations < 100 {
        return Err(invalid(format!(
            "at least 100 permutations required, got {n_permutations}"
        )));
    }
    Ok(())
}

fn pooled_bandwidth(kernel: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    kernel.resolve(&pooled)
}

fn mean_kernel(x: &[f64], y: &[f64], h: f64) -> f64 {
    let mut s = 0.0;
    for &u in x {
        for &v in y {
            s += gaussian(u, v, h);
        }
    }
    s / (x.len() * y.len()) as f64
}

/// Biased squared MMD with a Gaussian kernel of bandwidth `h`.
pub fn mmd_squared(a: &[f64], b: &[f64], h: f64) -> f64 {
    // canonical argument order keeps the cross term symmetric bit for bit
    let cross = match a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }) {
        std::cmp::Ordering::Greater => mean_kernel(b, a, h),
        _ => mean_kernel(a, b, h),
    };
    (mean_kernel(a, a, h) + mean_kernel(b, b, h) - 2.0 * cross).max(0.0)
}

/// MMD permutation test. The statistic is the exact biased squared MMD.
pub fn mmd_test(
    a: &[f64],
    b: &[f64],
    kernel: &KernelSpec,
    n_permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    check_inputs(a, b, n_permutations)?;
    let h = pooled_bandwidth(kernel, a, b);
    let statistic = mmd_squared(a, b, h);
    let pooled = Pooled::new(a, b, h)?;
    let (_, p_value) = pooled.permutation_p_value(n_permutations, seed, |d| {
        d.iter().map(|v| v * v).sum()
    });
    Ok(TestResult {
        statistic,
        p_value,
        method: Method::Mmd,
        n_permutations: Some(n_permutations),
        lags: None,
    })
}

/// Regularised kernel Fisher discriminant ratio test.
///
/// With group sizes `n1, n2`, mean difference `d` and pooled within-group
/// covariance `S_W` in feature space, the statistic is
/// `(n1 n2 / n) d^T (S_W + gamma I)^{-1} d`. Since the total covariance
/// `S_T = S_W + (n1 n2 / n^2) d d^T` does not change under permutation, it is
/// inverted once and the rank-one update is applied per permutation.
pub fn kfdr_test(
    a: &[f64],
    b: &[f64],
    kernel: &KernelSpec,
    gamma: f64,
    n_permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    check_inputs(a, b, n_permutations)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("KFDR regularisation gamma must be > 0, got {gamma}")));
    }
    let h = pooled_bandwidth(kernel, a, b);
    let pooled = Pooled::new(a, b, h)?;
    let f = &pooled.factor;
    let (n, r) = (f.n, f.rank);
    let nf = n as f64;
    let l = DMatrix::from_row_slice(n, r, &f.rows);
    let mean = DVector::from_iterator(r, pooled.total.iter().map(|t| t / nf));
    let cov = (l.transpose() * &l) / nf - &mean * mean.transpose() + DMatrix::identity(r, r) * gamma;
    let chol = cov
        .cholesky()
        .ok_or(DriftError::SingularRegression("regularised kernel covariance"))?;
    let inv = chol.inverse();
    let n1 = pooled.n_small as f64;
    let n2 = nf - n1;
    let c = n1 * n2 / (nf * nf);
    let stat = |d: &[f64]| {
        let mut q = 0.0;
        for i in 0..r {
            let mut row = 0.0;
            for j in 0..r {
                row += inv[(i, j)] * d[j];
            }
            q += d[i] * row;
        }
        let denom = (1.0 - c * q).max(f64::EPSILON);
        (n1 * n2 / nf) * q / denom
    };
    let (statistic, p_value) = pooled.permutation_p_value(n_permutations, seed, stat);
    Ok(TestResult {
        statistic: statistic.max(0.0),
        p_value,
        method: Method::Kfrd,
        n_permutations: Some(n_permutations),
        lags: None,
    })
}
