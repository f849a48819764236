//! Kernel change-point detection by binary segmentation.
//!
//! A segment is scanned for the split maximising the size-weighted squared
//! MMD between its left and right parts. The split is accepted when the
//! maximum beats a permutation null over shuffles of the segment, and both
//! sides are then scanned again.

use rand::seq::SliceRandom;
use serde::Serialize;

use super::kernel::{pivoted_cholesky, KernelSpec, LowRankFactor, FACTOR_TOLERANCE};
use crate::error::{invalid, DriftError, Result};
use crate::seed::{derive, stream, stream_rng};
use crate::streams::Path;

pub const DEFAULT_MIN_SEGMENT: usize = 10;
pub const DEFAULT_LEVEL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChangePointReport {
    /// One-based index of the first sample of each new segment, ascending.
    pub locations: Vec<usize>,
    /// Scan statistic at each accepted location.
    pub scores: Vec<f64>,
    pub count: usize,
    /// Largest scan statistic over the whole path.
    pub max_statistic: f64,
}

impl ChangePointReport {
    /// Change-point count with the whole-path maximum in `[0, 1)` as a tie
    /// breaker.
    pub fn ranking_score(&self) -> f64 {
        self.count as f64 + self.max_statistic / (1.0 + self.max_statistic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KcpdConfig {
    pub min_segment: usize,
    pub kernel: KernelSpec,
    pub n_permutations: usize,
    pub level: f64,
}

impl Default for KcpdConfig {
    fn default() -> Self {
        Self {
            min_segment: DEFAULT_MIN_SEGMENT,
            kernel: KernelSpec::median_heuristic(),
            n_permutations: 500,
            level: DEFAULT_LEVEL,
        }
    }
}

/// `(s (len - s) / len) |mean(left) - mean(right)|^2` maximised over the
/// left size `s`, given prefix sums of the segment rows. Ties keep the
/// smallest `s`.
fn best_split(prefix: &[f64], r: usize, len: usize, min_segment: usize) -> (usize, f64) {
    let total = &prefix[len * r..(len + 1) * r];
    let lf = len as f64;
    let mut best = (min_segment, f64::NEG_INFINITY);
    for s in min_segment..=(len - min_segment) {
        let left = &prefix[s * r..(s + 1) * r];
        let sf = s as f64;
        let rf = lf - sf;
        let mut d2 = 0.0;
        for (a, t) in left.iter().zip(total) {
            let d = a / sf - (t - a) / rf;
            d2 += d * d;
        }
        let stat = sf * rf / lf * d2;
        if stat > best.1 {
            best = (s, stat);
        }
    }
    best
}

fn fill_prefix(factor: &LowRankFactor, order: impl Iterator<Item = usize>, prefix: &mut Vec<f64>) {
    let r = factor.rank;
    prefix.clear();
    prefix.resize(r, 0.0);
    let mut row_start = 0;
    for i in order {
        for (c, v) in factor.row(i).iter().enumerate() {
            let prev = prefix[row_start + c];
            prefix.push(prev + v);
        }
        row_start += r;
    }
}

pub fn kcpd_scan(
    path: &Path,
    min_segment: usize,
    kernel: &KernelSpec,
    n_permutations: usize,
    level: f64,
    seed: u64,
) -> Result<ChangePointReport> {
    kcpd_scan_with(
        &path.values,
        &KcpdConfig {
            min_segment,
            kernel: *kernel,
            n_permutations,
            level,
        },
        seed,
    )
}

pub fn kcpd_scan_with(x: &[f64], config: &KcpdConfig, seed: u64) -> Result<ChangePointReport> {
    let n = x.len();
    let ms = config.min_segment;
    if ms == 0 {
        return Err(invalid("min_segment must be positive"));
    }
    if n < 2 * ms {
        return Err(DriftError::SeriesTooShort {
            needed: 2 * ms,
            got: n,
        });
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(invalid(format!("level {} outside (0, 1)", config.level)));
    }
    if config.n_permutations == 0 {
        return Err(invalid("n_permutations must be positive"));
    }
    let h = config.kernel.resolve(x);
    let factor = pivoted_cholesky(x, h, FACTOR_TOLERANCE)?;
    let r = factor.rank;
    let mut prefix = Vec::with_capacity((n + 1) * r);
    let mut found: Vec<(usize, f64)> = Vec::new();
    let mut max_statistic = 0.0f64;
    let mut stack = vec![(0usize, n)];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    while let Some((lo, hi)) = stack.pop() {
        let len = hi - lo;
        if len < 2 * ms {
            continue;
        }
        fill_prefix(&factor, lo..hi, &mut prefix);
        let (split, observed) = best_split(&prefix, r, len, ms);
        if lo == 0 && hi == n {
            max_statistic = observed.max(0.0);
        }
        if observed <= 1e-12 {
            continue;
        }
        let threshold = observed - 1e-10 * (1.0 + observed);
        let budget = (config.level * (config.n_permutations + 1) as f64).floor() as usize;
        let mut exceed = 0usize;
        let mut rng = stream_rng(
            derive(seed, &[lo as u64, hi as u64]),
            stream::PERMUTATION,
        );
        order.clear();
        order.extend(lo..hi);
        for _ in 0..config.n_permutations {
            order.shuffle(&mut rng);
            fill_prefix(&factor, order.iter().copied(), &mut prefix);
            if best_split(&prefix, r, len, ms).1 >= threshold {
                exceed += 1;
                // p = (1 + exceed) / (1 + R) can no longer reach the level
                if 1 + exceed > budget {
                    break;
                }
            }
        }
        let p = (1 + exceed) as f64 / (1 + config.n_permutations) as f64;
        if p <= config.level {
            let at = lo + split;
            found.push((at, observed));
            stack.push((at, hi));
            stack.push((lo, at));
        }
    }
    found.sort_by_key(|f| f.0);
    Ok(ChangePointReport {
        locations: found.iter().map(|f| f.0 + 1).collect(),
        scores: found.iter().map(|f| f.1).collect(),
        count: found.len(),
        max_statistic,
    })
}
