//! Reduction from many independent paths to an i.i.d. sample of the drift
//! process, and windowed conditional means over such a sample.
//!
//! Each path contributes exactly one `(T, X_T)` pair with `T ~ Uniform[0, 1)`.
//! `X_T` is read at the grid point nearest to `T`.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, DriftError, Result};
use crate::seed::{derive, stream, stream_rng};
use crate::streams::Path;

/// Half-open time window `[lower, upper)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWindow {
    lower: f64,
    upper: f64,
}

impl TimeWindow {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower >= upper {
            return Err(invalid(format!(
                "time window [{lower}, {upper}) must satisfy 0 <= lower < upper <= 1"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lower && t < self.upper
    }
}

/// `(T_i, X_i)` pairs, one per source path, in input order.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftSample {
    pub pairs: Vec<(f64, f64)>,
    pub seed: u64,
}

impl DriftSample {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Values whose time falls inside `window`, in sample order.
    pub fn values_in(&self, window: &TimeWindow) -> Vec<f64> {
        self.pairs
            .iter()
            .filter(|(t, _)| window.contains(*t))
            .map(|&(_, x)| x)
            .collect()
    }

    /// Values with `T < split` and with `T >= split`.
    pub fn split_at(&self, split: f64) -> (Vec<f64>, Vec<f64>) {
        let mut early = Vec::new();
        let mut late = Vec::new();
        for &(t, x) in &self.pairs {
            if t < split {
                early.push(x);
            } else {
                late.push(x);
            }
        }
        (early, late)
    }

    /// Writes `t,x` rows sorted by time.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut sorted = self.pairs.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x"])?;
        for (t, x) in sorted {
            w.write_record([t.to_string(), x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws one observation per path.
///
/// The time for a path depends only on `seed` and that path's own seed, so
/// permuting the input permutes the output pairs identically. Path seeds must
/// therefore be distinct.
pub fn subsample_streams(paths: &[Path], seed: u64) -> Result<DriftSample> {
    let first = paths
        .first()
        .ok_or(DriftError::EmptyInput("no paths to subsample"))?;
    let grid = first.grid;
    let mut seen = HashSet::with_capacity(paths.len());
    let mut pairs = Vec::with_capacity(paths.len());
    for path in paths {
        if path.grid != grid {
            return Err(DriftError::GridMismatch {
                expected: grid.len(),
                got: path.grid.len(),
            });
        }
        if !seen.insert(path.seed) {
            return Err(invalid(format!(
                "path seed {} appears twice; paths must be independent",
                path.seed
            )));
        }
        let t: f64 = stream_rng(derive(seed, &[path.seed]), stream::SUBSAMPLE).random();
        pairs.push((t, path.values[grid.nearest_index(t)]));
    }
    Ok(DriftSample { pairs, seed })
}

/// Maps applied to values before averaging.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ValueMap {
    Identity,
    Square,
    /// `1[x == v]`
    IndicatorEq(f64),
    /// `1[x <= v]`
    IndicatorLe(f64),
}

impl ValueMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ValueMap::Identity => x,
            ValueMap::Square => x * x,
            ValueMap::IndicatorEq(v) => f64::from(u8::from(x == v)),
            ValueMap::IndicatorLe(v) => f64::from(u8::from(x <= v)),
        }
    }
}

impl fmt::Display for ValueMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueMap::Identity => f.write_str("identity"),
            ValueMap::Square => f.write_str("square"),
            ValueMap::IndicatorEq(v) => write!(f, "eq:{v}"),
            ValueMap::IndicatorLe(v) => write!(f, "le:{v}"),
        }
    }
}

impl FromStr for ValueMap {
    type Err = DriftError;

    /// Accepts `identity`, `square`, `eq:<v>` and `le:<v>`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || DriftError::UnknownKind {
            what: "value map",
            value: s.into(),
        };
        match s {
            "identity" => return Ok(ValueMap::Identity),
            "square" => return Ok(ValueMap::Square),
            _ => {}
        }
        let (head, arg) = s.split_once(':').ok_or_else(unknown)?;
        let v: f64 = arg.parse().map_err(|_| unknown())?;
        match head {
            "eq" => Ok(ValueMap::IndicatorEq(v)),
            "le" => Ok(ValueMap::IndicatorLe(v)),
            _ => Err(unknown()),
        }
    }
}

/// Empirical mean of `f(X_i)` over the pairs with `T_i` in `window`.
pub fn windowed_mean(sample: &DriftSample, window: &TimeWindow, f: ValueMap) -> Result<f64> {
    windowed_mean_with(sample, window, |x| f.apply(x))
}

pub fn windowed_mean_with<F: Fn(f64) -> f64>(
    sample: &DriftSample,
    window: &TimeWindow,
    f: F,
) -> Result<f64> {
    let (sum, count) = sample
        .pairs
        .iter()
        .filter(|(t, _)| window.contains(*t))
        .fold((0.0, 0usize), |(s, c), &(_, x)| (s + f(x), c + 1));
    if count == 0 {
        return Err(DriftError::EmptyWindow {
            lower: window.lower,
            upper: window.upper,
        });
    }
    Ok(sum / count as f64)
}
