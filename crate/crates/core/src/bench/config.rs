use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::consistency::{FeatureBasis, DEFAULT_RIDGE_LAMBDA};
use crate::error::{invalid, DriftError, Result};
use crate::score::{short_hash, Method};
use crate::streams::{InjectionKind, SignalKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Off,
    On,
}

impl Trend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trend::Off => "off",
            Trend::On => "on",
        }
    }
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Trend {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Trend::Off),
            "on" => Ok(Trend::On),
            _ => Err(DriftError::UnknownKind {
                what: "trend setting",
                value: s.into(),
            }),
        }
    }
}

/// Settings shared by the detectors in a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSettings {
    pub basis: FeatureBasis,
    pub ridge_lambda: f64,
    /// Local-MSE window; largest odd `k <= sqrt(n)` when absent.
    pub lmse_k: Option<usize>,
    /// Neighbour count of the residual k-NN check; the local-MSE window when
    /// absent.
    pub k_nn: Option<usize>,
    /// Permutations for the MMD and KFDR tests.
    pub n_permutations: usize,
    pub kfdr_gamma: f64,
    pub kcpd_permutations: usize,
    pub kcpd_min_segment: usize,
    pub kcpd_level: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            basis: FeatureBasis::default(),
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            lmse_k: None,
            k_nn: None,
            n_permutations: 500,
            kfdr_gamma: crate::baselines::DEFAULT_KFDR_GAMMA,
            kcpd_permutations: 500,
            kcpd_min_segment: crate::baselines::DEFAULT_MIN_SEGMENT,
            kcpd_level: crate::baselines::DEFAULT_LEVEL,
        }
    }
}

/// Benchmark sweep, serialised as JSON with these field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<SignalKind>,
    pub injections: Vec<InjectionKind>,
    /// Grid used for every injection without an entry in `intensity_grids`.
    pub intensity_grid: Option<Vec<f64>>,
    pub intensity_grids: BTreeMap<InjectionKind, Vec<f64>>,
    /// Also run dataset/injection pairs outside the standard protocol
    /// (jump with mean jump; lemniscate and square wave with time shift and
    /// slow down).
    pub all_pairs: bool,
    pub trend: Vec<Trend>,
    pub trend_slope: f64,
    pub n: usize,
    pub sigma: f64,
    pub onset: f64,
    pub runs: usize,
    pub batches: usize,
    pub detectors: Vec<Method>,
    pub master_seed: u64,
    pub settings: DetectorSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: vec![SignalKind::Jump, SignalKind::Lemniscate, SignalKind::SquareWave],
            injections: vec![
                InjectionKind::MeanJump,
                InjectionKind::TimeShift,
                InjectionKind::SlowDown,
            ],
            intensity_grid: None,
            intensity_grids: BTreeMap::new(),
            all_pairs: false,
            trend: vec![Trend::Off, Trend::On],
            trend_slope: 1.0,
            n: 500,
            sigma: 0.1,
            onset: 0.5,
            runs: 100,
            batches: 10,
            detectors: Method::ALL.to_vec(),
            master_seed: 0,
            settings: DetectorSettings::default(),
        }
    }
}

/// `count + 1` evenly spaced values `0, step, ..., count * step` with
/// `step = num / den`, each correctly rounded.
fn grid(count: u32, num: f64, den: f64) -> Vec<f64> {
    (0..=count).map(|i| f64::from(i) * num / den).collect()
}

/// Standard intensity grid of an injection.
///
/// Mean jump: added level. Time shift: fraction of the signal period.
/// Slow down: `s` with factor `c = 1 - s`.
pub fn default_intensity_grid(kind: InjectionKind) -> Vec<f64> {
    match kind {
        InjectionKind::None => vec![0.0],
        InjectionKind::MeanJump => grid(10, 5.0, 100.0),
        InjectionKind::TimeShift => grid(8, 5.0, 100.0),
        InjectionKind::SlowDown => grid(9, 1.0, 10.0),
    }
}

/// Whether the pair belongs to the standard protocol.
pub fn standard_pair(dataset: SignalKind, injection: InjectionKind) -> bool {
    match dataset {
        SignalKind::Jump => injection == InjectionKind::MeanJump,
        SignalKind::Lemniscate | SignalKind::SquareWave | SignalKind::SinePhase => {
            matches!(injection, InjectionKind::TimeShift | InjectionKind::SlowDown)
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serialises");
        short_hash(compact.as_bytes())
    }

    pub fn intensities(&self, kind: InjectionKind) -> Vec<f64> {
        self.intensity_grids
            .get(&kind)
            .cloned()
            .or_else(|| self.intensity_grid.clone())
            .unwrap_or_else(|| default_intensity_grid(kind))
    }

    /// Dataset/injection pairs in sweep order.
    pub fn pairs(&self) -> Vec<(SignalKind, InjectionKind)> {
        let mut out = Vec::new();
        for &d in &self.datasets {
            for &i in &self.injections {
                if self.all_pairs || standard_pair(d, i) {
                    out.push((d, i));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(invalid("config needs at least one dataset"));
        }
        if self.datasets.contains(&SignalKind::SinePhase) {
            return Err(invalid("sine_phase is not a benchmark dataset"));
        }
        if self.detectors.is_empty() {
            return Err(invalid("config needs at least one detector"));
        }
        if self.injections.is_empty() || self.injections.contains(&InjectionKind::None) {
            return Err(invalid("injections must be a nonempty subset of mean_jump, time_shift, slow_down"));
        }
        if self.trend.is_empty() {
            return Err(invalid("trend must list at least one of \"off\", \"on\""));
        }
        if self.runs < 10 {
            return Err(invalid(format!("runs must be >= 10, got {}", self.runs)));
        }
        if self.batches == 0 || self.batches > self.runs {
            return Err(invalid(format!("batches must be in [1, runs], got {}", self.batches)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) || !self.trend_slope.is_finite() {
            return Err(invalid("sigma must be >= 0 and trend_slope finite"));
        }
        if !(self.onset > 0.0 && self.onset < 1.0) {
            return Err(invalid(format!("onset {} outside (0, 1)", self.onset)));
        }
        let s = &self.settings;
        if self.n < 2 * s.kcpd_min_segment.max(1) || self.n < 30 {
            return Err(invalid(format!("n = {} is too small for the detectors", self.n)));
        }
        if s.n_permutations < 100 {
            return Err(invalid("settings.n_permutations must be >= 100"));
        }
        if s.kcpd_permutations == 0 || !(s.kcpd_level > 0.0 && s.kcpd_level < 1.0) {
            return Err(invalid("kcpd_permutations must be > 0 and kcpd_level in (0, 1)"));
        }
        if !(s.kfdr_gamma > 0.0) || !(s.ridge_lambda >= 0.0) {
            return Err(invalid("kfdr_gamma must be > 0 and ridge_lambda >= 0"));
        }
        if self.pairs().is_empty() {
            return Err(invalid("no dataset/injection pair to run; set all_pairs to true"));
        }
        for (_, kind) in self.pairs() {
            let g = self.intensities(kind);
            if g.is_empty() {
                return Err(invalid(format!("intensity grid for {kind} is empty")));
            }
            if g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!("intensity grid for {kind} must be strictly ascending")));
            }
            if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(invalid(format!("intensity grid for {kind} must be finite and >= 0")));
            }
            if kind == InjectionKind::SlowDown && g.iter().any(|v| *v > 1.0) {
                return Err(invalid("slow-down intensities must be in [0, 1]"));
            }
        }
        Ok(())
    }
}
