//! Synthetic paths: the sign-flip and random-phase processes, the benchmark
//! signals (jump, lemniscate, square wave) and drift injection.
//!
//! Time is dimensionless on `[0, 1]`. A grid of size `n` samples the points
//! `t_i = i / n` for `i = 1..=n`; there is no sample at `t = 0`.

use std::f64::consts::TAU;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DriftError, Result};
use crate::seed::{stream, stream_rng};

/// Equidistant sampling grid `t_i = i / n`, `i = 1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EquidistantGrid {
    n: usize,
}

impl EquidistantGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("grid size must be positive"));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of the zero-based sample `idx`, i.e. `(idx + 1) / n`.
    #[inline]
    pub fn time(&self, idx: usize) -> f64 {
        (idx + 1) as f64 / self.n as f64
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.time(i))
    }

    /// Zero-based index of the grid point closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let i = (t * self.n as f64).round();
        (i.max(1.0) as usize).min(self.n) - 1
    }
}

/// One realisation of a process restricted to a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub grid: EquidistantGrid,
    pub values: Vec<f64>,
    /// Seed the path was generated from (provenance only).
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct PathJson {
    grid_n: usize,
    seed: u64,
    values: Vec<f64>,
}

impl Path {
    pub fn new(values: Vec<f64>, seed: u64) -> Result<Self> {
        let grid = EquidistantGrid::new(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("path value at index {i} is not finite")));
        }
        Ok(Self { grid, values, seed })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.grid.times()
    }

    /// Writes `t,value` rows with shortest round-trip decimal formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value"])?;
        for (t, v) in self.times().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `t,value` file. The time column is checked against the grid
    /// implied by the row count.
    pub fn read_csv<R: Read>(input: R, seed: u64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(DriftError::Parse {
                line: 1,
                message: "expected header `t,value`".into(),
            });
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| DriftError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| DriftError::Parse {
                    line,
                    message: format!("`{s}`: {e}"),
                })
            };
            let t = parse(&rec[0])?;
            let v = parse(&rec[1])?;
            if !v.is_finite() {
                return Err(DriftError::Parse {
                    line,
                    message: "value is not finite".into(),
                });
            }
            times.push((t, line));
            values.push(v);
        }
        let n = values.len();
        if n == 0 {
            return Err(DriftError::EmptyInput("path file has no rows"));
        }
        let grid = EquidistantGrid::new(n)?;
        for (i, &(t, line)) in times.iter().enumerate() {
            if (t - grid.time(i)).abs() > 1e-9 {
                return Err(DriftError::Parse {
                    line,
                    message: format!("time {t} does not match grid point {}", grid.time(i)),
                });
            }
        }
        Ok(Self { grid, values, seed })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PathJson {
            grid_n: self.grid.len(),
            seed: self.seed,
            values: self.values.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: PathJson = serde_json::from_str(s)?;
        if raw.values.len() != raw.grid_n {
            return Err(invalid(format!(
                "grid_n = {} but {} values",
                raw.grid_n,
                raw.values.len()
            )));
        }
        Self::new(raw.values, raw.seed)
    }
}

/// Law of the sign-flip process: `B = -1` with probability `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpConfig {
    pub p: f64,
}

impl JumpConfig {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("jump probability p = {p} outside [0, 1]")));
        }
        Ok(Self { p })
    }
}

/// Random sign and jump time of one sign-flip path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpDraw {
    pub sign: f64,
    pub jump_time: f64,
}

impl JumpDraw {
    /// Zero-based index of the first grid point at or after the jump.
    /// Equals `ceil(C * n) - 1`; it is `0` when the jump precedes the first
    /// sample, in which case the sampled path shows no sign change.
    pub fn first_flipped_index(&self, grid: &EquidistantGrid) -> usize {
        let c = (self.jump_time * grid.len() as f64).ceil() as usize;
        c.max(1) - 1
    }
}

/// Draws `B` then `C` from stream [`stream::JUMP`] of `seed`.
pub fn draw_jump(config: &JumpConfig, seed: u64) -> JumpDraw {
    let mut rng = stream_rng(seed, stream::JUMP);
    let b: f64 = rng.random();
    let c: f64 = rng.random();
    JumpDraw {
        sign: if b < config.p { -1.0 } else { 1.0 },
        jump_time: c,
    }
}

/// Sign-flip process: each path holds `B` before the uniform time `C` and
/// `-B` from `C` on, so `P[X_t = -1] = t(1-p) + (1-t)p`.
pub fn generate_jump(config: &JumpConfig, grid: EquidistantGrid, seed: u64) -> Path {
    let draw = draw_jump(config, seed);
    let spec = SignalSpec::Jump {
        level: draw.sign,
        jump_time: Some(draw.jump_time),
    };
    let values = grid.times().map(|t| spec.eval(t)).collect();
    Path { grid, values, seed }
}

/// Truncation of the phase law `U ~ Uniform[0, 2pi - epsilon]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinePhaseConfig {
    pub epsilon: f64,
}

impl SinePhaseConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&epsilon) {
            return Err(invalid(format!("epsilon = {epsilon} outside [0, pi]")));
        }
        Ok(Self { epsilon })
    }
}

pub fn draw_phase(config: &SinePhaseConfig, seed: u64) -> f64 {
    let u: f64 = stream_rng(seed, stream::PHASE).random();
    u * (TAU - config.epsilon)
}

/// Random-phase sine `sin(2 pi t + U)`; one full period spans the grid.
pub fn generate_sine_phase(config: &SinePhaseConfig, grid: EquidistantGrid, seed: u64) -> Path {
    let spec = SignalSpec::SinePhase {
        phase: draw_phase(config, seed),
    };
    let values = grid.times().map(|t| spec.eval(t)).collect();
    Path { grid, values, seed }
}

/// Signal families by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Jump,
    Lemniscate,
    SquareWave,
    SinePhase,
}

impl SignalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalKind::Jump => "jump",
            SignalKind::Lemniscate => "lemniscate",
            SignalKind::SquareWave => "square_wave",
            SignalKind::SinePhase => "sine_phase",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jump" => Ok(SignalKind::Jump),
            "lemniscate" => Ok(SignalKind::Lemniscate),
            "square_wave" => Ok(SignalKind::SquareWave),
            "sine_phase" => Ok(SignalKind::SinePhase),
            _ => Err(DriftError::UnknownKind {
                what: "signal kind",
                value: s.into(),
            }),
        }
    }
}

pub const DEFAULT_SQUARE_PERIOD: f64 = 0.25;

/// Deterministic signal `f : [0, 1] -> R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `level` before `jump_time`, `-level` from it on; constant when
    /// `jump_time` is `None`.
    Jump { level: f64, jump_time: Option<f64> },
    /// `c1 cos(s t) + c2 sin(2 s t) / 2` with time scale `s`.
    Lemniscate { c1: f64, c2: f64, time_scale: f64 },
    /// `high` on the first `duty` fraction of each period, `low` otherwise.
    SquareWave {
        period: f64,
        duty: f64,
        high: f64,
        low: f64,
    },
    SinePhase { phase: f64 },
}

impl SignalSpec {
    pub fn square_wave() -> Self {
        SignalSpec::SquareWave {
            period: DEFAULT_SQUARE_PERIOD,
            duty: 0.5,
            high: 1.0,
            low: -1.0,
        }
    }

    /// Lemniscate with one full figure on `[0, 1]`.
    pub fn lemniscate(c1: f64, c2: f64) -> Self {
        SignalSpec::Lemniscate {
            c1,
            c2,
            time_scale: TAU,
        }
    }

    /// Lemniscate with amplitudes drawn i.i.d. standard normal from `seed`.
    pub fn random_lemniscate(seed: u64) -> Self {
        let mut rng = stream_rng(seed, stream::AMPLITUDE);
        let c1: f64 = rng.sample(StandardNormal);
        let c2: f64 = rng.sample(StandardNormal);
        Self::lemniscate(c1, c2)
    }

    pub fn kind(&self) -> SignalKind {
        match self {
            SignalSpec::Jump { .. } => SignalKind::Jump,
            SignalSpec::Lemniscate { .. } => SignalKind::Lemniscate,
            SignalSpec::SquareWave { .. } => SignalKind::SquareWave,
            SignalSpec::SinePhase { .. } => SignalKind::SinePhase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match *self {
            SignalSpec::Jump { level, jump_time } => {
                finite(&[level]) && jump_time.is_none_or(f64::is_finite)
            }
            SignalSpec::Lemniscate { c1, c2, time_scale } => finite(&[c1, c2, time_scale]),
            SignalSpec::SquareWave {
                period,
                duty,
                high,
                low,
            } => {
                if !(period > 0.0 && period.is_finite()) {
                    return Err(invalid(format!("square-wave period must be > 0, got {period}")));
                }
                if !(0.0..=1.0).contains(&duty) {
                    return Err(invalid(format!("square-wave duty {duty} outside [0, 1]")));
                }
                finite(&[high, low])
            }
            SignalSpec::SinePhase { phase } => finite(&[phase]),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("non-finite signal parameters in {self:?}")))
        }
    }

    /// Natural period in grid time, if the signal is periodic.
    pub fn period(&self) -> Option<f64> {
        match *self {
            SignalSpec::Jump { .. } => None,
            SignalSpec::Lemniscate { time_scale, .. } => Some(TAU / time_scale.abs()),
            SignalSpec::SquareWave { period, .. } => Some(period),
            SignalSpec::SinePhase { .. } => Some(1.0),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            SignalSpec::Jump { level, jump_time } => match jump_time {
                Some(c) if t >= c => -level,
                _ => level,
            },
            SignalSpec::Lemniscate { c1, c2, time_scale } => {
                let s = time_scale * t;
                c1 * s.cos() + c2 * (2.0 * s).sin() / 2.0
            }
            SignalSpec::SquareWave {
                period,
                duty,
                high,
                low,
            } => {
                if (t / period).rem_euclid(1.0) < duty {
                    high
                } else {
                    low
                }
            }
            SignalSpec::SinePhase { phase } => (TAU * t + phase).sin(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    None,
    MeanJump,
    TimeShift,
    SlowDown,
}

impl InjectionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InjectionKind::None => "none",
            InjectionKind::MeanJump => "mean_jump",
            InjectionKind::TimeShift => "time_shift",
            InjectionKind::SlowDown => "slow_down",
        }
    }
}

impl fmt::Display for InjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InjectionKind {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(InjectionKind::None),
            "mean_jump" => Ok(InjectionKind::MeanJump),
            "time_shift" => Ok(InjectionKind::TimeShift),
            "slow_down" => Ok(InjectionKind::SlowDown),
            _ => Err(DriftError::UnknownKind {
                what: "injection kind",
                value: s.into(),
            }),
        }
    }
}

/// Drift applied from `onset` on.
///
/// `intensity` is the added level for `mean_jump`, the shift `Δ` (grid time)
/// for `time_shift`, and `s` with slow-down factor `c = 1 - s` for
/// `slow_down`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftInjection {
    pub kind: InjectionKind,
    pub intensity: f64,
    pub onset: f64,
}

impl Default for DriftInjection {
    fn default() -> Self {
        Self::none()
    }
}

impl DriftInjection {
    pub fn none() -> Self {
        Self {
            kind: InjectionKind::None,
            intensity: 0.0,
            onset: 0.5,
        }
    }

    pub fn new(kind: InjectionKind, intensity: f64) -> Result<Self> {
        let inj = Self {
            kind,
            intensity,
            onset: 0.5,
        };
        inj.validate()?;
        Ok(inj)
    }

    pub fn with_onset(mut self, onset: f64) -> Result<Self> {
        self.onset = onset;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(invalid(format!(
                "injection intensity must be finite and >= 0, got {}",
                self.intensity
            )));
        }
        if !(self.onset > 0.0 && self.onset < 1.0) {
            return Err(invalid(format!("onset {} outside (0, 1)", self.onset)));
        }
        match self.kind {
            InjectionKind::None if self.intensity != 0.0 => {
                Err(invalid("injection kind `none` requires intensity 0"))
            }
            InjectionKind::SlowDown if self.intensity > 1.0 => Err(invalid(format!(
                "slow-down intensity {} outside [0, 1]",
                self.intensity
            ))),
            _ => Ok(()),
        }
    }

    /// Slow-down factor `c = 1 - s`.
    pub fn slow_down_factor(&self) -> f64 {
        1.0 - self.intensity
    }

    fn is_identity(&self) -> bool {
        self.kind == InjectionKind::None || self.intensity == 0.0
    }

    #[inline]
    fn apply(&self, f: &SignalSpec, t: f64) -> f64 {
        if t < self.onset {
            return f.eval(t);
        }
        match self.kind {
            InjectionKind::None => f.eval(t),
            InjectionKind::MeanJump => f.eval(t) + self.intensity,
            InjectionKind::TimeShift => f.eval(t + self.intensity),
            InjectionKind::SlowDown => f.eval(self.slow_down_factor() * t),
        }
    }
}

/// Noiseless signal on the grid with drift injected.
pub fn generate_signal(
    spec: &SignalSpec,
    injection: &DriftInjection,
    grid: EquidistantGrid,
) -> Result<Vec<f64>> {
    spec.validate()?;
    injection.validate()?;
    let values = if injection.is_identity() {
        grid.times().map(|t| spec.eval(t)).collect()
    } else {
        grid.times().map(|t| injection.apply(spec, t)).collect()
    };
    Ok(values)
}

/// Gaussian observation noise and additive linear trend.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrendSpec {
    pub sigma: f64,
    pub trend_slope: f64,
}

impl NoiseTrendSpec {
    pub fn new(sigma: f64, trend_slope: f64) -> Result<Self> {
        let s = Self { sigma, trend_slope };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(invalid(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if !self.trend_slope.is_finite() {
            return Err(invalid("trend slope must be finite"));
        }
        Ok(())
    }
}

/// `signal_i + slope * t_i + sigma * z_i` with `z_i` i.i.d. standard normal
/// drawn from stream [`stream::NOISE`] of `seed`.
pub fn add_noise_and_trend(signal: &[f64], spec: &NoiseTrendSpec, seed: u64) -> Result<Path> {
    spec.validate()?;
    let grid = EquidistantGrid::new(signal.len())?;
    let mut values = signal.to_vec();
    if spec.trend_slope != 0.0 {
        for (v, t) in values.iter_mut().zip(grid.times()) {
            *v += spec.trend_slope * t;
        }
    }
    if spec.sigma > 0.0 {
        let mut rng = stream_rng(seed, stream::NOISE);
        for v in values.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += spec.sigma * z;
        }
    }
    Path::new(values, seed)
}
