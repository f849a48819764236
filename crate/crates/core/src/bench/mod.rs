//! Seeded ROC-AUC benchmark over datasets, drift injections, intensities,
//! trend settings and detectors.
//!
//! Every run draws one base seed from `(master_seed, dataset, trend, run)`.
//! The null path and all drifted paths of that run share the base seed, so
//! they differ only by the injected drift; at intensity 0 they coincide. Null
//! paths are therefore scored once per `(dataset, trend)` and reused.
//!
//! A cell's AUC is the mean of the per-batch AUCs over `batches` contiguous
//! blocks of runs; `auc_std` is their sample standard deviation.

mod auc;
mod config;
mod detectors;
mod report;

pub use auc::roc_auc;
pub use config::{
    default_intensity_grid, standard_pair, DetectorSettings, ExperimentConfig, Trend,
};
pub use detectors::DetectorSuite;
pub use report::{
    curves, read_results_csv, render_svg, summarize, write_curves_csv, write_failures_csv,
    write_results_csv, Curve, ResultRow, Summary,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::score::Method;
use crate::seed::{derive, label};
use crate::streams::{
    add_noise_and_trend, draw_jump, generate_signal, DriftInjection, EquidistantGrid,
    InjectionKind, JumpConfig, NoiseTrendSpec, Path, SignalKind, SignalSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellKey {
    pub dataset: SignalKind,
    pub injection: InjectionKind,
    pub intensity: f64,
    pub trend: Trend,
    pub detector: Method,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub key: CellKey,
    pub auc: f64,
    pub auc_std: f64,
    /// `auc_std / sqrt(batches)`
    pub auc_stderr: f64,
    pub runs: usize,
    /// Detector time on the drifted paths of the cell.
    pub wall_clock_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellFailure {
    pub key: CellKey,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

pub fn run_seed(master: u64, dataset: SignalKind, trend: Trend, run: usize) -> u64 {
    derive(
        master,
        &[label(dataset.as_str()), label(trend.as_str()), run as u64],
    )
}

/// Noiseless base signal of a run. Lemniscate amplitudes and the jump
/// level's sign are drawn from the run seed.
pub fn benchmark_signal(dataset: SignalKind, seed: u64) -> SignalSpec {
    match dataset {
        SignalKind::Jump => SignalSpec::Jump {
            level: draw_jump(&JumpConfig { p: 0.5 }, seed).sign,
            jump_time: None,
        },
        SignalKind::Lemniscate => SignalSpec::random_lemniscate(seed),
        SignalKind::SquareWave => SignalSpec::square_wave(),
        SignalKind::SinePhase => SignalSpec::SinePhase {
            phase: crate::streams::draw_phase(&crate::streams::SinePhaseConfig { epsilon: 0.0 }, seed),
        },
    }
}

/// Converts a grid intensity to an injection. Time shifts are expressed as
/// a fraction of the signal period (of the unit interval for aperiodic
/// signals).
pub fn injection_for(
    spec: &SignalSpec,
    kind: InjectionKind,
    intensity: f64,
    onset: f64,
) -> Result<DriftInjection> {
    let value = match kind {
        InjectionKind::TimeShift => intensity * spec.period().unwrap_or(1.0),
        _ => intensity,
    };
    let kind = if intensity == 0.0 { InjectionKind::None } else { kind };
    DriftInjection {
        kind,
        intensity: if kind == InjectionKind::None { 0.0 } else { value },
        onset,
    }
    .validated()
}

impl DriftInjection {
    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

/// One benchmark path.
pub fn benchmark_path(
    config: &ExperimentConfig,
    dataset: SignalKind,
    trend: Trend,
    injection: Option<(InjectionKind, f64)>,
    run: usize,
) -> Result<Path> {
    let seed = run_seed(config.master_seed, dataset, trend, run);
    let spec = benchmark_signal(dataset, seed);
    let inj = match injection {
        Some((kind, intensity)) => injection_for(&spec, kind, intensity, config.onset)?,
        None => DriftInjection::none().with_onset(config.onset)?,
    };
    let grid = EquidistantGrid::new(config.n)?;
    let signal = generate_signal(&spec, &inj, grid)?;
    let slope = match trend {
        Trend::Off => 0.0,
        Trend::On => config.trend_slope,
    };
    add_noise_and_trend(&signal, &NoiseTrendSpec::new(config.sigma, slope)?, seed)
}

/// Scores of every run for one path family; `[run][detector]`.
type ScoreTable = Vec<Vec<(std::result::Result<f64, String>, f64)>>;

#[derive(Clone, Copy)]
struct Variant {
    dataset: SignalKind,
    trend: Trend,
    drift: Option<(InjectionKind, f64)>,
}

fn score_variant(
    config: &ExperimentConfig,
    suite: &DetectorSuite,
    v: Variant,
) -> ScoreTable {
    (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let seed = run_seed(config.master_seed, v.dataset, v.trend, run);
            match benchmark_path(config, v.dataset, v.trend, v.drift, run) {
                Ok(path) => suite
                    .score_all(&path.values, seed)
                    .into_iter()
                    .map(|(s, t)| (s.map_err(|e| format!("run {run}: {e}")), t))
                    .collect(),
                Err(e) => suite
                    .methods()
                    .iter()
                    .map(|_| (Err(format!("run {run}: {e}")), 0.0))
                    .collect(),
            }
        })
        .collect()
}

fn column(table: &ScoreTable, d: usize) -> std::result::Result<(Vec<f64>, f64), String> {
    let mut out = Vec::with_capacity(table.len());
    let mut secs = 0.0;
    for row in table {
        let (s, t) = &row[d];
        out.push(s.clone()?);
        secs += t;
    }
    Ok((out, secs))
}

/// Mean and sample standard deviation of per-batch AUCs.
pub fn batched_auc(drift: &[f64], null: &[f64], batches: usize) -> Result<(f64, f64)> {
    let runs = drift.len().min(null.len());
    let mut aucs = Vec::with_capacity(batches);
    for b in 0..batches {
        let lo = b * runs / batches;
        let hi = (b + 1) * runs / batches;
        aucs.push(roc_auc(&drift[lo..hi], &null[lo..hi])?);
    }
    let m = aucs.len() as f64;
    let mean = aucs.iter().sum::<f64>() / m;
    let std = if aucs.len() > 1 {
        (aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

/// Environment variable capping the worker threads of [`run_benchmark`].
pub const THREADS_ENV: &str = "DRIFTLAB_THREADS";

/// Runs the sweep. Detector errors fail only the affected cells.
///
/// Results do not depend on the number of threads.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<BenchResult> {
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| crate::error::invalid(format!("cannot build thread pool: {e}")))?
            .install(|| run_sweep(config)),
        _ => run_sweep(config),
    }
}

fn run_sweep(config: &ExperimentConfig) -> Result<BenchResult> {
    config.validate()?;
    let grid = EquidistantGrid::new(config.n)?;
    let suite = DetectorSuite::new(&config.detectors, grid, config.onset, &config.settings)?;
    let pairs = config.pairs();

    let mut variants = Vec::new();
    for &dataset in &config.datasets {
        if !pairs.iter().any(|p| p.0 == dataset) {
            continue;
        }
        for &trend in &config.trend {
            variants.push(Variant {
                dataset,
                trend,
                drift: None,
            });
            for &(d, inj) in &pairs {
                if d != dataset {
                    continue;
                }
                for intensity in config.intensities(inj) {
                    if intensity > 0.0 {
                        variants.push(Variant {
                            dataset,
                            trend,
                            drift: Some((inj, intensity)),
                        });
                    }
                }
            }
        }
    }
    let tables: Vec<ScoreTable> = variants
        .iter()
        .map(|&v| score_variant(config, &suite, v))
        .collect();
    let find = |dataset, trend, drift: Option<(InjectionKind, f64)>| {
        variants
            .iter()
            .position(|v| {
                v.dataset == dataset
                    && v.trend == trend
                    && match (v.drift, drift) {
                        (None, None) => true,
                        (Some(a), Some(b)) => a.0 == b.0 && a.1.to_bits() == b.1.to_bits(),
                        _ => false,
                    }
            })
            .expect("variant scheduled")
    };

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for &(dataset, injection) in &pairs {
        for &trend in &config.trend {
            let null = &tables[find(dataset, trend, None)];
            for intensity in config.intensities(injection) {
                let drift = if intensity > 0.0 {
                    &tables[find(dataset, trend, Some((injection, intensity)))]
                } else {
                    null
                };
                for (d, &detector) in config.detectors.iter().enumerate() {
                    let key = CellKey {
                        dataset,
                        injection,
                        intensity,
                        trend,
                        detector,
                    };
                    let outcome = column(drift, d).and_then(|(ds, secs)| {
                        let (ns, _) = column(null, d)?;
                        let (auc, std) =
                            batched_auc(&ds, &ns, config.batches).map_err(|e| e.to_string())?;
                        Ok((auc, std, secs))
                    });
                    match outcome {
                        Ok((auc, auc_std, secs)) => cells.push(CellResult {
                            key,
                            auc,
                            auc_std,
                            auc_stderr: auc_std / (config.batches as f64).sqrt(),
                            runs: config.runs,
                            wall_clock_s: secs,
                        }),
                        Err(message) => failures.push(CellFailure { key, message }),
                    }
                }
            }
        }
    }
    Ok(BenchResult {
        config: config.clone(),
        config_hash: config.hash(),
        cells,
        failures,
    })
}
