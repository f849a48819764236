//! `driftlab` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error or
//! malformed input.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use driftlab::baselines::{
    adf_test, kcpd_scan_with, kfdr_test, kpss_test, mmd_test, AdfLags, AdfRegression, KcpdConfig,
    KernelSpec, KpssRegression, DEFAULT_KFDR_GAMMA, DEFAULT_LEVEL, DEFAULT_MIN_SEGMENT,
    DEFAULT_PERMUTATIONS,
};
use driftlab::bench::{
    curves, read_results_csv, render_svg, run_benchmark, summarize, write_curves_csv,
    write_failures_csv, write_results_csv, ExperimentConfig,
};
use driftlab::consistency::{
    ConsistencyDetector, FeatureBasis, LmseNormalization, LocalMseParams, DEFAULT_RIDGE_LAMBDA,
};
use driftlab::reduction::{subsample_streams, windowed_mean, TimeWindow, ValueMap};
use driftlab::score::Method;
use driftlab::seed::derive;
use driftlab::streams::{
    add_noise_and_trend, draw_jump, draw_phase, generate_signal, DriftInjection, EquidistantGrid,
    InjectionKind, JumpConfig, NoiseTrendSpec, Path, SignalKind, SignalSpec, SinePhaseConfig,
    DEFAULT_SQUARE_PERIOD,
};
use driftlab::DriftError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "driftlab", version, about = "Drift detection on dependent data streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one path and write it as `t,value` CSV.
    Generate(GenerateArgs),
    /// Score one path file with a detector; prints `method,score[,p_value]`.
    Detect(DetectArgs),
    /// Draw one observation per path at a uniform time; writes `t,x` CSV.
    Subsample(SubsampleArgs),
    /// Run a benchmark sweep from a JSON config.
    Bench(BenchArgs),
    /// Render curves and SVG charts from a results CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct SignalArgs {
    #[arg(long)]
    dataset: SignalKind,
    /// Jump: probability that the initial sign is -1.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Jump: fixed jump time instead of a uniform draw.
    #[arg(long)]
    jump_time: Option<f64>,
    /// Sine phase: the phase is uniform on [0, 2 pi - epsilon].
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Lemniscate amplitudes; drawn from the seed when absent.
    #[arg(long, requires = "c2")]
    c1: Option<f64>,
    #[arg(long, requires = "c1")]
    c2: Option<f64>,
    /// Lemniscate time scale (2 pi puts one full figure on [0, 1]).
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    time_scale: f64,
    #[arg(long, default_value_t = DEFAULT_SQUARE_PERIOD)]
    period: f64,
    #[arg(long, default_value_t = 0.5)]
    duty: f64,
    #[arg(long, default_value = "none")]
    injection: InjectionKind,
    /// Added level (mean_jump), time offset in grid time (time_shift) or
    /// slow-down s with factor 1 - s (slow_down).
    #[arg(long, default_value_t = 0.0)]
    intensity: f64,
    #[arg(long, default_value_t = 0.5)]
    onset: f64,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Slope of the additive linear trend.
    #[arg(long, default_value_t = 0.0)]
    trend: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GenerateArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write `{grid_n, seed, values}` JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Normalization {
    Raw,
    Noise,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DetectArgs {
    #[arg(long)]
    method: Method,
    /// Path CSV with header `t,value`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 15)]
    poly_degree: usize,
    #[arg(long, default_value_t = 15)]
    trig_degree: usize,
    #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
    ridge_lambda: f64,
    /// Local-MSE window (odd); largest odd k <= sqrt(n) when absent.
    #[arg(long)]
    k: Option<usize>,
    /// Neighbours of the residual k-NN check; the local-MSE window when absent.
    #[arg(long)]
    k_nn: Option<usize>,
    #[arg(long, value_enum, default_value = "raw")]
    normalization: Normalization,
    /// Split time of the two-sample tests.
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long, default_value_t = DEFAULT_KFDR_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_SEGMENT)]
    min_segment: usize,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: f64,
    /// Fixed Gaussian bandwidth; median heuristic when absent.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Deterministic terms of ADF/KPSS: without (`constant`/`level`) or with
    /// a linear trend.
    #[arg(long, value_enum, default_value = "trend")]
    regression: Regression,
    /// Lag order for ADF (maximum for AIC search) or KPSS; automatic when absent.
    #[arg(long)]
    lags: Option<usize>,
    /// ADF: use `--lags` as a fixed order instead of an AIC search bound.
    #[arg(long)]
    fixed_lags: bool,
    /// Also write the full result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regression {
    Constant,
    Trend,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SubsampleArgs {
    /// Path CSV files, one per independent path.
    #[arg(long, num_args = 1.., conflicts_with = "paths")]
    input: Vec<PathBuf>,
    /// Generate this many independent paths instead of reading files.
    #[arg(long, requires = "dataset")]
    paths: Option<usize>,
    #[command(flatten)]
    signal: OptionalSignal,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the windowed mean over [LOWER, UPPER).
    #[arg(long, num_args = 2, value_names = ["LOWER", "UPPER"])]
    window: Option<Vec<f64>>,
    /// Map applied before averaging: identity, square, eq:<v>, le:<v>.
    #[arg(long, default_value = "identity")]
    map: ValueMap,
}

#[derive(Args)]
struct OptionalSignal {
    #[arg(long)]
    dataset: Option<SignalKind>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides `master_seed` of the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results CSV written by `bench`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<DriftError> for Failure {
    fn from(e: DriftError) -> Self {
        match e {
            DriftError::Io(_) | DriftError::SeriesTooShort { .. } | DriftError::SingularRegression(_)
            | DriftError::RankDeficient { .. } | DriftError::EmptyWindow { .. } => {
                Failure::Runtime(e.to_string())
            }
            DriftError::Csv(ref c) if c.is_io_error() => {
                Failure::Runtime(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Detect(a) => detect(a),
        Command::Subsample(a) => subsample(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    let s = seed.unwrap_or_else(rand::random);
    eprintln!("seed: {s}");
    s
}

fn open_out(out: Option<&FsPath>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn build_path(a: &SignalArgs, seed: u64) -> Result<Path, DriftError> {
    let spec = match a.dataset {
        SignalKind::Jump => {
            let draw = draw_jump(&JumpConfig::new(a.p)?, seed);
            SignalSpec::Jump {
                level: draw.sign,
                jump_time: Some(a.jump_time.unwrap_or(draw.jump_time)),
            }
        }
        SignalKind::Lemniscate => match (a.c1, a.c2) {
            (Some(c1), Some(c2)) => SignalSpec::Lemniscate {
                c1,
                c2,
                time_scale: a.time_scale,
            },
            _ => match SignalSpec::random_lemniscate(seed) {
                SignalSpec::Lemniscate { c1, c2, .. } => SignalSpec::Lemniscate {
                    c1,
                    c2,
                    time_scale: a.time_scale,
                },
                other => other,
            },
        },
        SignalKind::SquareWave => SignalSpec::SquareWave {
            period: a.period,
            duty: a.duty,
            high: 1.0,
            low: -1.0,
        },
        SignalKind::SinePhase => SignalSpec::SinePhase {
            phase: draw_phase(&SinePhaseConfig::new(a.epsilon)?, seed),
        },
    };
    let injection = if a.injection == InjectionKind::None {
        DriftInjection::none()
    } else {
        DriftInjection::new(a.injection, a.intensity)?
    }
    .with_onset(a.onset)?;
    let grid = EquidistantGrid::new(a.n)?;
    let signal = generate_signal(&spec, &injection, grid)?;
    add_noise_and_trend(&signal, &NoiseTrendSpec::new(a.sigma, a.trend)?, seed)
}

fn generate(a: GenerateArgs) -> CmdResult {
    let seed = resolve_seed(a.seed);
    let path = build_path(&a.signal, seed)?;
    let mut out = open_out(a.out.as_deref())?;
    if a.json {
        writeln!(out, "{}", path.to_json()?)?;
    } else {
        path.write_csv(&mut out)?;
    }
    out.flush()?;
    eprintln!("generated dataset={} n={} seed={seed}", a.signal.dataset, path.len());
    Ok(())
}

fn read_path(file: &FsPath, seed: u64) -> Result<Path, Failure> {
    let f = File::open(file).map_err(|e| Failure::Runtime(format!("{}: {e}", file.display())))?;
    Path::read_csv(BufReader::new(f), seed).map_err(|e| match e {
        DriftError::Io(_) => Failure::Runtime(format!("{}: {e}", file.display())),
        _ => Failure::Usage(format!("{}: {e}", file.display())),
    })
}

fn detect(a: DetectArgs) -> CmdResult {
    let seed = resolve_seed(a.seed);
    let path = read_path(&a.input, seed)?;
    let x = &path.values;
    let kernel = match a.bandwidth {
        Some(h) => KernelSpec::gaussian(h)?,
        None => KernelSpec::median_heuristic(),
    };
    let split = path.times().filter(|&t| t < a.split).count();
    let (early, late) = x.split_at(split);
    let mut extra = serde_json::Map::new();
    let (score, p_value) = match a.method {
        Method::Gm | Method::GmKnn => {
            let params = match a.k {
                Some(k) => LocalMseParams::new(k)?,
                None => LocalMseParams::for_length(x.len()),
            };
            let basis = FeatureBasis::new(a.poly_degree, a.trig_degree);
            let det = ConsistencyDetector::new(basis, path.grid, a.ridge_lambda, params)?
                .with_normalization(match a.normalization {
                    Normalization::Raw => LmseNormalization::Raw,
                    Normalization::Noise => LmseNormalization::NoiseVariance,
                });
            let s = if a.method == Method::Gm {
                det.score(x)?
            } else {
                det.knn_score(x, a.k_nn.unwrap_or(params.k()))?
            };
            extra.insert("params".into(), json!(s.params));
            extra.insert("coefficients".into(), json!(det.fitter().coefficients(x)?.as_slice()));
            (s.value, None)
        }
        Method::Mmd => {
            let t = mmd_test(early, late, &kernel, a.permutations, seed)?;
            extra.insert("statistic".into(), json!(t.statistic));
            (1.0 - t.p_value, Some(t.p_value))
        }
        Method::Kfrd => {
            let t = kfdr_test(early, late, &kernel, a.gamma, a.permutations, seed)?;
            extra.insert("statistic".into(), json!(t.statistic));
            (1.0 - t.p_value, Some(t.p_value))
        }
        Method::Kcpd => {
            let cfg = KcpdConfig {
                min_segment: a.min_segment,
                kernel,
                n_permutations: a.permutations,
                level: a.level,
            };
            let r = kcpd_scan_with(x, &cfg, seed)?;
            eprintln!("change points: {:?}", r.locations);
            extra.insert("locations".into(), json!(r.locations));
            extra.insert("scores".into(), json!(r.scores));
            extra.insert("count".into(), json!(r.count));
            extra.insert("max_statistic".into(), json!(r.max_statistic));
            (r.ranking_score(), None)
        }
        Method::Adf => {
            let regression = match a.regression {
                Regression::Constant => AdfRegression::Constant,
                Regression::Trend => AdfRegression::ConstantTrend,
            };
            let lags = match (a.lags, a.fixed_lags) {
                (Some(l), true) => AdfLags::Fixed(l),
                (Some(l), false) => AdfLags::MaxAic(l),
                (None, _) => AdfLags::Auto,
            };
            let t = adf_test(x, lags, regression)?;
            extra.insert("statistic".into(), json!(t.statistic));
            extra.insert("lags".into(), json!(t.lags));
            // retaining the unit root reads as drift
            (t.p_value, Some(t.p_value))
        }
        Method::Kpss => {
            let regression = match a.regression {
                Regression::Constant => KpssRegression::Level,
                Regression::Trend => KpssRegression::Trend,
            };
            let t = kpss_test(x, regression, a.lags)?;
            extra.insert("statistic".into(), json!(t.statistic));
            extra.insert("lags".into(), json!(t.lags));
            (1.0 - t.p_value, Some(t.p_value))
        }
    };
    match p_value {
        Some(p) => println!("{},{score},{p}", a.method),
        None => println!("{},{score}", a.method),
    }
    if let Some(file) = a.json {
        let mut doc = json!({
            "method": a.method.as_str(),
            "score": score,
            "p_value": p_value,
            "seed": seed,
            "input": a.input.display().to_string(),
        });
        doc.as_object_mut().expect("object").extend(extra);
        fs::write(file, serde_json::to_string_pretty(&doc).map_err(DriftError::from)? + "\n")?;
    }
    Ok(())
}

fn subsample(a: SubsampleArgs) -> CmdResult {
    let seed = resolve_seed(a.seed);
    let paths: Vec<Path> = if let Some(m) = a.paths {
        let s = &a.signal;
        let dataset = s.dataset.expect("clap enforces --dataset");
        let args = SignalArgs {
            dataset,
            p: s.p,
            jump_time: None,
            epsilon: 0.0,
            c1: None,
            c2: None,
            time_scale: std::f64::consts::TAU,
            period: DEFAULT_SQUARE_PERIOD,
            duty: 0.5,
            injection: InjectionKind::None,
            intensity: 0.0,
            onset: 0.5,
            n: s.n,
            sigma: s.sigma,
            trend: 0.0,
        };
        (0..m as u64)
            .map(|i| build_path(&args, derive(seed, &[i])))
            .collect::<Result<_, _>>()?
    } else if !a.input.is_empty() {
        a.input
            .iter()
            .enumerate()
            .map(|(i, f)| read_path(f, derive(seed, &[i as u64])))
            .collect::<Result<_, _>>()?
    } else {
        return Err(Failure::Usage("give --input files or --paths with --dataset".into()));
    };
    let sample = subsample_streams(&paths, seed)?;
    let mut out = open_out(a.out.as_deref())?;
    sample.write_csv(&mut out)?;
    out.flush()?;
    if let Some(w) = a.window {
        let window = TimeWindow::new(w[0], w[1])?;
        let m = windowed_mean(&sample, &window, a.map)?;
        eprintln!("windowed mean over [{}, {}): {m}", w[0], w[1]);
    }
    eprintln!("subsampled {} paths seed={seed}", paths.len());
    Ok(())
}

fn bench(a: BenchArgs) -> CmdResult {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", a.config.display())))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.config.display())))?;
    let has_seed = raw.get("master_seed").is_some();
    config.master_seed = match a.seed {
        Some(s) => s,
        None if has_seed => config.master_seed,
        None => rand::random(),
    };
    eprintln!("seed: {}", config.master_seed);
    let result = run_benchmark(&config)?;
    fs::create_dir_all(&a.out)?;
    let summary = summarize(&result);
    write_results_csv(&summary.rows, BufWriter::new(File::create(a.out.join("results.csv"))?))?;
    write_curves_csv(&summary.curves, BufWriter::new(File::create(a.out.join("curves.csv"))?))?;
    write_failures_csv(&result, BufWriter::new(File::create(a.out.join("failures.csv"))?))?;
    fs::write(a.out.join("config.json"), config.to_json()? + "\n")?;
    for (stem, svg) in render_svg(&summary.curves) {
        fs::write(a.out.join(format!("{stem}.svg")), svg)?;
    }
    eprintln!(
        "bench: {} cells, {} failed, config {}",
        result.cells.len(),
        result.failures.len(),
        result.config_hash
    );
    if result.cells.is_empty() {
        return Err(Failure::Runtime("every cell failed; see failures.csv".into()));
    }
    Ok(())
}

fn report(a: ReportArgs) -> CmdResult {
    let f = File::open(&a.results)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", a.results.display())))?;
    let rows = read_results_csv(BufReader::new(f))
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.results.display())))?;
    if rows.is_empty() {
        return Err(Failure::Usage(format!("{}: no result rows", a.results.display())));
    }
    fs::create_dir_all(&a.out)?;
    let cs = curves(&rows);
    write_curves_csv(&cs, BufWriter::new(File::create(a.out.join("curves.csv"))?))?;
    let charts = render_svg(&cs);
    for (stem, svg) in &charts {
        fs::write(a.out.join(format!("{stem}.svg")), svg)?;
    }
    eprintln!("report: {} rows, {} charts", rows.len(), charts.len());
    Ok(())
}
