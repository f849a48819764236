//! End-to-end checks of the `driftlab` binary: outputs, determinism and exit
//! codes.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use driftlab::streams::{draw_jump, JumpConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_driftlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_values(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sign_changes(v: &[(f64, f64)]) -> usize {
    v.windows(2).filter(|w| w[0].1 != w[1].1).count()
}

#[test]
fn jump_path_has_values_and_flips_of_the_law() {
    let dir = tempfile::tempdir().unwrap();
    let seed7 = dir.path().join("seed7.csv");
    let o = run(&[
        "generate", "--dataset", "jump", "--p", "1", "--n", "100", "--sigma", "0", "--seed", "7",
        "--out", s(&seed7),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("seed: 7"));
    let v = read_values(&seed7);
    assert_eq!(v.len(), 100);
    assert!(v.iter().all(|&(_, x)| x == 1.0 || x == -1.0));
    // replay: the number of visible flips follows the drawn jump time
    let draw = draw_jump(&JumpConfig::new(1.0).unwrap(), 7);
    let visible = usize::from(draw.jump_time > 0.01);
    assert_eq!(sign_changes(&v), visible);

    let seed0 = dir.path().join("seed0.csv");
    let o = run(&[
        "generate", "--dataset", "jump", "--p", "1", "--n", "100", "--sigma", "0", "--seed", "0",
        "--out", s(&seed0),
    ]);
    assert_eq!(code(&o), 0);
    let v = read_values(&seed0);
    assert_eq!(sign_changes(&v), 1);
    assert_eq!(v[0].1, -1.0);
    assert_eq!(v[99].1, 1.0);
}

#[test]
fn generation_is_bytewise_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for f in [&a, &b] {
        let o = run(&[
            "generate", "--dataset", "lemniscate", "--sigma", "0.3", "--trend", "1", "--seed",
            "11", "--out", s(f),
        ]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // standard output carries the same bytes
    let o = run(&["generate", "--dataset", "lemniscate", "--sigma", "0.3", "--trend", "1", "--seed", "11"]);
    assert_eq!(o.stdout, fs::read(&a).unwrap());
}

#[test]
fn lemniscate_time_shift_follows_formula() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("l.csv");
    let o = run(&[
        "generate", "--dataset", "lemniscate", "--c1", "1.5", "--c2", "-0.7", "--injection",
        "time_shift", "--intensity", "0.3", "--n", "200", "--seed", "1", "--out", s(&f),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = read_values(&f);
    let lem = |t: f64| 1.5 * (TAU * t).cos() + -0.7 * (2.0 * TAU * t).sin() / 2.0;
    for idx in [99usize, 150, 199] {
        let (t, x) = v[idx];
        assert!(t >= 0.5);
        assert!((x - lem(t + 0.3)).abs() < 1e-12, "t={t}");
    }
    let (t, x) = v[10];
    assert!((x - lem(t)).abs() < 1e-12);
}

#[test]
fn detect_gm_on_constant_path() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("c.csv");
    let mut text = String::from("t,value\n");
    for i in 1..=200 {
        text.push_str(&format!("{},3\n", i as f64 / 200.0));
    }
    fs::write(&f, text).unwrap();
    let o = run(&["detect", "--method", "gm", "--input", s(&f), "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = String::from_utf8(o.stdout).unwrap();
    let (m, score) = line.trim().split_once(',').unwrap();
    assert_eq!(m, "gm");
    assert!(score.parse::<f64>().unwrap() <= 1e-9);
}

#[test]
fn detect_kcpd_locates_noiseless_jump() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("j.csv");
    let o = run(&[
        "generate", "--dataset", "jump", "--jump-time", "0.37", "--n", "500", "--seed", "3",
        "--out", s(&f),
    ]);
    assert_eq!(code(&o), 0);
    let json = dir.path().join("r.json");
    let o = run(&["detect", "--method", "kcpd", "--input", s(&f), "--seed", "5", "--json", s(&json)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("kcpd,"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let locs: Vec<u64> = serde_json::from_value(doc["locations"].clone()).unwrap();
    assert_eq!(locs.len(), 1);
    // first sample at or after 0.37 is t = 185/500, 1-based index 185
    assert!(locs[0].abs_diff(185) <= 2, "{locs:?}");
}

#[test]
fn detect_adf_matches_reference_p_value() {
    let fixture: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/unit_root.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let case = fixture
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "random_walk")
        .unwrap();
    let series: Vec<f64> = serde_json::from_value(case["series"].clone()).unwrap();
    let reference = case["adf"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["regression"] == "constant" && r["lags"] == "auto")
        .unwrap()["p_value"]
        .as_f64()
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("rw.csv");
    let n = series.len();
    let mut text = String::from("t,value\n");
    for (i, x) in series.iter().enumerate() {
        text.push_str(&format!("{},{x:?}\n", (i + 1) as f64 / n as f64));
    }
    fs::write(&f, text).unwrap();
    let o = run(&["detect", "--method", "adf", "--regression", "constant", "--input", s(&f), "--seed", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = String::from_utf8(o.stdout).unwrap();
    let p: f64 = line.trim().rsplit(',').next().unwrap().parse().unwrap();
    assert!((p - reference).abs() < 0.02, "{p} vs {reference}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage errors
    assert_eq!(code(&run(&["generate", "--dataset", "jump", "--bogus"])), 2);
    assert_eq!(code(&run(&["generate", "--dataset", "triangle"])), 2);
    assert_eq!(code(&run(&["generate", "--dataset", "jump", "--p", "1.5", "--seed", "1"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["detect", "--method", "nope", "--input", "x.csv"])), 2);
    // malformed CSV carries its line
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,value\n0.5,1\n1.0,abc\n").unwrap();
    let o = run(&["detect", "--method", "gm", "--input", s(&bad), "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    // I/O failure
    let o = run(&["detect", "--method", "gm", "--input", s(&dir.path().join("missing.csv")), "--seed", "1"]);
    assert_eq!(code(&o), 1);
    let o = run(&[
        "generate", "--dataset", "jump", "--seed", "1", "--out",
        s(&dir.path().join("no/such/dir/x.csv")),
    ]);
    assert_eq!(code(&o), 1);
    // runtime failure: series too short for ADF
    let short = dir.path().join("short.csv");
    fs::write(&short, "t,value\n0.25,1\n0.5,2\n0.75,1\n1,3\n").unwrap();
    assert_eq!(code(&run(&["detect", "--method", "adf", "--input", s(&short), "--seed", "1"])), 1);
}

#[test]
fn missing_seed_is_drawn_and_printed() {
    let o = run(&["generate", "--dataset", "square_wave", "--n", "50"]);
    assert_eq!(code(&o), 0);
    let err = stderr(&o);
    let seed: u64 = err
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .unwrap()
        .parse()
        .unwrap();
    // the printed seed replays the run
    let again = run(&["generate", "--dataset", "square_wave", "--n", "50", "--seed", &seed.to_string()]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn subsample_draws_one_point_per_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&[
        "subsample", "--paths", "300", "--dataset", "jump", "--p", "0", "--seed", "4", "--out",
        s(&out), "--window", "0", "0.5", "--map", "eq:-1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("windowed mean"));
    let v = read_values(&out);
    assert_eq!(v.len(), 300);
    assert!(v.windows(2).all(|w| w[0].0 <= w[1].0));
    assert!(v.iter().all(|&(t, x)| (0.0..=1.0).contains(&t) && x.abs() == 1.0));

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (f, seed) in [(&a, "1"), (&b, "2")] {
        run(&["generate", "--dataset", "square_wave", "--n", "40", "--seed", seed, "--out", s(f)]);
    }
    let o = run(&["subsample", "--input", s(&a), s(&b), "--seed", "9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}

const MINIMAL: &str = r#"{
    "datasets": ["jump"], "injections": ["mean_jump"], "trend": ["off"],
    "intensity_grid": [0.0, 0.5], "detectors": ["gm"], "n": 100, "runs": 10,
    "batches": 2, "master_seed": 7,
    "settings": {"basis": {"poly_degree": 4, "trig_degree": 4}}
}"#;

fn bench_into(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["bench", "--config", s(config), "--out", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

fn svgs(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count()
}

#[test]
fn bench_minimal_config_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, MINIMAL).unwrap();
    let out = dir.path().join("out");
    let o = bench_into(&cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("seed: 7"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 3);
    assert!(results.starts_with("dataset,injection,intensity,trend,detector,auc,auc_std,runs,seed,config_hash\n"));
    assert_eq!(svgs(&out), 1);
    assert_eq!(fs::read_to_string(out.join("failures.csv")).unwrap().lines().count(), 1);

    let rep = dir.path().join("rep");
    let o = run(&["report", "--results", s(&out.join("results.csv")), "--out", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(svgs(&rep), 1);
    assert_eq!(
        fs::read(rep.join("curves.csv")).unwrap(),
        fs::read(out.join("curves.csv")).unwrap()
    );

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, results.replace(",0.5,", ",half,")).unwrap();
    let o = run(&["report", "--results", s(&broken), "--out", s(&rep)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn bench_reruns_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, MINIMAL.replace(r#"["gm"]"#, r#"["gm", "mmd", "kpss"]"#)).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&bench_into(&cfg, &a, &[])), 0);
    let o = bin()
        .args(["bench", "--config", s(&cfg), "--out", s(&b)])
        .env("DRIFTLAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    for f in ["results.csv", "curves.csv", "failures.csv", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bench_failure_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // every cell fails: 41 features cannot be fitted on 30 points without ridge
    fs::write(
        &cfg,
        r#"{"datasets": ["jump"], "injections": ["mean_jump"], "trend": ["off"],
            "intensity_grid": [0.0, 0.5], "detectors": ["gm"], "n": 30, "runs": 10,
            "master_seed": 1,
            "settings": {"basis": {"poly_degree": 20, "trig_degree": 10}, "ridge_lambda": 0.0,
                         "kcpd_min_segment": 5}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bench_into(&cfg, &out, &[]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("failures.csv")).unwrap().lines().count(), 3);

    fs::write(&cfg, r#"{"runs": 3}"#).unwrap();
    assert_eq!(code(&bench_into(&cfg, &out, &[])), 2);
    fs::write(&cfg, "{not json").unwrap();
    assert_eq!(code(&bench_into(&cfg, &out, &[])), 2);
    assert_eq!(code(&bench_into(&dir.path().join("none.json"), &out, &[])), 1);
}

#[test]
fn bench_seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, MINIMAL).unwrap();
    let out = dir.path().join("o");
    let o = bench_into(&cfg, &out, &["--seed", "99"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("seed: 99"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.lines().nth(1).unwrap().contains(",99,"));
}
