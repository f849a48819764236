//! Monte Carlo behaviour of the local-MSE score and the residual k-NN check.

use std::f64::consts::TAU;

use driftlab::bench::{benchmark_path, default_intensity_grid, ExperimentConfig, Trend};
use driftlab::consistency::{
    knn_structure_score, local_mse_of_residuals, ConsistencyDetector, FeatureBasis,
    LocalMseParams, DEFAULT_RIDGE_LAMBDA,
};
use driftlab::seed::{derive, stream_rng};
use driftlab::streams::{EquidistantGrid, InjectionKind, SignalKind};
use rand::Rng;
use rand_distr::StandardNormal;

fn noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 3);
    (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// lMSE of `sin(2 pi t) + noise` against the zero predictor.
fn sine_lmse(n: usize, k: usize, sigma: f64, seed: u64) -> f64 {
    let grid = EquidistantGrid::new(n).unwrap();
    let e = noise(n, sigma, seed);
    let r: Vec<f64> = grid.times().zip(e).map(|(t, e)| (TAU * t).sin() + e).collect();
    local_mse_of_residuals(&r, LocalMseParams::new(k).unwrap()).unwrap()
}

#[test]
fn sine_against_zero_model_is_near_half() {
    let (n, k, sigma, reps) = (1000, 31, 0.1, 200);
    let v: Vec<f64> = (0..reps).map(|r| sine_lmse(n, k, sigma, derive(1, &[r]))).collect();
    let mean = v.iter().sum::<f64>() / reps as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let nf = n as f64;
    let kf = k as f64;
    let bound = (nf * sigma * sigma / (kf * (nf - kf))).max(4.0 * kf / (nf - kf));
    assert!((mean - 0.5).abs() <= bound + 3.0 * sd / (reps as f64).sqrt());
}

#[test]
fn deviation_shrinks_with_length() {
    let mut medians = Vec::new();
    for n in [300usize, 1000, 3000] {
        let k = LocalMseParams::for_length(n).k();
        let dev: Vec<f64> =
            (0..100).map(|r| (sine_lmse(n, k, 0.2, derive(2, &[n as u64, r])) - 0.5).abs()).collect();
        medians.push(median(dev));
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn pure_noise_scores_are_small() {
    let n = 1000;
    let grid = EquidistantGrid::new(n).unwrap();
    let det = ConsistencyDetector::new(
        FeatureBasis::default(),
        grid,
        DEFAULT_RIDGE_LAMBDA,
        LocalMseParams::new(31).unwrap(),
    )
    .unwrap();
    let scores: Vec<f64> = (0..200)
        .map(|r| det.score(&noise(n, 0.2, derive(3, &[r]))).unwrap().value)
        .collect();
    assert!(scores.iter().all(|s| *s >= 0.0));
    let m = median(scores);
    // E ~ sigma^2 / k = 0.0013
    assert!(m < 0.01, "median {m}");
}

#[test]
fn iid_residuals_have_no_knn_structure() {
    let scores: Vec<f64> =
        (0..200).map(|r| knn_structure_score(&noise(500, 1.0, derive(4, &[r])), 21).unwrap()).collect();
    let mean = scores.iter().sum::<f64>() / 200.0;
    assert!(mean < 0.05, "mean {mean}");
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &p in &idx[i..=j] {
                r[p] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = (x.len() - 1) as f64 / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let vx: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - m).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn median_scores_over_shift_grid(runs: u64) -> (Vec<f64>, Vec<f64>) {
    let cfg = ExperimentConfig::default();
    let grid = EquidistantGrid::new(cfg.n).unwrap();
    let det = ConsistencyDetector::new(
        cfg.settings.basis,
        grid,
        cfg.settings.ridge_lambda,
        LocalMseParams::for_length(cfg.n),
    )
    .unwrap();
    let deltas = default_intensity_grid(InjectionKind::TimeShift);
    let medians = deltas
        .iter()
        .map(|&d| {
            let drift = (d > 0.0).then_some((InjectionKind::TimeShift, d));
            median(
                (0..runs as usize)
                    .map(|run| {
                        let p = benchmark_path(&cfg, SignalKind::SquareWave, Trend::Off, drift, run)
                            .unwrap();
                        det.score(&p.values).unwrap().value
                    })
                    .collect(),
            )
        })
        .collect();
    (deltas, medians)
}

#[test]
fn largest_shift_scores_above_null() {
    let (_, m) = median_scores_over_shift_grid(30);
    assert!(m[m.len() - 1] > m[0], "{m:?}");
}

/// Strict monotone profile over the shift grid. Does not hold with the
/// default basis: the score tracks how much of the shortened pulse the
/// basis absorbs, which is not monotone in the shift.
#[test]
#[ignore = "known not to hold with the default square wave and basis"]
fn score_grows_with_time_shift() {
    let (deltas, medians) = median_scores_over_shift_grid(30);
    let rho = spearman(&deltas, &medians);
    assert!(rho >= 0.9, "rank correlation {rho}: {medians:?}");
}
