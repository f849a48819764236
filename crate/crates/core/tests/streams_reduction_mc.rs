//! Monte Carlo checks of the jump family and of the subsampling reduction.

use driftlab::baselines::{mmd_test, KernelSpec};
use driftlab::reduction::{subsample_streams, windowed_mean, TimeWindow, ValueMap};
use driftlab::seed::derive;
use driftlab::streams::{
    add_noise_and_trend, draw_jump, generate_jump, EquidistantGrid, JumpConfig, NoiseTrendSpec,
    Path,
};

fn jump_paths(p: f64, m: usize, n: usize, base: u64) -> Vec<Path> {
    let cfg = JumpConfig::new(p).unwrap();
    let grid = EquidistantGrid::new(n).unwrap();
    (0..m)
        .map(|i| generate_jump(&cfg, grid, derive(base, &[i as u64])))
        .collect()
}

#[test]
fn marginal_law_of_jump_values() {
    // P[X_t = -1] = t(1-p) + (1-t)p
    let grid = EquidistantGrid::new(20).unwrap();
    let reps = 4000;
    for p in [0.0, 0.3, 1.0] {
        let cfg = JumpConfig::new(p).unwrap();
        let mut neg = vec![0usize; grid.len()];
        for r in 0..reps {
            let path = generate_jump(&cfg, grid, derive(99, &[r]));
            for (c, v) in neg.iter_mut().zip(&path.values) {
                *c += usize::from(*v < 0.0);
            }
        }
        for (i, c) in neg.iter().enumerate() {
            let t = grid.time(i);
            let q = t * (1.0 - p) + (1.0 - t) * p;
            let se = (q * (1.0 - q) / reps as f64).sqrt();
            let freq = *c as f64 / reps as f64;
            assert!((freq - q).abs() <= 4.0 * se + 1e-12, "p={p} t={t}: {freq} vs {q}");
        }
    }
}

#[test]
fn constant_paths_subsample_to_constant() {
    let grid = EquidistantGrid::new(50).unwrap();
    let paths: Vec<Path> = (0..300).map(|i| Path::new(vec![7.0; grid.len()], i).unwrap()).collect();
    let s = subsample_streams(&paths, 4).unwrap();
    assert!(s.pairs.iter().all(|&(_, x)| x == 7.0));
    let early = s.pairs.iter().filter(|p| p.0 < 0.5).count() as f64;
    // Binomial(300, 1/2) within 4 sd
    assert!((early - 150.0).abs() < 4.0 * 75f64.sqrt());
}

#[test]
fn early_window_frequency_matches_integral() {
    // p = 0: P[X = -1 | T in [0, 0.1)] = E[T | T < 0.1] = 0.05
    let paths = jump_paths(0.0, 8000, 1000, 11);
    let s = subsample_streams(&paths, 5).unwrap();
    let w = TimeWindow::new(0.0, 0.1).unwrap();
    let m = windowed_mean(&s, &w, ValueMap::IndicatorEq(-1.0)).unwrap();
    let count = s.values_in(&w).len() as f64;
    let se = (0.05 * 0.95 / count).sqrt();
    assert!((m - 0.05).abs() < 4.0 * se, "{m} over {count}");
}

#[test]
fn windowed_mean_error_shrinks_with_sample_size() {
    // p = 0, W = [0.2, 0.6): E[X | T in W] = 1 - 2 E[T | T in W] = 0.2
    let w = TimeWindow::new(0.2, 0.6).unwrap();
    let reps = 40;
    let mut rms = Vec::new();
    for m in [500usize, 2000, 8000] {
        let mut sq = 0.0;
        for r in 0..reps {
            let paths = jump_paths(0.0, m, 200, derive(3, &[m as u64, r]));
            let s = subsample_streams(&paths, derive(4, &[m as u64, r])).unwrap();
            let est = windowed_mean(&s, &w, ValueMap::Identity).unwrap();
            // grid rounding shifts the effective window by at most 1/(2n)
            sq += (est - 0.2).powi(2);
        }
        let rms_m = (sq / reps as f64).sqrt();
        // Var(X | W) <= 1 and about 0.4 m points fall in W
        let bound = 3.0 * (1.0 / (0.4 * m as f64)).sqrt() + 0.01;
        assert!(rms_m < bound, "m={m}: rms {rms_m} >= {bound}");
        rms.push(rms_m);
    }
    assert!(rms[0] > rms[1] && rms[1] > rms[2], "{rms:?}");
    // O(1/sqrt(m)): quadrupling m roughly halves the error
    assert!(rms[2] / rms[0] < 0.5, "{rms:?}");
}

#[test]
fn subsampled_dichotomy_at_small_scale() {
    let reps = 40;
    let mut reject = [0usize; 2];
    for (slot, p) in [0.5, 0.0].into_iter().enumerate() {
        for r in 0..reps {
            let paths = jump_paths(p, 600, 100, derive(21, &[slot as u64, r]));
            let s = subsample_streams(&paths, derive(22, &[slot as u64, r])).unwrap();
            let (a, b) = s.split_at(0.5);
            let t = mmd_test(&a, &b, &KernelSpec::median_heuristic(), 200, r).unwrap();
            reject[slot] += usize::from(t.p_value <= 0.05);
        }
    }
    assert!(reject[0] <= 8, "stationary family rejected {}/{reps}", reject[0]);
    assert!(reject[1] >= 36, "drifting family rejected {}/{reps}", reject[1]);
}

#[test]
fn noise_has_requested_variance() {
    let n = 10_000;
    let signal = vec![0.0; n];
    let spec = NoiseTrendSpec::new(0.5, 0.0).unwrap();
    let path = add_noise_and_trend(&signal, &spec, 8).unwrap();
    let mean = path.values.iter().sum::<f64>() / n as f64;
    let var = path.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // sd of the sample variance of Gaussian data: sigma^2 sqrt(2/(n-1))
    assert!((var - 0.25).abs() < 3.0 * 0.25 * (2.0 / (n - 1) as f64).sqrt());
}

#[test]
fn jump_sign_is_fair_at_half() {
    let reps = 10_000u64;
    let neg = (0..reps)
        .filter(|&r| draw_jump(&JumpConfig::new(0.5).unwrap(), r).sign < 0.0)
        .count() as f64;
    assert!((neg / reps as f64 - 0.5).abs() < 4.0 * (0.25 / reps as f64).sqrt());
}
