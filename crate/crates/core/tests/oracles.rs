mod common;

use common::*;
use condwalk::walk;

#[test]
fn meander_matches_enumeration_srw() {
    let env = srw(-4, 40);
    for n in 1..=10 {
        let err = meander_oracle_error(&env, n);
        assert!(err <= 1e-12, "n = {n}: {err:e}");
    }
}

#[test]
fn meander_matches_enumeration_random() {
    let env = random_env(2, (-6, 40), 17);
    for n in 1..=10 {
        let err = meander_oracle_error(&env, n);
        assert!(err <= 1e-12, "n = {n}: {err:e}");
    }
}

#[test]
fn crossing_matches_enumeration() {
    for env in [srw(-4, 20), random_env(2, (-6, 20), 17)] {
        for level in 2..=6 {
            let err = crossing_oracle_error(&env, level);
            assert!(err <= 1e-12, "N = {level}: {err:e}");
        }
    }
}

#[test]
fn srw_survival_small_horizons() {
    let env = srw(-4, 40);
    // P[Lambda_n] = 2^-n * #{positive paths}: 1/2, 1/4, 2/8, 3/16
    for (n, p) in [(1, 0.5), (2, 0.25), (3, 0.25), (4, 0.1875)] {
        assert!((walk::survival_probability(&env, n, 2 * n).unwrap().value() - p).abs() < 1e-15);
    }
}

#[test]
fn srw_crossing_is_one_over_two_n() {
    let env = srw(-4, 300);
    for level in [2, 5, 50, 256] {
        let p = walk::harmonic_hit(&env, level).unwrap().crossing_probability;
        assert!((p * 2.0 * level as f64 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn free_walk_is_centred() {
    // X_m / sqrt(m) has mean 0; m = 10^4 steps over 2000 runs
    let env = random_env(3, (-3000, 3000), 5);
    let m = 10_000;
    let runs = 2000;
    let xs: Vec<f64> = (0..runs).map(|s| walk::simulate(&env, 0, m, s).unwrap().last() as f64 / (m as f64).sqrt()).collect();
    let mean = xs.iter().sum::<f64>() / runs as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0)).sqrt();
    assert!(mean.abs() < 4.0 * sd / (runs as f64).sqrt(), "mean {mean}, sd {sd}");
}
