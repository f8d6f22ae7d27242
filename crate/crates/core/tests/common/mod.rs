#![allow(dead_code)]

use condwalk::env::Kernel;
use condwalk::walk::{self, CrossingSampler, MeanderSampler};
use condwalk::{Environment, EnvironmentParams};

pub fn srw(x_min: i64, x_max: i64) -> Environment {
    Environment::generate(EnvironmentParams::srw(x_min, x_max)).unwrap()
}

pub fn random_env(r_max: usize, window: (i64, i64), seed: u64) -> Environment {
    Environment::generate(EnvironmentParams::iid(0.5, 2.0, 1.0, r_max, window, seed)).unwrap()
}

/// Every path of `n` steps from 0 that stays in `[1, inf)`, with its unconditioned probability.
pub fn enumerate_meanders(kernel: &Kernel, n: usize) -> Vec<(Vec<i64>, f64)> {
    fn rec(kernel: &Kernel, n: usize, path: &mut Vec<i64>, prob: f64, out: &mut Vec<(Vec<i64>, f64)>) {
        if path.len() == n + 1 {
            out.push((path.clone(), prob));
            return;
        }
        let x = *path.last().unwrap();
        let row = kernel.row(x).expect("window covers the enumeration");
        for (j, &p) in row.iter().enumerate() {
            let y = x + kernel.offset(j);
            if y > 0 && p > 0.0 {
                path.push(y);
                rec(kernel, n, path, prob * p, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(kernel, n, &mut vec![0], 1.0, &mut out);
    out
}

/// Largest gap between the h-transform meander law and brute-force enumeration.
pub fn meander_oracle_error(env: &Environment, n: usize) -> f64 {
    let kernel = env.kernel();
    let w = n * env.r_max();
    let survival = walk::survival_probability(env, n, w).unwrap();
    let sampler = MeanderSampler::new(&kernel, &survival.table).unwrap();
    let paths = enumerate_meanders(&kernel, n);
    let total: f64 = paths.iter().map(|p| p.1).sum();
    let mut worst = (survival.value() - total).abs().max(survival.bracket().abs());
    for (path, p) in &paths {
        worst = worst.max((sampler.path_probability(path).unwrap() - p / total).abs());
    }
    worst
}

/// Forward propagation of `P[X_k = x, k < tau]` for the walk killed on leaving
/// `(0, level)`; returns the exit law on `[level, inf)` and the mass still alive.
pub fn crossing_exit_law(kernel: &Kernel, level: i64, steps: usize) -> (Vec<(i64, f64)>, f64) {
    let r = kernel.r_max() as i64;
    let mut alive = vec![0.0; level as usize];
    let mut exits = vec![0.0; r as usize];
    // first step from 0
    for (j, &p) in kernel.row(0).unwrap().iter().enumerate() {
        let y = kernel.offset(j);
        if y >= level {
            exits[(y - level) as usize] += p;
        } else if y > 0 {
            alive[y as usize] += p;
        }
    }
    for _ in 0..steps {
        let mut next = vec![0.0; level as usize];
        for x in 1..level {
            let m = alive[x as usize];
            if m == 0.0 {
                continue;
            }
            for (j, &p) in kernel.row(x).unwrap().iter().enumerate() {
                let y = x + kernel.offset(j);
                if y >= level {
                    exits[(y - level) as usize] += m * p;
                } else if y > 0 {
                    next[y as usize] += m * p;
                }
            }
        }
        alive = next;
    }
    (exits.iter().enumerate().map(|(d, &p)| (level + d as i64, p)).collect(), alive.iter().sum())
}

/// Every path from 0 that crosses `level` within `depth` steps without
/// returning to `(-inf, 0]`, with its unconditioned probability.
pub fn enumerate_crossings(kernel: &Kernel, level: i64, depth: usize) -> Vec<(Vec<i64>, f64)> {
    fn rec(kernel: &Kernel, level: i64, depth: usize, path: &mut Vec<i64>, prob: f64, out: &mut Vec<(Vec<i64>, f64)>) {
        let x = *path.last().unwrap();
        if x >= level {
            out.push((path.clone(), prob));
            return;
        }
        if path.len() > depth {
            return;
        }
        for (j, &p) in kernel.row(x).unwrap().iter().enumerate() {
            let y = x + kernel.offset(j);
            if y > 0 && p > 0.0 {
                path.push(y);
                rec(kernel, level, depth, path, prob * p, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(kernel, level, depth, &mut vec![0], 1.0, &mut out);
    out
}

/// Largest gap between the h-transform crossing law and enumeration plus
/// forward propagation (crossing probability, exit law, short-path laws).
pub fn crossing_oracle_error(env: &Environment, level: i64) -> f64 {
    let kernel = env.kernel();
    let table = walk::harmonic_hit(env, level).unwrap();
    let (exits, leftover) = crossing_exit_law(&kernel, level, 4000);
    assert!(leftover < 1e-14, "propagation not converged: {leftover:e}");
    let p_cross: f64 = exits.iter().map(|e| e.1).sum();
    let mut worst = (table.crossing_probability - p_cross).abs();

    let exact = condwalk::network::exit_distribution(env, level).unwrap();
    for (z, p) in &exact {
        let forward = exits.iter().find(|e| e.0 == *z).map_or(0.0, |e| e.1);
        worst = worst.max((p - forward).abs());
    }

    let sampler = CrossingSampler::new(&kernel, &table).unwrap();
    let depth = (level as usize + 4).min(10);
    for (path, p) in enumerate_crossings(&kernel, level, depth) {
        let mut q = 1.0;
        for w in path.windows(2) {
            q *= sampler.step_law(w[0]).unwrap().iter().find(|s| s.0 == w[1]).map_or(0.0, |s| s.1);
        }
        worst = worst.max((q - p / p_cross).abs());
    }
    worst
}
