use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng;
use crate::walk::path::simulate_with;

/// Number of jackknife groups; runs are dealt into groups by index.
pub const JACKKNIFE_GROUPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub stderr: f64,
    pub n_fit: usize,
    pub m_runs: usize,
}

/// Per-group sums of `X_k` and `X_k^2` for `k` in `[n/2, n]`.
struct Moments {
    runs: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

/// Diffusivity from the slope of `Var(X_k)` against `k` on `[n_fit/2, n_fit]`,
/// fitted through the origin, with a delete-a-group jackknife error.
pub fn estimate_sigma(env: &Environment, n_fit: usize, m_runs: usize, seed: u64) -> Result<SigmaEstimate> {
    if n_fit < 100 || m_runs < 100 {
        return Err(Error::InvalidParams(format!("estimate_sigma needs n_fit, m_runs >= 100 (got {n_fit}, {m_runs})")));
    }
    let kernel = env.kernel();
    let k0 = n_fit / 2;
    let width = n_fit - k0 + 1;
    let groups = JACKKNIFE_GROUPS.min(m_runs);
    let per_group: Vec<Moments> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let mut m = Moments { runs: 0, s1: vec![0.0; width], s2: vec![0.0; width] };
            for run in (g..m_runs).step_by(groups) {
                let path = simulate_with(&kernel, 0, n_fit, &mut rng::stream(seed, run as u64))?;
                for (i, &x) in path[k0..].iter().enumerate() {
                    let x = x as f64;
                    m.s1[i] += x;
                    m.s2[i] += x * x;
                }
                m.runs += 1;
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;

    let mut total = Moments { runs: 0, s1: vec![0.0; width], s2: vec![0.0; width] };
    for m in &per_group {
        total.runs += m.runs;
        for i in 0..width {
            total.s1[i] += m.s1[i];
            total.s2[i] += m.s2[i];
        }
    }
    let slope = |runs: usize, s1: &dyn Fn(usize) -> f64, s2: &dyn Fn(usize) -> f64| {
        let r = runs as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..width {
            let k = (k0 + i) as f64;
            let mean = s1(i) / r;
            let var = (s2(i) / r - mean * mean) * r / (r - 1.0);
            num += k * var;
            den += k * k;
        }
        (num / den).max(0.0).sqrt()
    };
    let sigma = slope(total.runs, &|i| total.s1[i], &|i| total.s2[i]);
    let leave_out: Vec<f64> = per_group
        .iter()
        .map(|m| slope(total.runs - m.runs, &|i| total.s1[i] - m.s1[i], &|i| total.s2[i] - m.s2[i]))
        .collect();
    let g = leave_out.len() as f64;
    let mean = leave_out.iter().sum::<f64>() / g;
    let stderr = ((g - 1.0) / g * leave_out.iter().map(|s| (s - mean).powi(2)).sum::<f64>()).sqrt();
    Ok(SigmaEstimate { sigma, stderr, n_fit, m_runs })
}
