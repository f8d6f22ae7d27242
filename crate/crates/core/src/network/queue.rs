use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::particles::ParticleSystemSpec;
use crate::rng;

/// Fraction of the horizon discarded before averaging.
pub const BURN_IN_FRACTION: f64 = 0.1;

const BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueReport {
    pub lambda0: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub arrivals: usize,
    /// Mean sojourn of particles arriving after burn-in.
    pub e_t_hat: f64,
    pub e_t_stderr: f64,
    /// Time-averaged population on `[burn_in, horizon]`.
    pub e_r_hat: f64,
    /// Batch-means standard error of `e_r_hat`.
    pub e_r_stderr: f64,
    /// `|lambda0 * e_t_hat - e_r_hat| / e_r_hat`.
    pub little_gap: f64,
}

/// Continuous-time walk on the sites of `spec` from 0 with unit-rate clocks,
/// stopped on returning to 0 (a self-loop jump counts) or hitting `N`.
struct Service<'a> {
    spec: &'a ParticleSystemSpec,
    cumulative: Vec<Vec<(usize, f64)>>,
}

impl<'a> Service<'a> {
    fn new(spec: &'a ParticleSystemSpec) -> Self {
        let s = spec.sites();
        let cumulative = (0..s)
            .map(|x| {
                let mut acc = 0.0;
                (0..s)
                    .filter(|&y| spec.q(x, y) > 0.0)
                    .map(|y| {
                        acc += spec.q(x, y);
                        (y, acc)
                    })
                    .collect()
            })
            .collect();
        Service { spec, cumulative }
    }

    fn jump<R: Rng>(&self, x: usize, rng: &mut R) -> usize {
        let row = &self.cumulative[x];
        let u = rng.random::<f64>() * row.last().unwrap().1;
        row.iter().find(|&&(_, c)| u < c).unwrap_or(row.last().unwrap()).0
    }

    fn sojourn<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut t = 0.0;
        let mut x = 0;
        loop {
            let e: f64 = Exp1.sample(rng);
            t += e;
            x = self.jump(x, rng);
            if x == 0 || x == self.spec.level {
                return t;
            }
        }
    }
}

/// M/G/inf queue: arrivals at 0 with rate `lambda0`, each served for one
/// excursion of the walk. Population integrals are computed exactly from the
/// arrival and departure times.
pub fn simulate_queue(spec: &ParticleSystemSpec, horizon: f64, seed: u64) -> Result<QueueReport> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
    }
    let service = Service::new(spec);
    let mut rng = rng::stream(seed, 0);
    let burn_in = BURN_IN_FRACTION * horizon;
    let span = horizon - burn_in;
    let width = span / BATCHES as f64;
    let mut area = [0.0; BATCHES];
    let (mut count, mut sum, mut sum_sq) = (0usize, 0.0, 0.0);
    let mut arrivals = 0;
    let mut t = 0.0;
    loop {
        let gap: f64 = Exp1.sample(&mut rng);
        t += gap / spec.lambda0;
        if t > horizon {
            break;
        }
        arrivals += 1;
        let s = service.sojourn(&mut rng);
        if t >= burn_in {
            count += 1;
            sum += s;
            sum_sq += s * s;
        }
        // spread the occupied interval over the batches it overlaps
        let (lo, hi) = (t.max(burn_in), (t + s).min(horizon));
        if hi > lo {
            let first = ((lo - burn_in) / width) as usize;
            let last = (((hi - burn_in) / width) as usize).min(BATCHES - 1);
            for b in first..=last {
                let b_lo = burn_in + b as f64 * width;
                let overlap = hi.min(b_lo + width) - lo.max(b_lo);
                if overlap > 0.0 {
                    area[b] += overlap;
                }
            }
        }
    }
    if count < 2 {
        return Err(Error::EmptySample);
    }
    let n = count as f64;
    let e_t_hat = sum / n;
    let var = (sum_sq - n * e_t_hat * e_t_hat) / (n - 1.0);
    let batch_means: Vec<f64> = area.iter().map(|a| a / width).collect();
    let e_r_hat = batch_means.iter().sum::<f64>() / BATCHES as f64;
    let batch_var = batch_means.iter().map(|m| (m - e_r_hat).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(QueueReport {
        lambda0: spec.lambda0,
        horizon,
        burn_in,
        arrivals,
        e_t_hat,
        e_t_stderr: (var / n).sqrt(),
        e_r_hat,
        e_r_stderr: (batch_var / BATCHES as f64).sqrt(),
        little_gap: (spec.lambda0 * e_t_hat - e_r_hat).abs() / e_r_hat,
    })
}
