use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, Kernel};
use crate::error::{Error, Result};
use crate::rng;

/// Integer trajectory `X_0, ..., X_m` of the walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    pub start: i64,
    pub positions: Vec<i64>,
    pub env_id: String,
    pub seed: u64,
}

impl WalkPath {
    pub fn new(positions: Vec<i64>, env_id: impl Into<String>, seed: u64) -> Self {
        WalkPath { start: positions[0], positions, env_id: env_id.into(), seed }
    }

    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn last(&self) -> i64 {
        *self.positions.last().expect("nonempty path")
    }

    /// Write as CSV `(k, X_k)` preceded by a `#`-prefixed JSON header.
    pub fn write_csv<W: Write>(&self, mut out: W, n: usize, sigma: f64) -> Result<()> {
        let header = PathHeader { env_id: self.env_id.clone(), seed: self.seed, n, sigma };
        writeln!(out, "# {}", serde_json::to_string(&header)?)?;
        writeln!(out, "k,x")?;
        for (k, x) in self.positions.iter().enumerate() {
            writeln!(out, "{k},{x}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<(WalkPath, PathHeader)> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| Error::Format("empty path file".into()))??;
        let json = first.strip_prefix("# ").ok_or_else(|| Error::Format("missing JSON header".into()))?;
        let header: PathHeader = serde_json::from_str(json)?;
        let mut positions = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() || line == "k,x" {
                continue;
            }
            let (k, x) = line.split_once(',').ok_or_else(|| Error::Format(format!("bad row {line:?}")))?;
            let k: usize = k.parse().map_err(|_| Error::Format(format!("bad index {k:?}")))?;
            if k != positions.len() {
                return Err(Error::Format(format!("row {k} out of order")));
            }
            positions.push(x.parse().map_err(|_| Error::Format(format!("bad site {x:?}")))?);
        }
        if positions.is_empty() {
            return Err(Error::Format("path has no rows".into()));
        }
        Ok((WalkPath::new(positions, header.env_id.clone(), header.seed), header))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathHeader {
    pub env_id: String,
    pub seed: u64,
    pub n: usize,
    pub sigma: f64,
}

/// Sample `m` steps of the quenched walk from `start`.
pub fn simulate(env: &Environment, start: i64, m: usize, seed: u64) -> Result<WalkPath> {
    let kernel = env.kernel();
    let positions = simulate_with(&kernel, start, m, &mut rng::stream(seed, 0))?;
    Ok(WalkPath::new(positions, env.env_id(), seed))
}

pub(crate) fn simulate_with<R: Rng>(kernel: &Kernel, start: i64, m: usize, rng: &mut R) -> Result<Vec<i64>> {
    let mut positions = Vec::with_capacity(m + 1);
    positions.push(start);
    let mut x = start;
    for step in 0..m {
        x = kernel.step(x, rng.random()).ok_or(Error::WindowExit { step, x })?;
        positions.push(x);
    }
    Ok(positions)
}

/// A set of lattice sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiteSet {
    Sites(Vec<i64>),
    AtMost(i64),
    AtLeast(i64),
}

impl SiteSet {
    pub fn contains(&self, x: i64) -> bool {
        match self {
            SiteSet::Sites(s) => s.contains(&x),
            SiteSet::AtMost(b) => x <= *b,
            SiteSet::AtLeast(b) => x >= *b,
        }
    }
}

/// First entrance index into `a`; with `strictly_after_start` the search starts at index 1.
pub fn stopping_time(positions: &[i64], a: &SiteSet, strictly_after_start: bool) -> Option<usize> {
    let from = usize::from(strictly_after_start);
    positions.iter().enumerate().skip(from).find(|(_, &x)| a.contains(x)).map(|(k, _)| k)
}

/// Polygonal diffusive rescaling: value `X_k / (sigma sqrt(n))` at time `k / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    pub n: usize,
    pub sigma: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl RescaledPath {
    /// Linear interpolation between nodes; held constant after the last node.
    pub fn value_at(&self, t: f64) -> f64 {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[last] {
            return self.values[last];
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let frac = (t - t0) / (t1 - t0);
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

pub fn rescale(positions: &[i64], n: usize, sigma: f64) -> Result<RescaledPath> {
    if !(sigma > 0.0) || n == 0 {
        return Err(Error::Domain(format!("rescale needs sigma > 0 and n >= 1 (got {sigma}, {n})")));
    }
    let scale = sigma * (n as f64).sqrt();
    Ok(RescaledPath {
        n,
        sigma,
        times: (0..positions.len()).map(|k| k as f64 / n as f64).collect(),
        values: positions.iter().map(|&x| x as f64 / scale).collect(),
    })
}

/// Crossing time and stopped path for a walk run on the clock `n^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingFunctionals {
    /// First time the polygonal `Z^{n^2}` reaches `1/sigma`, i.e. `X` reaches `n`.
    pub t_n: f64,
    /// `Z^{n^2}` frozen at `1/sigma` from `t_n` on.
    pub stopped: RescaledPath,
}

pub fn crossing_functionals(positions: &[i64], n: usize, sigma: f64) -> Result<CrossingFunctionals> {
    let level = n as i64;
    let k = stopping_time(positions, &SiteSet::AtLeast(level), false).ok_or(Error::NeverReached { level })?;
    let clock = n * n;
    let mut stopped = rescale(&positions[..k], clock, sigma)?;
    let crossing_step = if k == 0 {
        0.0
    } else {
        let (a, b) = (positions[k - 1] as f64, positions[k] as f64);
        (k - 1) as f64 + (level as f64 - a) / (b - a)
    };
    let t_n = crossing_step / clock as f64;
    if k > 0 {
        stopped.times.push(t_n);
        stopped.values.push(1.0 / sigma);
    } else {
        stopped.times = vec![0.0];
        stopped.values = vec![1.0 / sigma];
    }
    Ok(CrossingFunctionals { t_n, stopped })
}
