use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest grid step accepted by the meander sampler.
pub const MEANDER_MAX_DT: f64 = 1.0 / 1024.0;

/// Bisection depth when locating the last zero inside a grid cell.
const ZERO_REFINEMENT: u32 = 40;

const MAX_RHO_STEPS: u64 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Bm,
    Meander,
    Bessel3,
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathKind::Bm => "bm",
            PathKind::Meander => "meander",
            PathKind::Bessel3 => "bessel3",
        })
    }
}

/// Values on the uniform grid `k dt`, `k = 0..values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumPath {
    pub kind: PathKind,
    pub dt: f64,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl ContinuumPath {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Linear interpolation; clamped to the end values outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let pos = t / self.dt;
        if pos <= 0.0 {
            return self.values[0];
        }
        let k = pos.floor() as usize;
        if k + 1 >= self.values.len() {
            return self.last();
        }
        let frac = pos - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }

    /// Maximum over grid points with time at most `t`.
    pub fn sup_until(&self, t: f64) -> f64 {
        let k = ((t / self.dt + 1e-9).floor() as usize).min(self.values.len() - 1);
        self.values[..=k].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header = serde_json::json!({ "kind": self.kind, "dt": self.dt, "seed": self.seed });
        writeln!(out, "# {header}")?;
        writeln!(out, "t,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.time(k), v)?;
        }
        Ok(())
    }
}

fn grid(dt: f64, horizon: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Error::Domain(format!("need dt > 0 and horizon > 0 (got {dt}, {horizon})")));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    Ok((steps, horizon / steps as f64))
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn bm_values<R: Rng>(steps: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let sd = dt.sqrt();
    let mut w = Vec::with_capacity(steps + 1);
    let mut x = 0.0;
    w.push(x);
    for _ in 0..steps {
        x += sd * normal(rng);
        w.push(x);
    }
    w
}

/// Standard Brownian motion on `[0, horizon]`; `dt` is rounded so the grid ends at `horizon`.
pub fn sample_bm(dt: f64, horizon: f64, seed: u64) -> Result<ContinuumPath> {
    let (steps, dt) = grid(dt, horizon)?;
    let values = bm_values(steps, dt, &mut rng::stream(seed, 0));
    Ok(ContinuumPath { kind: PathKind::Bm, dt, values, seed })
}

/// Radial part of a 3-dimensional Brownian motion on `[0, horizon]`.
pub fn sample_bessel3(dt: f64, horizon: f64, seed: u64) -> Result<ContinuumPath> {
    let (steps, dt) = grid(dt, horizon)?;
    let mut rng = rng::stream(seed, 0);
    let sd = dt.sqrt();
    let mut w = [0.0f64; 3];
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    for _ in 0..steps {
        for c in &mut w {
            *c += sd * normal(&mut rng);
        }
        values.push((w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt());
    }
    Ok(ContinuumPath { kind: PathKind::Bessel3, dt, values, seed })
}

/// Probability that a Brownian bridge from `a` to `b` over time `h` hits 0.
fn bridge_hits_zero(a: f64, b: f64, h: f64) -> f64 {
    if a * b <= 0.0 {
        1.0
    } else {
        (-2.0 * a * b / h).exp()
    }
}

/// A meander sample and the bookkeeping of its construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanderSample {
    pub path: ContinuumPath,
    /// Last zero of the underlying Brownian motion before time 1.
    pub tau1: f64,
    /// Brownian paths discarded because the last zero fell within `dt` of 1.
    pub resamples: u32,
}

/// Brownian meander on `[0, 1]` by the last-zero construction
/// `W^+(s) = Delta^{-1/2} |W(tau + s Delta)|`, `tau` the last zero of `W` before 1.
pub fn sample_meander(dt: f64, seed: u64) -> Result<MeanderSample> {
    if !(dt > 0.0 && dt <= MEANDER_MAX_DT) {
        return Err(Error::Domain(format!("meander grid step must lie in (0, 2^-10], got {dt}")));
    }
    sample_meander_with(dt, &mut rng::stream(seed, 0), seed)
}

pub(crate) fn sample_meander_with<R: Rng>(dt: f64, rng: &mut R, seed: u64) -> Result<MeanderSample> {
    let (steps, dt) = grid(dt, 1.0)?;
    let mut resamples = 0;
    loop {
        let w = bm_values(steps, dt, rng);
        let Some(cell) = last_zero_cell(&w, dt, rng) else {
            // W has no zero on (0, 1] at all: impossible for BM started at 0, kept for safety
            resamples += 1;
            continue;
        };
        let (tau, mut known) = refine_zero(cell, &w, dt, rng);
        let delta = 1.0 - tau;
        if delta < dt {
            resamples += 1;
            continue;
        }
        // known: points strictly after tau with the sign of W(1)
        let sign = w[steps].signum();
        for k in cell + 1..steps {
            known.push((k as f64 * dt, w[k]));
        }
        known.push((1.0, w[steps]));
        known.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values = regrid(tau, delta, sign, &known, steps, rng);
        return Ok(MeanderSample { path: ContinuumPath { kind: PathKind::Meander, dt, values, seed }, tau1: tau, resamples });
    }
}

/// Index `k` of the grid cell `[k dt, (k+1) dt]` holding the last zero.
fn last_zero_cell<R: Rng>(w: &[f64], dt: f64, rng: &mut R) -> Option<usize> {
    // cell 0 starts at the zero W(0) = 0, so the scan always ends there at the latest
    (0..w.len() - 1).rev().find(|&k| {
        let p = bridge_hits_zero(w[k], w[k + 1], dt);
        p >= 1.0 || rng.random::<f64>() < p
    })
}

/// Locate the last zero in a cell by bisection with exact bridge midpoints,
/// conditioned on the cell containing a zero. Returns the zero and the
/// sampled points to its right.
fn refine_zero<R: Rng>(cell: usize, w: &[f64], dt: f64, rng: &mut R) -> (f64, Vec<(f64, f64)>) {
    let (mut t0, mut t1) = (cell as f64 * dt, (cell + 1) as f64 * dt);
    let (mut a, mut b) = (w[cell], w[cell + 1]);
    let mut right = Vec::new();
    for _ in 0..ZERO_REFINEMENT {
        let h = t1 - t0;
        let tm = 0.5 * (t0 + t1);
        let (m, p_left, p_right) = loop {
            let m = 0.5 * (a + b) + 0.5 * h.sqrt() * normal(rng);
            let p_left = bridge_hits_zero(a, m, 0.5 * h);
            let p_right = bridge_hits_zero(m, b, 0.5 * h);
            let p_union = 1.0 - (1.0 - p_left) * (1.0 - p_right);
            if p_union >= 1.0 || rng.random::<f64>() < p_union {
                break (m, p_left, p_right);
            }
        };
        let p_union = 1.0 - (1.0 - p_left) * (1.0 - p_right);
        // given a zero somewhere, the last one is in the right half with probability p_right / p_union
        if rng.random::<f64>() * p_union < p_right {
            t0 = tm;
            a = m;
        } else {
            right.push((t1, b));
            t1 = tm;
            b = m;
        }
    }
    // the zero is pinned to within 2^-40 dt; report the interpolated crossing
    let tau = if a * b < 0.0 { t0 + (t1 - t0) * a / (a - b) } else { 0.5 * (t0 + t1) };
    right.push((t1, b));
    right.retain(|&(t, _)| t > tau);
    (tau, right)
}

/// Sample `W` at `tau + k Delta / steps` by sequential bridge interpolation
/// between known points, keeping the sign fixed, then rescale.
fn regrid<R: Rng>(tau: f64, delta: f64, sign: f64, known: &[(f64, f64)], steps: usize, rng: &mut R) -> Vec<f64> {
    let scale = delta.sqrt().recip();
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    let (mut tl, mut vl) = (tau, 0.0);
    let mut j = 0;
    for k in 1..=steps {
        let t = if k == steps { 1.0 } else { tau + delta * k as f64 / steps as f64 };
        while j < known.len() && known[j].0 < t {
            tl = known[j].0;
            vl = known[j].1;
            j += 1;
        }
        let v = if j < known.len() && known[j].0 == t {
            known[j].1
        } else if j < known.len() {
            let (tr, vr) = known[j];
            let frac = (t - tl) / (tr - tl);
            let mean = vl + frac * (vr - vl);
            let sd = ((t - tl) * (tr - t) / (tr - tl)).sqrt();
            let mut v = mean + sd * normal(rng);
            let mut tries = 0;
            while v * sign <= 0.0 && tries < 1000 {
                v = mean + sd * normal(rng);
                tries += 1;
            }
            v
        } else {
            vl
        };
        values.push((v * scale).abs());
        tl = t;
        vl = v;
    }
    values
}

/// `W^+_t(s) = sqrt(t) W^+(s / t)` on `[0, t]`.
pub fn meander_scaled(path: &ContinuumPath, t: f64) -> Result<ContinuumPath> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("meander_scaled needs t > 0, got {t}")));
    }
    let s = t.sqrt();
    Ok(ContinuumPath {
        kind: path.kind,
        dt: path.dt * t,
        values: path.values.iter().map(|v| s * v).collect(),
        seed: path.seed,
    })
}

/// First passage of a 3-dimensional Bessel process at level `1/sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rho1Sample {
    pub rho: f64,
    pub steps: u64,
    /// Stopped path `B_3(. ^ rho)` on the grid, when requested.
    pub path: Option<ContinuumPath>,
}

/// Exact radial step: `|x + sqrt(dt) Z|` for a 3-vector `x` of length `r`.
#[inline]
fn radial_step<R: Rng>(r: f64, sd: f64, rng: &mut R) -> f64 {
    let along = r + sd * normal(rng);
    let e: f64 = Exp1.sample(rng);
    (along * along + 2.0 * sd * sd * e).sqrt()
}

pub fn sample_rho1(dt: f64, sigma: f64, seed: u64, keep_path: bool) -> Result<Rho1Sample> {
    sample_rho1_with(dt, sigma, &mut rng::stream(seed, 0), seed, keep_path)
}

/// The first grid crossing is refined linearly; excursions above the level
/// between grid points are not detected.
pub(crate) fn sample_rho1_with<R: Rng>(dt: f64, sigma: f64, rng: &mut R, seed: u64, keep_path: bool) -> Result<Rho1Sample> {
    if !(dt > 0.0 && sigma > 0.0) {
        return Err(Error::Domain(format!("sample_rho1 needs dt > 0 and sigma > 0 (got {dt}, {sigma})")));
    }
    let level = sigma.recip();
    let sd = dt.sqrt();
    let mut r = 0.0;
    let mut steps = 0u64;
    let mut values = keep_path.then(|| vec![0.0]);
    loop {
        let next = radial_step(r, sd, rng);
        steps += 1;
        if next >= level {
            let rho = dt * ((steps - 1) as f64 + (level - r) / (next - r));
            if let Some(v) = values.as_mut() {
                v.push(level);
            }
            let path = values.map(|values| ContinuumPath { kind: PathKind::Bessel3, dt, values, seed });
            return Ok(Rho1Sample { rho, steps, path });
        }
        if steps >= MAX_RHO_STEPS {
            return Err(Error::Domain(format!("no crossing of level {level} within {steps} steps")));
        }
        if let Some(v) = values.as_mut() {
            v.push(next);
        }
        r = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::density::{chi3_cdf, rayleigh_cdf};

    fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter().enumerate().map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        }).fold(0.0, f64::max)
    }

    #[test]
    fn bm_moments() {
        let m = 4000;
        let (mut s1, mut s11, mut s_half) = (0.0, 0.0, 0.0);
        for seed in 0..m {
            let p = sample_bm(1.0 / 64.0, 1.0, seed).unwrap();
            assert_eq!(p.values[0], 0.0);
            let (h, one) = (p.value_at(0.5), p.last());
            s1 += one;
            s11 += one * one;
            s_half += h * one;
        }
        let m = m as f64;
        let var = s11 / m - (s1 / m).powi(2);
        assert!((var - 1.0).abs() < 3.0 * (2.0 / m).sqrt());
        assert!((s_half / m - 0.5).abs() < 3.0 * (1.25f64 / m).sqrt());
    }

    #[test]
    fn bessel_endpoint_is_chi3() {
        let xs: Vec<f64> = (0..4000).map(|s| sample_bessel3(0.25, 1.0, s).unwrap().last()).collect();
        assert!(ks(xs.clone(), chi3_cdf) < 0.03);
        let second: f64 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((second - 3.0).abs() < 3.0 * (6.0f64 / 4000.0).sqrt());
    }

    #[test]
    fn meander_endpoint_is_rayleigh() {
        let mut ends = Vec::new();
        for seed in 0..3000 {
            let s = sample_meander(MEANDER_MAX_DT, seed).unwrap();
            let p = &s.path;
            assert_eq!(p.values[0], 0.0);
            assert!(p.values[1..].iter().all(|&v| v > 0.0));
            assert_eq!(p.values.len(), 1025);
            ends.push(p.last());
        }
        assert!(ks(ends, rayleigh_cdf) < 0.035);
    }

    #[test]
    fn scaling_identities() {
        let s = sample_meander(MEANDER_MAX_DT, 5).unwrap().path;
        assert_eq!(meander_scaled(&s, 1.0).unwrap(), s);
        let t = 0.3;
        let z = meander_scaled(&s, t).unwrap();
        assert!((z.last() - t.sqrt() * s.last()).abs() < 1e-15);
        assert!((z.sup_until(t) - t.sqrt() * s.sup_until(1.0)).abs() < 1e-15);
        assert!((z.horizon() - t).abs() < 1e-15);
    }

    #[test]
    fn rho1_is_positive_and_reproducible() {
        let a = sample_rho1(1e-4, 1.0, 3, true).unwrap();
        assert!(a.rho > 0.0);
        assert_eq!(a, sample_rho1(1e-4, 1.0, 3, true).unwrap());
        let path = a.path.unwrap();
        assert_eq!(path.last(), 1.0);
        assert!(path.values[..path.values.len() - 1].iter().all(|&v| v < 1.0));
    }
}
