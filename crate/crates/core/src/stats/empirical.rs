use std::io::Write;

use crate::error::{Error, Result};

/// Sorted sample with optional weights (uniform when absent).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
    /// Cumulative weights aligned with `samples`; last entry is 1.
    cumulative: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("sample contains NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let cumulative = (1..=samples.len()).map(|i| i as f64 / n).collect();
        Ok(EmpiricalDistribution { samples, cumulative })
    }

    pub fn weighted(samples: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.len() != weights.len() || weights.iter().any(|&w| !(w > 0.0)) || samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("weights must be positive and match the samples".into()));
        }
        let total: f64 = weights.iter().sum();
        let mut pairs: Vec<(f64, f64)> = samples.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(pairs.len());
        for &(_, w) in &pairs {
            acc += w / total;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(EmpiricalDistribution { samples: pairs.into_iter().map(|p| p.0).collect(), cumulative })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        self.samples
            .iter()
            .zip(&self.cumulative)
            .map(|(&x, &c)| {
                let w = c - prev;
                prev = c;
                w * x
            })
            .sum()
    }

    /// Fraction of mass at or below `x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        let k = self.samples.partition_point(|&s| s <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Fraction of mass strictly above `x`.
    pub fn tail(&self, x: f64) -> f64 {
        1.0 - self.ecdf(x)
    }

    /// `sup_x |F_emp(x) - F(x)|`, evaluated on both sides of every sample point.
    /// The left gap uses `F` just below the point, so step targets are handled.
    pub fn ks(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        let mut below = 0.0;
        let mut i = 0;
        while i < self.samples.len() {
            let x = self.samples[i];
            // ties: jump over every copy of x at once
            let mut j = i;
            while j + 1 < self.samples.len() && self.samples[j + 1] == x {
                j += 1;
            }
            let f = cdf(x);
            let f_left = cdf(x.next_down());
            worst = worst.max((f_left - below).abs()).max((self.cumulative[j] - f).abs());
            below = self.cumulative[j];
            i = j + 1;
        }
        worst
    }

    /// `(x, empirical, target)` at `points` evenly spaced quantile levels.
    pub fn plot_data(&self, cdf: impl Fn(f64) -> f64, points: usize) -> Vec<(f64, f64, f64)> {
        let n = self.samples.len();
        let points = points.clamp(2, n.max(2));
        (0..points)
            .map(|i| {
                let k = (i * (n - 1)) / (points - 1);
                let x = self.samples[k];
                (x, self.ecdf(x), cdf(x))
            })
            .collect()
    }
}

pub fn ecdf(dist: &EmpiricalDistribution, x: f64) -> f64 {
    dist.ecdf(x)
}

pub fn ks(dist: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    dist.ks(cdf)
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (xa, xb) = (a.samples(), b.samples());
    let mut worst: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        let fa = if i == 0 { 0.0 } else { a.cumulative[i - 1] };
        let fb = if j == 0 { 0.0 } else { b.cumulative[j - 1] };
        worst = worst.max((fa - fb).abs());
    }
    worst
}

pub fn write_plot_csv<W: Write>(mut out: W, rows: &[(f64, f64, f64)]) -> Result<()> {
    writeln!(out, "x,empirical,target")?;
    for (x, e, t) in rows {
        writeln!(out, "{x},{e},{t}")?;
    }
    Ok(())
}
