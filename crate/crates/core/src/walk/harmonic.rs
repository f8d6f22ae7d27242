use std::io::{Read, Write};

use rand::Rng;

use crate::env::{Environment, Kernel};
use crate::error::{Error, Result};
use crate::linalg::{self, BandMatrix};
use crate::rng;
use crate::walk::dump;
use crate::walk::path::WalkPath;

/// Without a cap a corrupted table could make the sampler spin forever.
const MAX_CROSSING_STEPS: usize = 1 << 32;

/// `h(x) = P_x[hit [N, inf) before (-inf, 0]]` on the interior `0 < x < N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTable {
    level: i64,
    h: Vec<f64>,
    /// Start-at-0 probability of reaching `[N, inf)` before returning to `(-inf, 0]`.
    pub crossing_probability: f64,
    /// Plug-back residual `max |h - P h|` over the interior.
    pub residual: f64,
}

impl HarmonicTable {
    pub fn level(&self) -> i64 {
        self.level
    }

    /// `h` extended by 0 on `(-inf, 0]` and 1 on `[N, inf)`.
    #[inline]
    pub fn value(&self, x: i64) -> f64 {
        if x <= 0 {
            0.0
        } else if x >= self.level {
            1.0
        } else {
            self.h[(x - 1) as usize]
        }
    }

    pub fn interior(&self) -> &[f64] {
        &self.h
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut data = self.h.clone();
        data.push(self.crossing_probability);
        data.push(self.residual);
        dump::write_table(out, b"CWHM", &[self.level as u64], &data)
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let (dims, mut data) = dump::read_table(input, b"CWHM")?;
        let [level] = dims[..] else {
            return Err(Error::Format("harmonic table needs one dimension".into()));
        };
        if data.len() as u64 != level + 1 {
            return Err(Error::Format("harmonic table size mismatch".into()));
        }
        let residual = data.pop().unwrap();
        let crossing_probability = data.pop().unwrap();
        Ok(HarmonicTable { level: level as i64, h: data, crossing_probability, residual })
    }
}

pub fn harmonic_hit(env: &Environment, level: i64) -> Result<HarmonicTable> {
    harmonic_with(&env.kernel(), level)
}

pub fn harmonic_with(kernel: &Kernel, level: i64) -> Result<HarmonicTable> {
    if level < 2 {
        return Err(Error::InvalidParams(format!("crossing level must be at least 2, got {level}")));
    }
    let r = kernel.r_max();
    if !kernel.contains(0) || !kernel.contains(level - 1) {
        let (lo, hi) = kernel.range();
        return Err(Error::WindowTooSmall {
            x_min: lo - r as i64,
            x_max: hi + r as i64,
            needed: level + 2 * r as i64,
        });
    }
    let m = (level - 1) as usize;
    let mut a = BandMatrix::new(m, r.min(m - 1), r.min(m - 1));
    let mut b = vec![0.0; m];
    for x in 1..level {
        let i = (x - 1) as usize;
        a.add(i, i, 1.0);
        for (j, &p) in kernel.row(x).unwrap().iter().enumerate() {
            let y = x + kernel.offset(j);
            if y >= level {
                b[i] += p;
            } else if y > 0 {
                a.add(i, (y - 1) as usize, -p);
            }
        }
    }
    let h = linalg::solve(&a, &b)?;
    let mut table = HarmonicTable { level, h, crossing_probability: 0.0, residual: 0.0 };
    table.crossing_probability = averaged(kernel, &table, 0);
    table.residual = (1..level).map(|x| (table.value(x) - averaged(kernel, &table, x)).abs()).fold(0.0, f64::max);
    Ok(table)
}

fn averaged(kernel: &Kernel, table: &HarmonicTable, x: i64) -> f64 {
    kernel.row(x).unwrap().iter().enumerate().map(|(j, &p)| p * table.value(x + kernel.offset(j))).sum()
}

/// Exact sampler for the walk from 0 conditioned to reach `[N, inf)` before `(-inf, 0]`.
pub struct CrossingSampler<'a> {
    kernel: &'a Kernel,
    table: &'a HarmonicTable,
}

impl<'a> CrossingSampler<'a> {
    pub fn new(kernel: &'a Kernel, table: &'a HarmonicTable) -> Result<Self> {
        if !kernel.contains(0) || !kernel.contains(table.level - 1) {
            return Err(Error::OutOfWindow { x: table.level - 1, x_min: kernel.range().0, x_max: kernel.range().1 });
        }
        Ok(CrossingSampler { kernel, table })
    }

    /// `p(x,y) h(y)`, normalised (equal to `p(x,y) h(y) / h(x)` off the start site).
    pub fn step_law(&self, x: i64) -> Result<Vec<(i64, f64)>> {
        let row = self.kernel.row(x).ok_or(Error::OutOfWindow { x, x_min: self.kernel.range().0, x_max: self.kernel.range().1 })?;
        let mut law: Vec<(i64, f64)> = row
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let y = x + self.kernel.offset(j);
                (y, p * self.table.value(y))
            })
            .filter(|&(_, q)| q > 0.0)
            .collect();
        let total: f64 = law.iter().map(|&(_, q)| q).sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateTable { step: 0, x });
        }
        for e in &mut law {
            e.1 /= total;
        }
        Ok(law)
    }

    /// Path from 0 up to and including the first site in `[N, inf)`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec<i64>> {
        let level = self.table.level;
        let mut positions = vec![0i64];
        let mut x = 0i64;
        let mut weights = Vec::with_capacity(2 * self.kernel.r_max());
        while x < level {
            let step = positions.len() - 1;
            if step >= MAX_CROSSING_STEPS {
                return Err(Error::DegenerateTable { step, x });
            }
            let row = self.kernel.row(x).ok_or(Error::WindowExit { step, x })?;
            weights.clear();
            let mut total = 0.0;
            for (j, &p) in row.iter().enumerate() {
                let q = p * self.table.value(x + self.kernel.offset(j));
                total += q;
                weights.push(q);
            }
            if !(total > 0.0) {
                return Err(Error::DegenerateTable { step, x });
            }
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (j, &q) in weights.iter().enumerate() {
                if q > 0.0 {
                    acc += q;
                    pick = Some(j);
                    if u < acc {
                        break;
                    }
                }
            }
            x += self.kernel.offset(pick.expect("positive total"));
            positions.push(x);
        }
        Ok(positions)
    }
}

pub fn conditioned_sample_crossing(env: &Environment, table: &HarmonicTable, seed: u64) -> Result<WalkPath> {
    let kernel = env.kernel();
    let positions = CrossingSampler::new(&kernel, table)?.sample(&mut rng::stream(seed, 0))?;
    Ok(WalkPath::new(positions, env.env_id(), seed))
}
