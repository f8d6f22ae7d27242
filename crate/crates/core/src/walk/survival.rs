use std::io::{Read, Write};

use rand::Rng;

use crate::env::{Environment, Kernel};
use crate::error::{Error, Result};
use crate::rng;
use crate::walk::dump;
use crate::walk::path::WalkPath;

/// Target width of the truncation bracket for the automatic window.
pub const BRACKET_TOL: f64 = 1e-10;

const MAX_DOUBLINGS: usize = 6;

/// `h[k][x]`: probability that from `x` after `k` steps the remaining `n - k`
/// steps stay in `(0, W]`. Sites above `W` count as killed, so every entry is
/// a lower bound for the untruncated survival probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTable {
    n: usize,
    w: usize,
    h: Vec<f64>,
}

impl SurvivalTable {
    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> usize {
        self.w
    }

    /// `h[k][x]`, zero for `x` outside `[1, W]`.
    #[inline]
    pub fn get(&self, k: usize, x: i64) -> f64 {
        if x < 1 || x > self.w as i64 {
            return 0.0;
        }
        self.h[k * self.w + (x - 1) as usize]
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        dump::write_table(out, b"CWSV", &[self.n as u64, self.w as u64], &self.h)
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let (dims, h) = dump::read_table(input, b"CWSV")?;
        let [n, w] = dims[..] else {
            return Err(Error::Format("survival table needs two dimensions".into()));
        };
        if h.len() as u64 != (n + 1) * w {
            return Err(Error::Format("survival table size mismatch".into()));
        }
        Ok(SurvivalTable { n: n as usize, w: w as usize, h })
    }
}

/// Survival probability with its truncation bracket.
#[derive(Debug, Clone)]
pub struct Survival {
    /// Sites above `W` absorbing-to-0.
    pub lower: f64,
    /// Sites above `W` absorbing-to-1.
    pub upper: f64,
    pub table: SurvivalTable,
}

impl Survival {
    pub fn value(&self) -> f64 {
        self.lower
    }

    pub fn bracket(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Default truncation window `ceil(8 sqrt(n ln(n+1)))`.
pub fn default_window(n: usize) -> usize {
    let n = n as f64;
    ((8.0 * (n * (n + 1.0).ln()).sqrt()).ceil() as usize).max(1)
}

fn check_cover(kernel: &Kernel, w: usize) -> Result<()> {
    let (lo, hi) = kernel.range();
    let r = kernel.r_max() as i64;
    if !kernel.contains(0) || !kernel.contains(w as i64) {
        return Err(Error::WindowTooSmall { x_min: lo - r, x_max: hi + r, needed: w as i64 + 2 * r + 1 });
    }
    Ok(())
}

/// `P[X_k > 0, k = 1..n]` by backward recursion on `[1, W]`.
pub fn survival_probability(env: &Environment, n: usize, w: usize) -> Result<Survival> {
    survival_with(&env.kernel(), n, w)
}

pub fn survival_with(kernel: &Kernel, n: usize, w: usize) -> Result<Survival> {
    if w == 0 {
        return Err(Error::InvalidParams("survival window must be at least 1".into()));
    }
    check_cover(kernel, w)?;
    let mut h = vec![0.0; (n + 1) * w];
    h[n * w..].fill(1.0);
    // rolling absorbing-to-1 levels; only level 1 is kept
    let mut up_next = vec![1.0; w];
    let mut up_cur = vec![0.0; w];
    let mut upper1 = if n == 1 { up_next.clone() } else { Vec::new() };
    let wi = w as i64;
    for k in (0..n).rev() {
        let (head, tail) = h.split_at_mut((k + 1) * w);
        let next = &tail[..w];
        let cur = &mut head[k * w..];
        for x in 1..=wi {
            let row = kernel.row(x).unwrap();
            let (mut lo, mut hi) = (0.0, 0.0);
            for (j, &p) in row.iter().enumerate() {
                let y = x + kernel.offset(j);
                if y >= 1 && y <= wi {
                    lo += p * next[(y - 1) as usize];
                    hi += p * up_next[(y - 1) as usize];
                } else if y > wi {
                    hi += p;
                }
            }
            // row sums can exceed 1 by an ulp
            cur[(x - 1) as usize] = lo.min(1.0);
            up_cur[(x - 1) as usize] = hi.min(1.0);
        }
        std::mem::swap(&mut up_next, &mut up_cur);
        if k == 1 {
            upper1 = up_next.clone();
        }
    }
    if n == 0 {
        return Ok(Survival { lower: 1.0, upper: 1.0, table: SurvivalTable { n, w, h } });
    }
    let row = kernel.row(0).unwrap();
    let (mut lower, mut upper) = (0.0, 0.0);
    for (j, &p) in row.iter().enumerate() {
        let y = kernel.offset(j);
        if y >= 1 && y <= wi {
            lower += p * h[w + (y - 1) as usize];
            upper += p * upper1[(y - 1) as usize];
        } else if y > wi {
            upper += p;
        }
    }
    Ok(Survival { lower, upper, table: SurvivalTable { n, w, h } })
}

/// Start from the default window and double until the bracket is below [`BRACKET_TOL`].
pub fn survival_auto(env: &Environment, n: usize) -> Result<Survival> {
    let kernel = env.kernel();
    let mut w = default_window(n);
    for _ in 0..=MAX_DOUBLINGS {
        let s = survival_with(&kernel, n, w)?;
        if s.bracket() < BRACKET_TOL {
            return Ok(s);
        }
        w *= 2;
    }
    Err(Error::Domain(format!("survival bracket still above {BRACKET_TOL:e} at W = {}", w / 2)))
}

/// Exact sampler for the walk conditioned to stay positive for `n` steps.
pub struct MeanderSampler<'a> {
    kernel: &'a Kernel,
    table: &'a SurvivalTable,
}

impl<'a> MeanderSampler<'a> {
    pub fn new(kernel: &'a Kernel, table: &'a SurvivalTable) -> Result<Self> {
        check_cover(kernel, table.w)?;
        Ok(MeanderSampler { kernel, table })
    }

    /// Conditioned step law from `x` after `k` steps: `p(x,y) h[k+1][y]`, normalised.
    pub fn step_law(&self, k: usize, x: i64) -> Result<Vec<(i64, f64)>> {
        let row = self.kernel.row(x).ok_or(Error::WindowExit { step: k, x })?;
        let mut law: Vec<(i64, f64)> = row
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let y = x + self.kernel.offset(j);
                (y, p * self.table.get(k + 1, y))
            })
            .filter(|&(_, q)| q > 0.0)
            .collect();
        let total: f64 = law.iter().map(|&(_, q)| q).sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateTable { step: k, x });
        }
        for e in &mut law {
            e.1 /= total;
        }
        Ok(law)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec<i64>> {
        let n = self.table.n;
        let mut positions = Vec::with_capacity(n + 1);
        let mut x = 0i64;
        positions.push(x);
        let mut weights = Vec::with_capacity(2 * self.kernel.r_max());
        for k in 0..n {
            let row = self.kernel.row(x).ok_or(Error::WindowExit { step: k, x })?;
            weights.clear();
            let mut total = 0.0;
            for (j, &p) in row.iter().enumerate() {
                let q = p * self.table.get(k + 1, x + self.kernel.offset(j));
                total += q;
                weights.push(q);
            }
            if !(total > 0.0) {
                return Err(Error::DegenerateTable { step: k, x });
            }
            let u: f64 = rng.random::<f64>() * total;
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

    /// Probability the conditioned law assigns to `path` (product of step laws).
    pub fn path_probability(&self, path: &[i64]) -> Result<f64> {
        let mut prob = 1.0;
        for (k, w) in path.windows(2).enumerate() {
            let law = self.step_law(k, w[0])?;
            prob *= law.iter().find(|&&(y, _)| y == w[1]).map_or(0.0, |&(_, q)| q);
        }
        Ok(prob)
    }
}

/// One conditioned meander path of `table.horizon()` steps.
pub fn conditioned_sample_meander(env: &Environment, table: &SurvivalTable, seed: u64) -> Result<WalkPath> {
    let kernel = env.kernel();
    let positions = MeanderSampler::new(&kernel, table)?.sample(&mut rng::stream(seed, 0))?;
    Ok(WalkPath::new(positions, env.env_id(), seed))
}
