//! Random conductance environments.
//!
//! An environment is a symmetric, banded field of conductances on a finite
//! window of the integer lattice. Each undirected edge `{x, x+d}` with
//! `1 <= d <= r_max` is stored once, in the row of its left endpoint.
//! Draws are keyed on `(seed, x, d)`, so growing the window never changes a
//! weight that was already generated.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;

/// Probability that the modulating two-state chain keeps its state between
/// neighbouring sites.
pub const MODULATION_STAY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    IidUniform,
    MarkovModulated,
    DeterministicSrw,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GeneratorKind::IidUniform => "iid_uniform",
            GeneratorKind::MarkovModulated => "markov_modulated",
            GeneratorKind::DeterministicSrw => "deterministic_srw",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    /// Lower bound on every nearest-neighbour conductance.
    pub kappa: f64,
    /// Tail constant: `w(x, x+d) <= k_bound / (1 + d^(3+beta))`.
    #[serde(rename = "K_bound")]
    pub k_bound: f64,
    pub beta: f64,
    #[serde(rename = "R_max")]
    pub r_max: usize,
    pub x_min: i64,
    pub x_max: i64,
    pub generator_kind: GeneratorKind,
    pub seed: u64,
}

impl EnvironmentParams {
    /// Fair nearest-neighbour walk on `[x_min, x_max]`.
    pub fn srw(x_min: i64, x_max: i64) -> Self {
        EnvironmentParams {
            kappa: 1.0,
            k_bound: 2.0,
            beta: 1.0,
            r_max: 1,
            x_min,
            x_max,
            generator_kind: GeneratorKind::DeterministicSrw,
            seed: 0,
        }
    }

    pub fn iid(kappa: f64, k_bound: f64, beta: f64, r_max: usize, window: (i64, i64), seed: u64) -> Self {
        EnvironmentParams {
            kappa,
            k_bound,
            beta,
            r_max,
            x_min: window.0,
            x_max: window.1,
            generator_kind: GeneratorKind::IidUniform,
            seed,
        }
    }

    pub fn markov(kappa: f64, k_bound: f64, beta: f64, r_max: usize, window: (i64, i64), seed: u64) -> Self {
        EnvironmentParams {
            generator_kind: GeneratorKind::MarkovModulated,
            ..Self::iid(kappa, k_bound, beta, r_max, window, seed)
        }
    }

    /// Upper bound on a conductance at jump distance `d`.
    pub fn tail_cap(&self, d: usize) -> f64 {
        self.k_bound / (1.0 + (d as f64).powf(3.0 + self.beta))
    }

    /// Ellipticity constant: `min(kappa, 1 / (2 * sum_{d <= r_max} cap(d)))`.
    ///
    /// Every total conductance `C_x` lies in `[kappa_hat, 1/kappa_hat]`.
    pub fn kappa_hat(&self) -> f64 {
        let tail: f64 = (1..=self.r_max).map(|d| self.tail_cap(d)).sum();
        self.kappa.min(1.0 / (2.0 * tail))
    }

    pub fn check(&self) -> Result<()> {
        let finite = [self.kappa, self.k_bound, self.beta].iter().all(|v| v.is_finite());
        if !finite || self.kappa <= 0.0 || self.k_bound <= 0.0 || self.beta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "kappa, K_bound and beta must be positive and finite (got {}, {}, {})",
                self.kappa, self.k_bound, self.beta
            )));
        }
        if self.r_max == 0 {
            return Err(Error::InvalidParams("R_max must be at least 1".into()));
        }
        if self.kappa > self.tail_cap(1) {
            return Err(Error::InvalidParams(format!(
                "kappa = {} exceeds the distance-1 cap K_bound/2 = {}",
                self.kappa,
                self.tail_cap(1)
            )));
        }
        let needed = 2 * self.r_max as i64;
        if self.x_max - self.x_min < needed {
            return Err(Error::WindowTooSmall { x_min: self.x_min, x_max: self.x_max, needed });
        }
        Ok(())
    }
}

/// Transition probabilities out of one site.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub site: i64,
    pub targets: Vec<(i64, f64)>,
    pub total_conductance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// Nearest-neighbour ellipticity.
    E,
    /// Polynomial jump tail.
    K,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub x: i64,
    pub d: usize,
    pub condition: Condition,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub kappa_hat: f64,
    pub violations: Vec<Violation>,
    /// Range of `C_x` over sites whose full neighbourhood is stored.
    pub c_min: f64,
    pub c_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    params: EnvironmentParams,
    /// Translation applied since generation: weight at `(x, d)` was drawn at `(x + shift, d)`.
    shift: i64,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(flatten)]
    params: EnvironmentParams,
    format_version: u32,
    #[serde(default)]
    shift: i64,
}

#[derive(Serialize, Deserialize)]
struct EnvironmentFile {
    header: Header,
    rows: Vec<Vec<f64>>,
}

impl Environment {
    pub fn generate(params: EnvironmentParams) -> Result<Self> {
        params.check()?;
        let r = params.r_max;
        let len = (params.x_max - params.x_min + 1) as usize;
        let mut weights = vec![0.0; len * r];

        match params.generator_kind {
            GeneratorKind::DeterministicSrw => {
                for i in 0..len {
                    weights[i * r] = 1.0;
                }
            }
            GeneratorKind::IidUniform | GeneratorKind::MarkovModulated => {
                let factors = match params.generator_kind {
                    GeneratorKind::MarkovModulated => modulation(&params),
                    _ => vec![1.0; len],
                };
                for (i, x) in (params.x_min..=params.x_max).enumerate() {
                    let mut stream = rng::stream(params.seed, rng::site_key(x));
                    for d in 1..=r {
                        let lo = if d == 1 { params.kappa } else { 0.0 };
                        let hi = params.tail_cap(d);
                        let u: f64 = stream.random();
                        let mut w = factors[i] * (lo + (hi - lo) * u);
                        if d == 1 {
                            w = w.max(params.kappa);
                        }
                        weights[i * r + d - 1] = w;
                    }
                }
            }
        }
        Ok(Environment { params, shift: 0, weights })
    }

    /// Build an environment from explicit rows `rows[x - x_min][d - 1] = w(x, x+d)`.
    pub fn from_rows(params: EnvironmentParams, rows: &[Vec<f64>]) -> Result<Self> {
        let len = (params.x_max - params.x_min + 1) as usize;
        if params.r_max == 0 || rows.len() != len || rows.iter().any(|row| row.len() != params.r_max) {
            return Err(Error::Format(format!(
                "expected {} rows of {} weights",
                len, params.r_max
            )));
        }
        if rows.iter().flatten().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Format("conductances must be finite and nonnegative".into()));
        }
        let weights = rows.iter().flatten().copied().collect();
        Ok(Environment { params, shift: 0, weights })
    }

    pub fn params(&self) -> &EnvironmentParams {
        &self.params
    }

    pub fn x_min(&self) -> i64 {
        self.params.x_min
    }

    pub fn x_max(&self) -> i64 {
        self.params.x_max
    }

    pub fn r_max(&self) -> usize {
        self.params.r_max
    }

    pub fn kind(&self) -> GeneratorKind {
        self.params.generator_kind
    }

    pub fn shift_offset(&self) -> i64 {
        self.shift
    }

    /// Stored weight `w(x, x+d)`, or `None` when the row is outside the window.
    pub fn weight(&self, x: i64, d: usize) -> Option<f64> {
        if d == 0 || d > self.params.r_max || x < self.params.x_min || x > self.params.x_max {
            return None;
        }
        let i = (x - self.params.x_min) as usize;
        Some(self.weights[i * self.params.r_max + d - 1])
    }

    /// Overwrite a stored weight. Used to build hand-made environments.
    pub fn set_weight(&mut self, x: i64, d: usize, w: f64) -> Result<()> {
        if d == 0 || d > self.params.r_max || x < self.params.x_min || x > self.params.x_max {
            return Err(self.out_of_window(x));
        }
        let i = (x - self.params.x_min) as usize;
        self.weights[i * self.params.r_max + d - 1] = w;
        Ok(())
    }

    /// Conductance between two sites; zero beyond the jump range.
    pub fn conductance(&self, x: i64, y: i64) -> Result<f64> {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        if a < self.params.x_min || b > self.params.x_max {
            return Err(self.out_of_window(if a < self.params.x_min { a } else { b }));
        }
        let d = (b - a) as usize;
        if d == 0 || d > self.params.r_max {
            return Ok(0.0);
        }
        Ok(self.weight(a, d).unwrap_or(0.0))
    }

    /// Whether the full jump neighbourhood of `x` is stored.
    pub fn covers(&self, x: i64) -> bool {
        let r = self.params.r_max as i64;
        x - r >= self.params.x_min && x + r <= self.params.x_max
    }

    pub fn total_conductance(&self, x: i64) -> Result<f64> {
        if !self.covers(x) {
            return Err(self.out_of_window(x));
        }
        let r = self.params.r_max;
        let mut c = 0.0;
        for d in 1..=r {
            c += self.weight(x, d).unwrap_or(0.0);
            c += self.weight(x - d as i64, d).unwrap_or(0.0);
        }
        Ok(c)
    }

    pub fn transition_row(&self, x: i64) -> Result<TransitionRow> {
        let c = self.total_conductance(x)?;
        let r = self.params.r_max as i64;
        let targets = (-r..=r)
            .filter(|&d| d != 0)
            .map(|d| {
                let y = x + d;
                let w = self.conductance(x, y).unwrap_or(0.0);
                (y, w / c)
            })
            .collect();
        Ok(TransitionRow { site: x, targets, total_conductance: c })
    }

    pub fn validate(&self) -> ValidationReport {
        let p = &self.params;
        let mut violations = Vec::new();
        for x in p.x_min..=p.x_max {
            for d in 1..=p.r_max {
                let w = self.weight(x, d).unwrap_or(0.0);
                if d == 1 && w < p.kappa {
                    violations.push(Violation { x, d, condition: Condition::E, value: w, bound: p.kappa });
                }
                let cap = p.tail_cap(d);
                if w > cap {
                    violations.push(Violation { x, d, condition: Condition::K, value: w, bound: cap });
                }
            }
        }
        let (mut c_min, mut c_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let r = p.r_max as i64;
        for x in (p.x_min + r)..=(p.x_max - r) {
            if let Ok(c) = self.total_conductance(x) {
                c_min = c_min.min(c);
                c_max = c_max.max(c);
            }
        }
        ValidationReport { pass: violations.is_empty(), kappa_hat: p.kappa_hat(), violations, c_min, c_max }
    }

    /// Translate the environment: the result's weight at `(x, d)` is this one's at `(x + z, d)`.
    pub fn shift(&self, z: i64) -> Result<Environment> {
        let x_min = self.params.x_min.checked_sub(z);
        let x_max = self.params.x_max.checked_sub(z);
        let total = self.shift.checked_add(z);
        match (x_min, x_max, total) {
            (Some(x_min), Some(x_max), Some(total)) => Ok(Environment {
                params: EnvironmentParams { x_min, x_max, ..self.params.clone() },
                shift: total,
                weights: self.weights.clone(),
            }),
            _ => Err(Error::OutOfWindow { x: z, x_min: self.params.x_min, x_max: self.params.x_max }),
        }
    }

    /// Short content digest identifying this environment.
    pub fn env_id(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.params).unwrap_or_default());
        hasher.update(self.shift.to_le_bytes());
        for w in &self.weights {
            hasher.update(w.to_bits().to_le_bytes());
        }
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Precomputed transition probabilities for every fully covered site.
    pub fn kernel(&self) -> Kernel {
        Kernel::new(self)
    }

    pub fn to_json(&self) -> Result<String> {
        let r = self.params.r_max;
        let file = EnvironmentFile {
            header: Header { params: self.params.clone(), format_version: FORMAT_VERSION, shift: self.shift },
            rows: self.weights.chunks(r).map(|c| c.to_vec()).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: EnvironmentFile = serde_json::from_str(text)?;
        if file.header.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported environment format version {}",
                file.header.format_version
            )));
        }
        let mut env = Environment::from_rows(file.header.params, &file.rows)?;
        env.shift = file.header.shift;
        Ok(env)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)?.read_to_string(&mut text)?;
        Environment::from_json(&text)
    }

    fn out_of_window(&self, x: i64) -> Error {
        Error::OutOfWindow { x, x_min: self.params.x_min, x_max: self.params.x_max }
    }
}

/// Modulation factors in {1/2, 1} from a stationary two-state chain anchored
/// at site 0, so that every site's state is independent of the window.
fn modulation(params: &EnvironmentParams) -> Vec<f64> {
    let seed = rng::derive_seed(params.seed, 1);
    let draw = |x: i64| -> f64 { rng::stream(seed, rng::site_key(x)).random() };
    let lo = params.x_min.min(0);
    let hi = params.x_max.max(0);
    let mut state = vec![false; (hi - lo + 1) as usize];
    let at = |x: i64| (x - lo) as usize;
    state[at(0)] = draw(0) < 0.5;
    for x in 1..=hi {
        let prev = state[at(x - 1)];
        state[at(x)] = if draw(x) < MODULATION_STAY { prev } else { !prev };
    }
    // the chain is reversible, so running it leftwards from 0 is also stationary
    for x in (lo..0).rev() {
        let next = state[at(x + 1)];
        state[at(x)] = if draw(x) < MODULATION_STAY { next } else { !next };
    }
    (params.x_min..=params.x_max).map(|x| if state[at(x)] { 1.0 } else { 0.5 }).collect()
}

/// Transition probabilities of the walk, tabulated over the covered sites.
///
/// Row `x` lists `p(x, x+d)` for `d` in `-r..=-1` then `1..=r`.
#[derive(Debug, Clone)]
pub struct Kernel {
    lo: i64,
    hi: i64,
    r: usize,
    probs: Vec<f64>,
}

impl Kernel {
    fn new(env: &Environment) -> Self {
        let r = env.r_max();
        let lo = env.x_min() + r as i64;
        let hi = env.x_max() - r as i64;
        let mut probs = Vec::with_capacity(((hi - lo + 1).max(0) as usize) * 2 * r);
        for x in lo..=hi {
            let row = env.transition_row(x).expect("covered site");
            probs.extend(row.targets.iter().map(|&(_, p)| p));
        }
        Kernel { lo, hi, r, probs }
    }

    pub fn r_max(&self) -> usize {
        self.r
    }

    /// Range of sites with a stored row.
    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Jump offset for slot `j` of a row.
    #[inline]
    pub fn offset(&self, j: usize) -> i64 {
        let r = self.r as i64;
        let j = j as i64;
        if j < r {
            j - r
        } else {
            j - r + 1
        }
    }

    #[inline]
    pub fn row(&self, x: i64) -> Option<&[f64]> {
        if !self.contains(x) {
            return None;
        }
        let w = 2 * self.r;
        let i = (x - self.lo) as usize * w;
        Some(&self.probs[i..i + w])
    }

    /// `p(x, y)`; zero outside the jump range.
    pub fn prob(&self, x: i64, y: i64) -> Option<f64> {
        let row = self.row(x)?;
        let d = y - x;
        let r = self.r as i64;
        if d == 0 || d.abs() > r {
            return Some(0.0);
        }
        let j = if d < 0 { d + r } else { d + r - 1 };
        Some(row[j as usize])
    }

    /// One unconditioned step from `x` using a uniform draw `u` in `[0, 1)`.
    #[inline]
    pub fn step(&self, x: i64, u: f64) -> Option<i64> {
        let row = self.row(x)?;
        let mut acc = 0.0;
        let mut last = 0;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = j;
                if u < acc {
                    return Some(x + self.offset(j));
                }
            }
        }
        Some(x + self.offset(last))
    }
}
