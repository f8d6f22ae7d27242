use std::cell::Cell;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{self, chi3_cdf, marginal_cdf, marginal_cdf_quadrature, rayleigh_cdf};
use crate::env::{Environment, EnvironmentParams, GeneratorKind};
use crate::error::{Error, Result};
use crate::network::{self, ReductionKind};
use crate::rng::{self, derive_seed};
use crate::stats::empirical::{ks_two_sample, EmpiricalDistribution};
use crate::stats::report::{Meta, Thresholds, VerificationReport};
use crate::walk::{self, CrossingSampler, MeanderSampler};

// Sub-experiment tags for `derive_seed`.
const TAG_SIGMA: u64 = 1;
const TAG_MEANDER: u64 = 2;
const TAG_CROSSING: u64 = 3;
const TAG_RHO: u64 = 4;
const TAG_CONTINUUM: u64 = 5;
const TAG_QUEUE: u64 = 6;

/// `n_fit` and run count used when `sigma` has to be estimated.
pub const SIGMA_FIT_STEPS: usize = 2000;
pub const SIGMA_FIT_RUNS: usize = 20_000;

const PLOT_POINTS: usize = 200;

/// Parameters for every suite, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub n: usize,
    pub m: usize,
    pub marginal_times: Vec<f64>,
    pub ratio_times: Vec<f64>,
    pub crossing_levels: Vec<i64>,
    pub overshoot_levels: Vec<i64>,
    pub overshoot_m: usize,
    /// Overshoot allowance; chosen from the smallest level when absent.
    pub overshoot_allowance: Option<i64>,
    pub corollary_n: usize,
    pub corollary_m: usize,
    pub rho_dt: f64,
    pub tightness_n: Vec<usize>,
    pub tightness_t: f64,
    pub tightness_h: Vec<f64>,
    pub particle_level: i64,
    pub max_particles: u32,
    pub queue_horizon: f64,
    pub continuum_m: usize,
    pub meander_dt: f64,
    /// Diffusivity override; estimated (or 1 for srw) when absent.
    pub sigma: Option<f64>,
    pub thresholds: Thresholds,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n: 4096,
            m: 20_000,
            marginal_times: vec![0.25, 0.5, 0.75],
            ratio_times: vec![0.25, 0.5],
            crossing_levels: vec![8, 16, 32, 64, 128, 256],
            overshoot_levels: vec![32, 64, 128],
            overshoot_m: 10_000,
            overshoot_allowance: None,
            corollary_n: 64,
            corollary_m: 10_000,
            rho_dt: 1e-5,
            tightness_n: vec![1024, 4096],
            tightness_t: 0.5,
            tightness_h: vec![0.5, 0.2, 0.05],
            particle_level: 4,
            max_particles: 3,
            queue_horizon: 2e5,
            continuum_m: 20_000,
            meander_dt: 1.0 / 1024.0,
            sigma: None,
            thresholds: Thresholds::default(),
        }
    }
}

fn is_srw(env: &Environment) -> bool {
    env.kind() == GeneratorKind::DeterministicSrw
}

/// Diffusivity for rescaling: the override, 1 for the fair walk, else the
/// jackknife estimate.
pub fn resolve_sigma(env: &Environment, sigma: Option<f64>, seed: u64) -> Result<(f64, Option<walk::SigmaEstimate>)> {
    match sigma {
        Some(s) if s > 0.0 => Ok((s, None)),
        Some(s) => Err(Error::InvalidParams(format!("sigma must be positive, got {s}"))),
        None if is_srw(env) => Ok((1.0, None)),
        None => {
            let est = walk::estimate_sigma(env, SIGMA_FIT_STEPS, SIGMA_FIT_RUNS, derive_seed(seed, TAG_SIGMA))?;
            Ok((est.sigma, Some(est)))
        }
    }
}

fn record_sigma(rep: &mut VerificationReport, sigma: f64, est: &Option<walk::SigmaEstimate>) {
    rep.param("sigma", sigma);
    if let Some(e) = est {
        rep.param("sigma_stderr", e.stderr);
        rep.param("sigma_fit", (e.n_fit, e.m_runs));
    }
}

fn finish(mut rep: VerificationReport, started: Instant) -> VerificationReport {
    rep.meta = Some(Meta { runtime_secs: started.elapsed().as_secs_f64() });
    rep
}

/// `m` exact conditioned meanders of length `n`; for each, `Z^n` at `times`.
/// Returns one column per time.
pub fn meander_marginals(
    env: &Environment,
    n: usize,
    sigma: f64,
    times: &[f64],
    m: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, walk::Survival)> {
    if m == 0 {
        return Err(Error::EmptySample);
    }
    let survival = walk::survival_auto(env, n)?;
    let kernel = env.kernel();
    let sampler = MeanderSampler::new(&kernel, &survival.table)?;
    let seed = derive_seed(seed, TAG_MEANDER);
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let path = sampler.sample(&mut rng::stream(seed, i as u64))?;
            let z = walk::rescale(&path, n, sigma)?;
            Ok(times.iter().map(|&t| z.value_at(t)).collect())
        })
        .collect::<Result<_>>()?;
    let columns = (0..times.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    Ok((columns, survival))
}

pub fn verify_rayleigh(
    env: &Environment,
    n: usize,
    m: usize,
    sigma: Option<f64>,
    seed: u64,
    th: &Thresholds,
) -> Result<VerificationReport> {
    let started = Instant::now();
    let (sigma, est) = resolve_sigma(env, sigma, seed)?;
    let (cols, survival) = meander_marginals(env, n, sigma, &[1.0], m, seed)?;
    let dist = EmpiricalDistribution::new(cols.into_iter().next().unwrap())?;

    let mut rep = VerificationReport::new("rayleigh");
    rep.param("env_id", env.env_id()).param("n", n).param("m", m).param("seed", seed);
    rep.param("survival_probability", survival.value()).param("window", survival.table.window());
    record_sigma(&mut rep, sigma, &est);
    let limit = if is_srw(env) { th.ks_rayleigh_srw } else { th.ks_rayleigh_random };
    rep.at_most("ks", dist.ks(rayleigh_cdf), limit);
    rep.at_least("fraction_positive", 1.0 - dist.ecdf(0.0), 1.0);
    rep.info("mean", dist.mean());
    rep.info("rayleigh_mean", (std::f64::consts::PI / 2.0).sqrt());
    rep.plots.push(("rayleigh".into(), dist.plot_data(rayleigh_cdf, PLOT_POINTS)));
    Ok(finish(rep, started))
}

pub fn verify_marginal(
    env: &Environment,
    n: usize,
    t: f64,
    m: usize,
    sigma: Option<f64>,
    seed: u64,
    th: &Thresholds,
) -> Result<VerificationReport> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParams(format!("marginal time must lie in (0, 1), got {t}")));
    }
    let started = Instant::now();
    let (sigma, est) = resolve_sigma(env, sigma, seed)?;
    let (cols, _) = meander_marginals(env, n, sigma, &[t], m, seed)?;
    let dist = EmpiricalDistribution::new(cols.into_iter().next().unwrap())?;

    let failed = Cell::new(false);
    let target = |x: f64| {
        marginal_cdf_quadrature(t, x).unwrap_or_else(|_| {
            failed.set(true);
            f64::NAN
        })
    };
    let mut rep = VerificationReport::new(format!("marginal_t{t}"));
    rep.param("env_id", env.env_id()).param("n", n).param("t", t).param("m", m).param("seed", seed);
    record_sigma(&mut rep, sigma, &est);
    let ks = dist.ks(target);
    if failed.get() {
        return Err(Error::Domain("quadrature failed while evaluating the marginal CDF".into()));
    }
    rep.at_most("ks", ks, th.ks_marginal);
    rep.at_least("fraction_positive", 1.0 - dist.ecdf(0.0), 1.0);
    rep.plots.push((format!("marginal_t{t}"), dist.plot_data(target, PLOT_POINTS)));
    Ok(finish(rep, started))
}

pub fn verify_ratio(env: &Environment, n: usize, t_list: &[f64], th: &Thresholds) -> Result<VerificationReport> {
    let started = Instant::now();
    let full = walk::survival_auto(env, n)?;
    let mut rep = VerificationReport::new("ratio");
    rep.param("env_id", env.env_id()).param("n", n).param("t", t_list);
    rep.info("survival_n", full.value());
    let limit = if is_srw(env) { th.ratio_srw } else { th.ratio_random };
    for &t in t_list {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParams(format!("ratio time must lie in (0, 1], got {t}")));
        }
        let k = (n as f64 * t).floor() as usize;
        if k == 0 {
            return Err(Error::InvalidParams(format!("n t rounds down to 0 (n = {n}, t = {t})")));
        }
        let ratio = if k == n { 1.0 } else { walk::survival_auto(env, k)?.value() / full.value() };
        rep.info(format!("ratio_t{t}"), ratio);
        rep.at_most(format!("deviation_t{t}"), (ratio * t.sqrt() - 1.0).abs(), limit);
    }
    Ok(finish(rep, started))
}

/// Smallest `M` with `tail(M) <= eta`, given `tail[j] = P[overshoot > j]`.
fn minimal_allowance(tail: &[f64], eta: f64) -> i64 {
    tail.iter().position(|&p| p <= eta).unwrap_or(tail.len()) as i64
}

pub fn verify_overshoot(
    env: &Environment,
    levels: &[i64],
    allowance: Option<i64>,
    m: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<VerificationReport> {
    if levels.is_empty() || m == 0 {
        return Err(Error::InvalidParams("overshoot needs at least one level and one sample".into()));
    }
    let started = Instant::now();
    let r = env.r_max();
    let kernel = env.kernel();
    let seed = derive_seed(seed, TAG_CROSSING);
    let mut rep = VerificationReport::new("overshoot");
    rep.param("env_id", env.env_id()).param("levels", levels).param("m", m).param("seed", seed);
    rep.param("r_max", r);

    // tail[j] = P[X_tau - N > j | crossing], j = 0..R-1
    let mut mc_tails = Vec::new();
    for (li, &level) in levels.iter().enumerate() {
        let table = walk::harmonic_hit(env, level)?;
        let sampler = CrossingSampler::new(&kernel, &table)?;
        let over: Vec<usize> = (0..m)
            .into_par_iter()
            .map(|i| {
                let path = sampler.sample(&mut rng::stream(seed, (li * m + i) as u64))?;
                Ok((path.last().unwrap() - level) as usize)
            })
            .collect::<Result<_>>()?;
        let mut counts = vec![0usize; r];
        for &o in &over {
            counts[o.min(r - 1)] += 1;
        }
        let tail: Vec<f64> = (0..r).map(|j| counts[j + 1..].iter().sum::<usize>() as f64 / m as f64).collect();

        let exact = network::exit_distribution(env, level)?;
        let mass: f64 = exact.iter().map(|e| e.1).sum();
        let exact_tail: Vec<f64> =
            (0..r as i64).map(|j| exact.iter().filter(|e| e.0 - level > j).map(|e| e.1).sum::<f64>() / mass).collect();

        // MC against the exact conditional law, allowing a floor for zero-probability tails
        let worst = tail
            .iter()
            .zip(&exact_tail)
            .map(|(&a, &b)| (a - b).abs() / ((b * (1.0 - b) / m as f64).sqrt() + 1.0 / m as f64))
            .fold(0.0, f64::max);
        rep.at_most(format!("N{level}.mc_vs_exact_sigmas"), worst, th.mc_sigmas);
        for eta in [0.1, 0.05] {
            rep.info(format!("N{level}.min_M_eta{eta}"), minimal_allowance(&tail, eta) as f64);
            rep.info(format!("N{level}.min_M_eta{eta}_exact"), minimal_allowance(&exact_tail, eta) as f64);
        }
        mc_tails.push(tail);
    }

    for eta in [0.1, 0.05] {
        let uniform = mc_tails.iter().map(|t| minimal_allowance(t, eta)).max().unwrap();
        rep.info(format!("uniform_M_eta{eta}"), uniform as f64);
    }
    let chosen = allowance.unwrap_or_else(|| minimal_allowance(&mc_tails[0], th.overshoot_eta));
    rep.param("allowance", chosen);
    rep.param("allowance_from_first_level", allowance.is_none());
    let sup_tail = mc_tails
        .iter()
        .map(|t| if chosen < 0 { 1.0 } else { t.get(chosen as usize).copied().unwrap_or(0.0) })
        .fold(0.0, f64::max);
    rep.at_most("sup_tail_at_allowance", sup_tail, th.overshoot_eta);
    Ok(finish(rep, started))
}

pub fn verify_crossing_lemmas(env: &Environment, levels: &[i64], th: &Thresholds) -> Result<VerificationReport> {
    if levels.is_empty() {
        return Err(Error::InvalidParams("no levels given".into()));
    }
    let started = Instant::now();
    let mut rep = VerificationReport::new("crossing_lemmas");
    rep.param("env_id", env.env_id()).param("levels", levels);
    let (mut scaled_p, mut scaled_e) = (Vec::new(), Vec::new());
    let mut route_gap: f64 = 0.0;
    let mut little_ok = true;
    let mut direct_ok = true;
    for &level in levels {
        let p = network::crossing_probability_exact(env, level)?;
        route_gap = route_gap.max(p.max_discrepancy());
        let e = network::expected_exit_time_exact(env, level)?;
        let red3 = network::reduce(env, level, ReductionKind::Omega3)?;
        let bound = network::little_bound(&red3)?;
        let e3 = network::reduced_exit_time_exact(&red3)?;
        let pi0 = red3.pi_b.iter().find(|b| b.0 == 0).map(|b| b.1).unwrap_or(0.0);
        let n = level as f64;
        scaled_p.push(n * p.value());
        scaled_e.push(e / n);
        rep.info(format!("N{level}.N_times_P"), n * p.value());
        rep.info(format!("N{level}.E_over_N"), e / n);
        rep.info(format!("N{level}.little_bound_over_N"), bound / n);
        rep.info(format!("N{level}.reduced_E_over_N"), e3 / n);
        // the queue sojourn bound and E <= bound / pi_B(0) are rigorous; E <= bound is the direct reading
        little_ok &= e3 <= bound * (1.0 + 1e-12) && e * pi0 <= bound * (1.0 + 1e-12);
        direct_ok &= e <= bound * (1.0 + 1e-12);
        rep.info(format!("N{level}.bound_minus_E"), bound - e);
    }
    let ratio = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min);
    let min_p = scaled_p.iter().copied().fold(f64::INFINITY, f64::min);
    let max_e = scaled_e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep.info("min_N_times_P", min_p);
    rep.info("max_E_over_N", max_e);
    rep.at_most("N_times_P_flatness", ratio(&scaled_p) - 1.0, th.crossing_flatness);
    // E/N relaxes towards its limit from above, so only a growth trend is judged
    rep.info("E_over_N_flatness", ratio(&scaled_e) - 1.0);
    if levels.len() > 1 {
        rep.at_least("N_times_P_log_slope", log_slope(levels, &scaled_p), -th.trend_slope);
        rep.at_most("E_over_N_log_slope", log_slope(levels, &scaled_e), th.trend_slope);
    }
    rep.at_most("route_discrepancy", route_gap, th.crossing_routes);
    rep.at_least("little_bound_rigorous", if little_ok { 1.0 } else { 0.0 }, 1.0);
    rep.at_least("little_bound_direct", if direct_ok { 1.0 } else { 0.0 }, 1.0);
    if is_srw(env) {
        let dev = scaled_p.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
        rep.at_most("srw_N_times_P_minus_half", dev, 1e-12);
    }
    Ok(finish(rep, started))
}

/// Least-squares slope of `ln v` against `ln N`; a decay or growth trend shows up here.
fn log_slope(levels: &[i64], v: &[f64]) -> f64 {
    let xs: Vec<f64> = levels.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = v.iter().map(|y| y.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx
}

pub fn verify_corollary(
    env: &Environment,
    n: usize,
    m: usize,
    sigma: Option<f64>,
    rho_dt: f64,
    seed: u64,
    th: &Thresholds,
) -> Result<VerificationReport> {
    const T0: f64 = 0.1;
    let started = Instant::now();
    let (sigma, est) = resolve_sigma(env, sigma, seed)?;
    let kernel = env.kernel();
    let table = walk::harmonic_hit(env, n as i64)?;
    let sampler = CrossingSampler::new(&kernel, &table)?;
    let walk_seed = derive_seed(seed, TAG_CROSSING);
    let discrete: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let path = sampler.sample(&mut rng::stream(walk_seed, i as u64))?;
            let f = walk::crossing_functionals(&path, n, sigma)?;
            Ok((f.t_n, f.stopped.value_at(T0)))
        })
        .collect::<Result<_>>()?;
    let rho_seed = derive_seed(seed, TAG_RHO);
    let continuum: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let s = continuum::sample_rho1_with(rho_dt, sigma, &mut rng::stream(rho_seed, i as u64), rho_seed, true)?;
            Ok((s.rho, s.path.expect("path requested").value_at(T0)))
        })
        .collect::<Result<_>>()?;

    let finite = discrete.iter().filter(|d| d.0.is_finite()).count();
    let t_n = EmpiricalDistribution::new(discrete.iter().map(|d| d.0).collect())?;
    let y_n = EmpiricalDistribution::new(discrete.iter().map(|d| d.1).collect())?;
    let rho = EmpiricalDistribution::new(continuum.iter().map(|c| c.0).collect())?;
    let b3 = EmpiricalDistribution::new(continuum.iter().map(|c| c.1).collect())?;
    let rho_mean = rho.mean();
    let rho_sd = (rho.samples().iter().map(|r| (r - rho_mean).powi(2)).sum::<f64>() / (m as f64 - 1.0)).sqrt();
    let rho_se = rho_sd / (m as f64).sqrt();
    let rho_target = 1.0 / (3.0 * sigma * sigma);

    let mut rep = VerificationReport::new("corollary");
    rep.param("env_id", env.env_id()).param("n", n).param("m", m).param("seed", seed);
    rep.param("rho_dt", rho_dt).param("t0", T0);
    record_sigma(&mut rep, sigma, &est);
    rep.at_least("fraction_crossed", finite as f64 / m as f64, 1.0);
    rep.at_most("ks_T_n_vs_rho1", ks_two_sample(&t_n, &rho), th.ks_corollary);
    rep.at_most("ks_Y_t0_vs_B3", ks_two_sample(&y_n, &b3), th.ks_corollary);
    rep.info("mean_T_n", t_n.mean());
    rep.info("mean_rho1", rho_mean);
    rep.info("rho1_stderr", rho_se);
    rep.at_most("rho1_mean_sigmas", (rho_mean - rho_target).abs() / rho_se, th.mc_sigmas);
    let rho_cdf = rho.clone();
    rep.plots.push(("corollary_T_n".into(), t_n.plot_data(|x| rho_cdf.ecdf(x), PLOT_POINTS)));
    Ok(finish(rep, started))
}

#[allow(clippy::too_many_arguments)]
pub fn verify_tightness_probe(
    env: &Environment,
    n_list: &[usize],
    t: f64,
    h_list: &[f64],
    m: usize,
    sigma: Option<f64>,
    seed: u64,
    th: &Thresholds,
) -> Result<VerificationReport> {
    const X_LIST: [f64; 3] = [1.0, 2.0, 3.0];
    const SMALL_T: [f64; 3] = [0.1, 0.05, 0.01];
    if !(t > 0.0 && t < 1.0) || h_list.is_empty() || n_list.is_empty() {
        return Err(Error::InvalidParams("tightness probe needs t in (0, 1) and nonempty n and h lists".into()));
    }
    let started = Instant::now();
    let (sigma, est) = resolve_sigma(env, sigma, seed)?;
    let mut h_sorted = h_list.to_vec();
    h_sorted.sort_by(|a, b| b.total_cmp(a));
    let h_fixed = h_sorted[0];
    let h_small = *h_sorted.last().unwrap();

    let mut rep = VerificationReport::new("tightness");
    rep.param("env_id", env.env_id()).param("n", n_list).param("t", t).param("h", &h_sorted);
    rep.param("m", m).param("seed", seed);
    record_sigma(&mut rep, sigma, &est);
    let mut times = vec![1.0, t];
    times.extend(SMALL_T);
    for &n in n_list {
        let (cols, _) = meander_marginals(env, n, sigma, &times, m, seed)?;
        let dists: Vec<EmpiricalDistribution> = cols.into_iter().map(EmpiricalDistribution::new).collect::<Result<_>>()?;
        let (end, mid, small) = (&dists[0], &dists[1], &dists[2..]);

        let tails: Vec<f64> = X_LIST.iter().map(|&x| end.tail(x)).collect();
        for (x, p) in X_LIST.iter().zip(&tails) {
            rep.info(format!("n{n}.P[Z1>{x}]"), *p);
        }
        let rises = tails.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        rep.at_most(format!("n{n}.tail_in_x_increase"), rises, 0.0);
        let x_last = *X_LIST.last().unwrap();
        rep.at_most(
            format!("n{n}.P[Z1>{x_last}]_minus_rayleigh"),
            (tails[2] - (-0.5 * x_last * x_last).exp()).abs(),
            th.tail_x3_abs,
        );

        let mut prev = f64::NEG_INFINITY;
        let mut drop: f64 = 0.0;
        for &h in &h_sorted {
            let p = mid.tail(h);
            rep.info(format!("n{n}.P[Z{t}>{h}]"), p);
            rep.info(format!("n{n}.P[Z{t}>{h}]_target"), 1.0 - marginal_cdf(t, h)?);
            drop = drop.max(prev - p);
            prev = p;
        }
        rep.at_most(format!("n{n}.tail_in_h_decrease"), drop, 0.0);
        rep.at_least(format!("n{n}.P[Z{t}>{h_small}]"), mid.tail(h_small), th.small_h_floor);

        let mut last = f64::INFINITY;
        let mut rise: f64 = 0.0;
        for (s, d) in SMALL_T.iter().zip(small) {
            let p = d.tail(h_fixed);
            rep.info(format!("n{n}.P[Z{s}>{h_fixed}]"), p);
            rise = rise.max(p - last);
            last = p;
        }
        rep.at_most(format!("n{n}.small_t_increase"), rise, 0.0);
        rep.at_most(format!("n{n}.P[Z{}>{h_fixed}]", SMALL_T[2]), last, th.small_t_ceiling);
    }
    Ok(finish(rep, started))
}

/// Reversibility of the particle system on `omega3` and the Little identity of its queue.
pub fn verify_particles(
    env: &Environment,
    level: i64,
    max_particles: u32,
    horizon: f64,
    seed: u64,
    th: &Thresholds,
) -> Result<VerificationReport> {
    let started = Instant::now();
    let red = network::reduce(env, level, ReductionKind::Omega3)?;
    let spec = network::ParticleSystemSpec::from_reduction(&red)?;
    let rev = network::check_reversibility(&spec, max_particles, th.reversibility)?;
    let queue = network::simulate_queue(&spec, horizon, derive_seed(seed, TAG_QUEUE))?;
    let exact = network::reduced_exit_time_exact(&red)?;

    let mut rep = VerificationReport::new("particles");
    rep.param("env_id", env.env_id()).param("N", level).param("max_particles", max_particles);
    rep.param("horizon", horizon).param("seed", seed);
    rep.info("configurations", rev.configurations as f64);
    rep.at_most("reversibility_violation", rev.max_violation, th.reversibility);
    rep.info("lambda0", queue.lambda0);
    rep.info("E_T_hat", queue.e_t_hat);
    rep.info("E_R_hat", queue.e_r_hat);
    rep.info("E_T_exact", exact);
    rep.info("little_bound", network::little_bound(&red)?);
    rep.at_most("little_relative_gap", queue.little_gap, th.little_relative);
    rep.at_most("E_T_sigmas", (queue.e_t_hat - exact).abs() / queue.e_t_stderr, th.mc_sigmas);
    Ok(finish(rep, started))
}

/// Meander sampler against Rayleigh, normalisation of `q`, and the meander sup bound.
pub fn verify_continuum(m: usize, dt: f64, seed: u64, th: &Thresholds) -> Result<VerificationReport> {
    // (a, c, delta) with informative bounds
    const SUP_CASES: [(f64, f64, f64); 2] = [(1.0, 9.0, 3.0), (0.5, 4.0, 1.0)];
    const MASS_TIMES: [f64; 4] = [0.1, 0.5, 0.9, 1.0];
    let started = Instant::now();
    let seed_c = derive_seed(seed, TAG_CONTINUUM);
    let samples: Vec<continuum::MeanderSample> = (0..m)
        .into_par_iter()
        .map(|i| continuum::sample_meander_with(dt, &mut rng::stream(seed_c, i as u64), seed_c))
        .collect::<Result<_>>()?;
    let end = EmpiricalDistribution::new(samples.iter().map(|s| s.path.last()).collect())?;

    let mut rep = VerificationReport::new("continuum");
    rep.param("m", m).param("dt", dt).param("seed", seed);
    rep.at_most("meander_endpoint_ks", end.ks(rayleigh_cdf), th.ks_continuum);
    rep.plots.push(("meander_endpoint".into(), end.plot_data(rayleigh_cdf, PLOT_POINTS)));
    for t in MASS_TIMES {
        rep.at_most(format!("q_mass_error_t{t}"), (continuum::q_total_mass(t)? - 1.0).abs(), th.density_mass);
    }
    for (a, c, delta) in SUP_CASES {
        let bound = continuum::meander_sup_tail(a, c, delta)?;
        // W^+_T(s) = sqrt(T) W^+(s / T) with T = c + delta
        let horizon = (a + delta) / (c + delta);
        let level = (c + delta).powf(-0.5);
        let hits = samples.iter().filter(|s| s.path.sup_until(horizon) < level).count();
        let p = hits as f64 / m as f64;
        let se = (p * (1.0 - p) / m as f64).sqrt().max(1.0 / m as f64);
        let tag = format!("sup_a{a}_c{c}_d{delta}");
        rep.info(format!("{tag}.estimate"), p);
        rep.info(format!("{tag}.bound"), bound);
        rep.at_most(format!("{tag}.excess_sigmas"), ((p - bound) / se).max(0.0), th.mc_sigmas);
    }
    let bessel_mean = (0..m.min(4000))
        .map(|i| continuum::sample_bessel3(0.01, 1.0, derive_seed(seed_c, i as u64)).map(|p| p.last()))
        .collect::<Result<Vec<_>>>()?;
    let b = EmpiricalDistribution::new(bessel_mean)?;
    rep.info("bessel_endpoint_ks_chi3", b.ks(chi3_cdf));
    Ok(finish(rep, started))
}

/// Fair-walk environment wide enough for every suite at horizon `n`.
pub fn calibration_env(n: usize) -> Result<Environment> {
    let top = (walk::default_window(n) * 2 + 64) as i64;
    Environment::generate(EnvironmentParams::srw(-64, top.max(300)))
}

/// Every suite on `env`, preceded by the fair-walk calibration.
pub fn verify_all(env: &Environment, cfg: &SuiteConfig, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let th = &cfg.thresholds;
    let mut all = VerificationReport::new("all");
    all.param("env_id", env.env_id()).param("seed", seed).param("config", cfg);

    let srw = calibration_env(cfg.n)?;
    let calibration = [
        verify_rayleigh(&srw, cfg.n, cfg.m, None, seed, th)?,
        verify_ratio(&srw, cfg.n, &cfg.ratio_times, th)?,
        verify_crossing_lemmas(&srw, &cfg.crossing_levels, th)?,
    ];
    let mut calibrated = true;
    for r in &calibration {
        all.absorb(&format!("calibration.{}", r.check), r);
        calibrated &= r.pass;
    }
    all.info("calibration_pass", if calibrated { 1.0 } else { 0.0 });
    if !calibrated {
        all.pass = false;
        return Ok(finish(all, started));
    }

    let (sigma, est) = resolve_sigma(env, cfg.sigma, seed)?;
    record_sigma(&mut all, sigma, &est);
    let sigma = Some(sigma);
    let mut reports = vec![verify_rayleigh(env, cfg.n, cfg.m, sigma, seed, th)?];
    for &t in &cfg.marginal_times {
        reports.push(verify_marginal(env, cfg.n, t, cfg.m, sigma, seed, th)?);
    }
    reports.push(verify_ratio(env, cfg.n, &cfg.ratio_times, th)?);
    reports.push(verify_crossing_lemmas(env, &cfg.crossing_levels, th)?);
    reports.push(verify_overshoot(env, &cfg.overshoot_levels, cfg.overshoot_allowance, cfg.overshoot_m, seed, th)?);
    reports.push(verify_corollary(env, cfg.corollary_n, cfg.corollary_m, sigma, cfg.rho_dt, seed, th)?);
    reports.push(verify_tightness_probe(
        env,
        &cfg.tightness_n,
        cfg.tightness_t,
        &cfg.tightness_h,
        cfg.m,
        sigma,
        seed,
        th,
    )?);
    reports.push(verify_particles(env, cfg.particle_level, cfg.max_particles, cfg.queue_horizon, seed, th)?);
    reports.push(verify_continuum(cfg.continuum_m, cfg.meander_dt, seed, th)?);
    for r in &reports {
        all.absorb(&r.check, r);
        all.plots.extend(r.plots.iter().cloned());
    }
    Ok(finish(all, started))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srw() -> Environment {
        Environment::generate(EnvironmentParams::srw(-16, 600)).unwrap()
    }

    #[test]
    fn ratio_at_one_is_exactly_zero() {
        let rep = verify_ratio(&srw(), 64, &[1.0], &Thresholds::default()).unwrap();
        assert_eq!(rep.statistic("deviation_t1").unwrap().value, 0.0);
    }

    #[test]
    fn srw_lemma_values() {
        let rep = verify_crossing_lemmas(&srw(), &[8, 16, 32], &Thresholds::default()).unwrap();
        assert!(rep.pass, "{}", rep.summary());
        assert!((rep.statistic("min_N_times_P").unwrap().value - 0.5).abs() < 1e-12);
        // (1 + (N-1)/2) / N at N = 8
        assert!((rep.statistic("max_E_over_N").unwrap().value - 4.5 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_neighbour_overshoot_is_zero() {
        let rep = verify_overshoot(&srw(), &[8, 16], None, 200, 1, &Thresholds::default()).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.statistic("sup_tail_at_allowance").unwrap().value, 0.0);
        assert_eq!(rep.params["allowance"], 0);
    }

    #[test]
    fn small_rayleigh_run_is_reproducible() {
        let th = Thresholds::default();
        let a = verify_rayleigh(&srw(), 256, 300, None, 9, &th).unwrap();
        let b = verify_rayleigh(&srw(), 256, 300, None, 9, &th).unwrap();
        assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
        assert_eq!(a.statistic("fraction_positive").unwrap().value, 1.0);
    }

    #[test]
    fn marginal_rejects_endpoints() {
        let th = Thresholds::default();
        assert!(verify_marginal(&srw(), 64, 1.0, 10, None, 0, &th).is_err());
        assert!(verify_marginal(&srw(), 64, 0.0, 10, None, 0, &th).is_err());
    }

    #[test]
    fn minimal_allowance_reads_tails() {
        assert_eq!(minimal_allowance(&[0.3, 0.04, 0.0], 0.05), 1);
        assert_eq!(minimal_allowance(&[0.0], 0.05), 0);
        assert_eq!(minimal_allowance(&[0.3, 0.2], 0.05), 2);
    }
}
