use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::electrical::Graph;
use crate::network::reduction::{NetworkReduction, ReductionKind};

/// Default ceiling on enumerated configurations.
pub const ENUMERATION_CAP: usize = 2_000_000;

/// Open particle system on `{0, ..., N}` built from an `omega3` network.
///
/// Particles are injected at `b` in `{0, N}` at rate `C3_b`, each particle
/// sitting at `b` is removed at unit rate, and each particle at `x` jumps to
/// `y != x` at rate `q(x, y)`. The product of Poisson(`C3_x`) laws is then
/// reversible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystemSpec {
    #[serde(rename = "N")]
    pub level: usize,
    /// Row-major `(N+1) x (N+1)` jump probabilities, self-loops on the diagonal.
    pub q: Vec<f64>,
    pub masses: Vec<f64>,
    pub lambda0: f64,
    #[serde(rename = "lambdaN")]
    pub lambda_n: f64,
}

impl ParticleSystemSpec {
    pub fn from_reduction(red: &NetworkReduction) -> Result<Self> {
        if red.kind != ReductionKind::Omega3 {
            return Err(Error::InvalidParams(format!("particle system needs omega3, got {}", red.kind)));
        }
        let n = red.level as usize;
        let g = Graph::new(red);
        let mut q = vec![0.0; (n + 1) * (n + 1)];
        for x in 0..=n {
            for (y, p) in g.steps(x as i64) {
                q[x * (n + 1) + y as usize] += p;
            }
        }
        let masses: Vec<f64> = (0..=n).map(|x| g.mass(x as i64)).collect();
        Ok(ParticleSystemSpec { level: n, q, lambda0: masses[0], lambda_n: masses[n], masses })
    }

    pub fn sites(&self) -> usize {
        self.level + 1
    }

    pub fn q(&self, x: usize, y: usize) -> f64 {
        self.q[x * self.sites() + y]
    }

    fn boundary_rate(&self, b: usize) -> Option<f64> {
        if b == 0 {
            Some(self.lambda0)
        } else if b == self.level {
            Some(self.lambda_n)
        } else {
            None
        }
    }

    /// Log of the product-Poisson weight of `eta`.
    pub fn log_mu(&self, eta: &[u32]) -> f64 {
        eta.iter()
            .zip(&self.masses)
            .map(|(&k, &c)| {
                let k = k as f64;
                -c + k * c.ln() - libm::lgamma(k + 1.0)
            })
            .sum()
    }

    pub fn mu(&self, eta: &[u32]) -> f64 {
        self.log_mu(eta).exp()
    }
}

/// Transition rate from `eta` to `eta_next`; zero unless they differ by one allowed move.
pub fn particle_rates(spec: &ParticleSystemSpec, eta: &[u32], eta_next: &[u32]) -> f64 {
    assert_eq!(eta.len(), spec.sites());
    assert_eq!(eta_next.len(), spec.sites());
    let mut gained = None;
    let mut lost = None;
    for (i, (&a, &b)) in eta.iter().zip(eta_next).enumerate() {
        match b as i64 - a as i64 {
            0 => {}
            1 if gained.is_none() => gained = Some(i),
            -1 if lost.is_none() => lost = Some(i),
            _ => return 0.0,
        }
    }
    match (lost, gained) {
        (None, Some(b)) => spec.boundary_rate(b).unwrap_or(0.0),
        (Some(b), None) => spec.boundary_rate(b).map_or(0.0, |_| eta[b] as f64),
        (Some(x), Some(y)) => eta[x] as f64 * spec.q(x, y),
        (None, None) => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub configurations: usize,
    pub pairs_checked: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Detailed balance `L(eta, eta') mu(eta) = L(eta', eta) mu(eta')` over all
/// configurations with at most `max_particles` particles.
pub fn check_reversibility(spec: &ParticleSystemSpec, max_particles: u32, tol: f64) -> Result<ReversibilityReport> {
    check_reversibility_capped(spec, max_particles, tol, ENUMERATION_CAP)
}

pub fn check_reversibility_capped(
    spec: &ParticleSystemSpec,
    max_particles: u32,
    tol: f64,
    cap: usize,
) -> Result<ReversibilityReport> {
    let s = spec.sites();
    let count = binomial(max_particles as usize + s, s);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    let mut eta = vec![0u32; s];
    let mut report = ReversibilityReport { configurations: 0, pairs_checked: 0, max_violation: 0.0, tolerance: tol, pass: true };
    let check = |eta: &[u32], next: &[u32], report: &mut ReversibilityReport| {
        let forward = particle_rates(spec, eta, next) * spec.mu(eta);
        let backward = particle_rates(spec, next, eta) * spec.mu(next);
        report.max_violation = report.max_violation.max((forward - backward).abs());
        report.pairs_checked += 1;
    };
    loop {
        report.configurations += 1;
        let total: u32 = eta.iter().sum();
        let mut next = eta.clone();
        for b in [0, spec.level] {
            if total < max_particles {
                next[b] += 1;
                check(&eta, &next, &mut report);
                next[b] -= 1;
            }
        }
        for x in 0..s {
            if eta[x] == 0 {
                continue;
            }
            next[x] -= 1;
            for y in 0..s {
                if y != x {
                    next[y] += 1;
                    check(&eta, &next, &mut report);
                    next[y] -= 1;
                }
            }
            next[x] += 1;
        }
        if !advance(&mut eta, max_particles) {
            break;
        }
    }
    report.pass = report.max_violation <= tol;
    Ok(report)
}

/// Next configuration with total at most `cap`, odometer order.
fn advance(eta: &mut [u32], cap: u32) -> bool {
    let mut total: u32 = eta.iter().sum();
    for i in 0..eta.len() {
        if total < cap {
            eta[i] += 1;
            return true;
        }
        total -= eta[i];
        eta[i] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, EnvironmentParams};
    use crate::network::reduce;

    fn unit_path(n: i64) -> ParticleSystemSpec {
        let env = Environment::generate(EnvironmentParams::srw(-3, 20)).unwrap();
        ParticleSystemSpec::from_reduction(&reduce(&env, n, ReductionKind::Omega3).unwrap()).unwrap()
    }

    #[test]
    fn rates_read_off_the_generator() {
        let spec = unit_path(3);
        assert_eq!(particle_rates(&spec, &[0, 0, 0, 0], &[1, 0, 0, 0]), 3.0);
        assert_eq!(particle_rates(&spec, &[0, 0, 0, 0], &[0, 0, 0, 1]), 1.0);
        assert_eq!(particle_rates(&spec, &[0, 2, 0, 0], &[0, 1, 1, 0]), 2.0 * spec.q(1, 2));
        assert_eq!(particle_rates(&spec, &[0, 2, 0, 0], &[0, 1, 0, 0]), 0.0);
        assert_eq!(particle_rates(&spec, &[2, 0, 0, 0], &[1, 0, 0, 0]), 2.0);
        assert_eq!(particle_rates(&spec, &[0, 0, 0, 0], &[0, 0, 2, 0]), 0.0);
        assert_eq!(particle_rates(&spec, &[1, 0, 0, 0], &[0, 0, 1, 1]), 0.0);
        for x in 0..4 {
            let row: f64 = (0..4).map(|y| spec.q(x, y)).sum();
            assert!((row - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_ratio_at_the_boundary() {
        let spec = unit_path(2);
        let eta = [2, 1, 0];
        let plus = [3, 1, 0];
        assert!((spec.mu(&plus) / spec.mu(&eta) - spec.masses[0] / 3.0).abs() < 1e-14);
        let lhs = spec.lambda0 * spec.mu(&eta);
        let rhs = particle_rates(&spec, &plus, &eta) * spec.mu(&plus);
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn enumeration_counts_and_balance() {
        let spec = unit_path(2);
        let report = check_reversibility(&spec, 3, 1e-12).unwrap();
        assert_eq!(report.configurations, binomial(6, 3));
        assert!(report.pass, "{report:?}");
        let env = Environment::generate(EnvironmentParams::iid(0.5, 2.0, 1.0, 2, (-5, 20), 4)).unwrap();
        let spec = ParticleSystemSpec::from_reduction(&reduce(&env, 4, ReductionKind::Omega3).unwrap()).unwrap();
        let report = check_reversibility(&spec, 3, 1e-12).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(matches!(check_reversibility_capped(&spec, 30, 1e-12, 1000), Err(Error::EnumerationCap { .. })));
    }
}
