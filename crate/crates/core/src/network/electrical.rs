use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::linalg::{BandMatrix, Factorization};
use crate::network::reduction::{reduce, NetworkReduction, ReductionKind};
use crate::walk;

/// Walk on a reduction: nodes `lo..=hi` (gaps allowed), adjacency with loop weights doubled.
pub(crate) struct Graph {
    lo: i64,
    adj: Vec<Vec<(i64, f64)>>,
    mass: Vec<f64>,
}

impl Graph {
    pub(crate) fn new(red: &NetworkReduction) -> Self {
        let lo = red.nodes().min().unwrap_or(0);
        let hi = red.nodes().max().unwrap_or(0);
        let size = (hi - lo + 1) as usize;
        let mut adj = vec![Vec::new(); size];
        let mut mass = vec![0.0; size];
        for e in &red.edges {
            if e.a == e.b {
                adj[(e.a - lo) as usize].push((e.a, 2.0 * e.weight));
                mass[(e.a - lo) as usize] += 2.0 * e.weight;
            } else {
                adj[(e.a - lo) as usize].push((e.b, e.weight));
                adj[(e.b - lo) as usize].push((e.a, e.weight));
                mass[(e.a - lo) as usize] += e.weight;
                mass[(e.b - lo) as usize] += e.weight;
            }
        }
        Graph { lo, adj, mass }
    }

    pub(crate) fn mass(&self, x: i64) -> f64 {
        self.mass.get((x - self.lo) as usize).copied().unwrap_or(0.0)
    }

    /// `(y, p(x, y))` over neighbours of `x`.
    pub(crate) fn steps(&self, x: i64) -> impl Iterator<Item = (i64, f64)> + '_ {
        let c = self.mass(x);
        self.adj[(x - self.lo) as usize].iter().map(move |&(y, w)| (y, w / c))
    }

    pub(crate) fn average(&self, x: i64, f: impl Fn(i64) -> f64) -> f64 {
        self.steps(x).map(|(y, p)| p * f(y)).sum()
    }
}

/// `(I - P)` restricted to a set of unknown nodes, ready for several right-hand sides.
struct Dirichlet<'g> {
    graph: &'g Graph,
    unknowns: Vec<i64>,
    matrix: BandMatrix,
}

impl<'g> Dirichlet<'g> {
    fn new(graph: &'g Graph, unknowns: Vec<i64>) -> Self {
        let index = |x: i64| unknowns.binary_search(&x).ok();
        let mut band = 0usize;
        for (i, &x) in unknowns.iter().enumerate() {
            for (y, _) in graph.steps(x) {
                if let Some(j) = index(y) {
                    band = band.max(i.abs_diff(j));
                }
            }
        }
        let m = unknowns.len();
        let mut matrix = BandMatrix::new(m, band, band);
        for (i, &x) in unknowns.iter().enumerate() {
            matrix.add(i, i, 1.0);
            for (y, p) in graph.steps(x) {
                if let Some(j) = index(y) {
                    matrix.add(i, j, -p);
                }
            }
        }
        Dirichlet { graph, unknowns, matrix }
    }

    fn factor(&self) -> Result<Factorization<'_>> {
        Factorization::new(&self.matrix)
    }

    /// Solve `u = P u + source` on the unknowns with `u = boundary` elsewhere.
    fn solve(&self, lu: &Factorization<'_>, boundary: &dyn Fn(i64) -> f64, source: f64) -> Result<Solution> {
        let b: Vec<f64> = self
            .unknowns
            .iter()
            .map(|&x| {
                source
                    + self
                        .graph
                        .steps(x)
                        .filter(|(y, _)| self.unknowns.binary_search(y).is_err())
                        .map(|(y, p)| p * boundary(y))
                        .sum::<f64>()
            })
            .collect();
        let values = lu.solve(&b)?;
        Ok(Solution { unknowns: self.unknowns.clone(), values })
    }
}

struct Solution {
    unknowns: Vec<i64>,
    values: Vec<f64>,
}

impl Solution {
    fn get(&self, x: i64, boundary: &dyn Fn(i64) -> f64) -> f64 {
        match self.unknowns.binary_search(&x) {
            Ok(i) => self.values[i],
            Err(_) => boundary(x),
        }
    }
}

fn require(red: &NetworkReduction, kind: ReductionKind) -> Result<()> {
    if red.kind != kind {
        return Err(Error::InvalidParams(format!("expected an {kind} reduction, got {}", red.kind)));
    }
    Ok(())
}

/// Effective conductance between 1 and `N` on `omega3`: `C_N P^N[tau_1 < tau_N^+]`.
pub fn effective_conductance(red: &NetworkReduction) -> Result<f64> {
    require(red, ReductionKind::Omega3)?;
    escape_conductance(red, 1)
}

/// Effective conductance between `a` and `N` on `omega3`: `C_N P^N[tau_a < tau_N^+]`.
pub fn escape_conductance(red: &NetworkReduction, a: i64) -> Result<f64> {
    require(red, ReductionKind::Omega3)?;
    let n = red.level;
    if !(0..n).contains(&a) {
        return Err(Error::InvalidParams(format!("source node {a} not in [0, {n})")));
    }
    let g = Graph::new(red);
    let unknowns: Vec<i64> = (0..n).filter(|&x| x != a).collect();
    let boundary = move |x: i64| if x == a { 1.0 } else { 0.0 };
    let d = Dirichlet::new(&g, unknowns);
    let sol = d.solve(&d.factor()?, &boundary, 0.0)?;
    Ok(red.mass(n) * g.average(n, |y| sol.get(y, &boundary)))
}

/// Series conductance of the nearest-neighbour path `1 - 2 - ... - N` in `omega3`.
pub fn series_conductance(red: &NetworkReduction) -> Result<f64> {
    require(red, ReductionKind::Omega3)?;
    let resistance: f64 = (1..red.level).map(|x| 1.0 / red.conductance(x, x + 1)).sum();
    Ok(1.0 / resistance)
}

/// `P[tau_E < tau_B^+]` from 0, computed three independent ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingProbability {
    /// Harmonic solve on the full environment window.
    pub full: f64,
    /// Harmonic solve assembled from the `omega1` edge list.
    pub omega1: f64,
    /// Time reversal from `E`: `C1_E / C_0 * P^{pi_E}[tau_B < tau_E^+, X_{tau_B} = 0]`.
    pub reversal: f64,
}

impl CrossingProbability {
    pub fn value(&self) -> f64 {
        self.full
    }

    pub fn max_discrepancy(&self) -> f64 {
        (self.full - self.omega1).abs().max((self.full - self.reversal).abs()).max((self.omega1 - self.reversal).abs())
    }
}

pub fn crossing_probability_exact(env: &Environment, level: i64) -> Result<CrossingProbability> {
    let red = reduce(env, level, ReductionKind::Omega1)?;
    let full = walk::harmonic_hit(env, level)?.crossing_probability;
    let g = Graph::new(&red);
    let d = Dirichlet::new(&g, (1..level).collect());
    let lu = d.factor()?;

    let hit_e = move |x: i64| if x >= level { 1.0 } else { 0.0 };
    let h = d.solve(&lu, &hit_e, 0.0)?;
    let omega1 = g.average(0, |y| h.get(y, &hit_e));

    let exit_at_0 = |x: i64| if x == 0 { 1.0 } else { 0.0 };
    let back = d.solve(&lu, &exit_at_0, 0.0)?;
    let from_e: f64 = red.pi_e.iter().map(|&(z, pz)| pz * g.average(z, |y| back.get(y, &exit_at_0))).sum();
    let reversal = red.c1_e / g.mass(0) * from_e;
    Ok(CrossingProbability { full, omega1, reversal })
}

/// `P[X_{tau_E} = z, tau_E < tau_B^+]` from 0 for each `z` in `E` that can be hit.
pub fn exit_distribution(env: &Environment, level: i64) -> Result<Vec<(i64, f64)>> {
    let red = reduce(env, level, ReductionKind::Omega1)?;
    let g = Graph::new(&red);
    let d = Dirichlet::new(&g, (1..level).collect());
    let lu = d.factor()?;
    red.pi_e
        .iter()
        .map(|&(z, _)| {
            let hit_z = move |x: i64| if x == z { 1.0 } else { 0.0 };
            let sol = d.solve(&lu, &hit_z, 0.0)?;
            Ok((z, g.average(0, |y| sol.get(y, &hit_z))))
        })
        .collect()
}

/// `E[tau_B^+ ^ tau_E]` from 0 for the original walk.
pub fn expected_exit_time_exact(env: &Environment, level: i64) -> Result<f64> {
    let red = reduce(env, level, ReductionKind::Omega1)?;
    exit_time_from_zero(&red)
}

/// `E[tau_0^+ ^ tau_N]` from 0 for the walk on `omega3`; a self-loop step counts as a return.
pub fn reduced_exit_time_exact(red: &NetworkReduction) -> Result<f64> {
    require(red, ReductionKind::Omega3)?;
    exit_time_from_zero(red)
}

fn exit_time_from_zero(red: &NetworkReduction) -> Result<f64> {
    let g = Graph::new(red);
    let d = Dirichlet::new(&g, (1..red.level).collect());
    let zero = |_: i64| 0.0;
    let m = d.solve(&d.factor()?, &zero, 1.0)?;
    Ok(1.0 + g.average(0, |y| m.get(y, &zero)))
}

/// `(1 / C3_0) sum_{x=0}^{N} C3_x`.
pub fn little_bound(red: &NetworkReduction) -> Result<f64> {
    require(red, ReductionKind::Omega3)?;
    let total: f64 = red.masses.iter().map(|m| m.1).sum();
    Ok(total / red.mass(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentParams;

    fn srw() -> Environment {
        Environment::generate(EnvironmentParams::srw(-4, 300)).unwrap()
    }

    fn random_env(r: usize, seed: u64) -> Environment {
        Environment::generate(EnvironmentParams::iid(0.5, 2.0, 1.0, r, (-20, 300), seed)).unwrap()
    }

    #[test]
    fn unit_path_conductances() {
        let env = srw();
        for n in [2, 5, 17] {
            let red = reduce(&env, n, ReductionKind::Omega3).unwrap();
            let c = effective_conductance(&red).unwrap();
            assert!((c - 1.0 / (n - 1) as f64).abs() < 1e-14);
            assert!((escape_conductance(&red, 0).unwrap() - 1.0 / n as f64).abs() < 1e-14);
        }
        let mut env = srw();
        for x in -4..300 {
            env.set_weight(x, 1, 2.0).unwrap();
        }
        let red = reduce(&env, 9, ReductionKind::Omega3).unwrap();
        assert!((effective_conductance(&red).unwrap() - 2.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn conductance_bounds_on_random_networks() {
        for seed in 0..4 {
            let env = random_env(3, seed);
            let mut last = f64::INFINITY;
            for n in [4, 8, 16, 32, 64] {
                let red = reduce(&env, n, ReductionKind::Omega3).unwrap();
                let c = effective_conductance(&red).unwrap();
                assert!(c >= series_conductance(&red).unwrap() - 1e-12);
                assert!(c >= red.kappa / (n - 1) as f64);
                assert!(c <= last);
                last = c;
            }
        }
    }

    #[test]
    fn fair_walk_crossing_and_exit_times() {
        let env = srw();
        for n in [2i64, 3, 8, 64] {
            let p = crossing_probability_exact(&env, n).unwrap();
            let exact = 0.5 / n as f64;
            assert!((p.full - exact).abs() < 1e-15);
            assert!((p.omega1 - exact).abs() < 1e-15);
            assert!((p.reversal - exact).abs() < 1e-15);
            let t = expected_exit_time_exact(&env, n).unwrap();
            assert!((t - (1.0 + (n - 1) as f64 / 2.0)).abs() < 1e-10);
            let red = reduce(&env, n, ReductionKind::Omega3).unwrap();
            let t3 = reduced_exit_time_exact(&red).unwrap();
            assert!((t3 - (1.0 + (n - 1) as f64 / 3.0)).abs() < 1e-10);
        }
        let red = reduce(&env, 4, ReductionKind::Omega3).unwrap();
        assert!((little_bound(&red).unwrap() - 10.0 / 3.0).abs() < 1e-15);
        assert_eq!(expected_exit_time_exact(&env, 2).unwrap(), 1.5);
    }

    #[test]
    fn three_routes_agree_on_random_networks() {
        for (r, seed) in [(2, 0), (3, 1), (5, 2)] {
            let env = random_env(r, seed);
            for n in [2, 5, 40, 200] {
                let p = crossing_probability_exact(&env, n).unwrap();
                assert!(p.max_discrepancy() < 1e-10, "{p:?}");
                let exits = exit_distribution(&env, n).unwrap();
                let total: f64 = exits.iter().map(|e| e.1).sum();
                assert!((total - p.full).abs() < 1e-10);
                assert!(exits.iter().all(|&(z, _)| z >= n && z < n + r as i64));
            }
        }
    }

    #[test]
    fn little_bounds_hold() {
        for seed in 0..4 {
            let env = random_env(3, seed);
            for n in [4, 16, 64] {
                let red = reduce(&env, n, ReductionKind::Omega3).unwrap();
                let bound = little_bound(&red).unwrap();
                assert!(reduced_exit_time_exact(&red).unwrap() <= bound);
                let pi0 = red.pi_b.iter().find(|p| p.0 == 0).unwrap().1;
                assert!(expected_exit_time_exact(&env, n).unwrap() <= bound / pi0);
            }
        }
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let red = reduce(&srw(), 5, ReductionKind::Omega1).unwrap();
        assert!(effective_conductance(&red).is_err());
        assert!(little_bound(&red).is_err());
    }
}
