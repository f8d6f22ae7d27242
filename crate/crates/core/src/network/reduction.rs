use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionKind {
    /// Edges with both ends in `(B \ {0}) u E` removed.
    Omega1,
    /// `omega1` with `B` collapsed onto 0.
    Omega2,
    /// `omega1` with `B` collapsed onto 0 and `E` onto `N`.
    Omega3,
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionKind::Omega1 => "omega1",
            ReductionKind::Omega2 => "omega2",
            ReductionKind::Omega3 => "omega3",
        })
    }
}

impl std::str::FromStr for ReductionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega1" => Ok(ReductionKind::Omega1),
            "omega2" => Ok(ReductionKind::Omega2),
            "omega3" => Ok(ReductionKind::Omega3),
            other => Err(Error::InvalidParams(format!("unknown reduction kind {other:?}"))),
        }
    }
}

/// Undirected edge with `a <= b`; `a == b` is a self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: i64,
    pub b: i64,
    pub weight: f64,
}

/// One of the three finite networks built around the strip `(0, N)`.
///
/// `B = (-inf, 0]` and `E = [N, inf)`; only `[-R_max, 0]` and `[N, N-1+R_max]`
/// can touch the interior, so nothing else is stored. A self-loop of weight
/// `w` adds `2w` to the mass of its node and gives the walk a `2w / C_x`
/// chance of staying put.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReduction {
    pub kind: ReductionKind,
    #[serde(rename = "N")]
    pub level: i64,
    pub r_max: usize,
    /// Condition E constant of the parent environment.
    pub kappa: f64,
    pub edges: Vec<Edge>,
    /// `(x, C_x)` for every node of this network.
    pub masses: Vec<(i64, f64)>,
    pub c1_b: f64,
    pub c1_e: f64,
    pub pi_b: Vec<(i64, f64)>,
    pub pi_e: Vec<(i64, f64)>,
}

impl NetworkReduction {
    pub fn mass(&self, x: i64) -> f64 {
        self.masses.iter().find(|&&(y, _)| y == x).map_or(0.0, |&(_, c)| c)
    }

    /// Collapsed conductance between `x` and `y` (loop weight if equal).
    pub fn conductance(&self, x: i64, y: i64) -> f64 {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        self.edges.iter().filter(|e| e.a == a && e.b == b).map(|e| e.weight).sum()
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = i64> + '_ {
        self.masses.iter().map(|&(x, _)| x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_window(env: &Environment, level: i64) -> Result<()> {
    let r = env.r_max() as i64;
    if level < 2 {
        return Err(Error::InvalidParams(format!("N must be at least 2, got {level}")));
    }
    if env.x_min() > -r || env.x_max() < level - 1 + r {
        return Err(Error::WindowTooSmall { x_min: env.x_min(), x_max: env.x_max(), needed: level + 2 * r });
    }
    Ok(())
}

/// Edges of `omega1` with `a < b` and nonzero weight.
fn omega1_edges(env: &Environment, level: i64) -> Result<Vec<Edge>> {
    let r = env.r_max() as i64;
    let outer = |x: i64| x < 0 || x >= level;
    let mut edges = Vec::new();
    for a in -r..level - 1 + r {
        for b in a + 1..=(a + r).min(level - 1 + r) {
            if outer(a) && outer(b) {
                continue;
            }
            let w = env.conductance(a, b)?;
            if w > 0.0 {
                edges.push(Edge { a, b, weight: w });
            }
        }
    }
    Ok(edges)
}

fn masses_of(edges: &[Edge]) -> BTreeMap<i64, f64> {
    let mut m = BTreeMap::new();
    for e in edges {
        if e.a == e.b {
            *m.entry(e.a).or_insert(0.0) += 2.0 * e.weight;
        } else {
            *m.entry(e.a).or_insert(0.0) += e.weight;
            *m.entry(e.b).or_insert(0.0) += e.weight;
        }
    }
    m
}

fn collapse(edges: &[Edge], map: impl Fn(i64) -> i64) -> Vec<Edge> {
    let mut merged: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for e in edges {
        let (a, b) = (map(e.a), map(e.b));
        let key = if a <= b { (a, b) } else { (b, a) };
        *merged.entry(key).or_insert(0.0) += e.weight;
    }
    merged.into_iter().map(|((a, b), weight)| Edge { a, b, weight }).collect()
}

pub fn reduce(env: &Environment, level: i64, kind: ReductionKind) -> Result<NetworkReduction> {
    check_window(env, level)?;
    let e1 = omega1_edges(env, level)?;
    let m1 = masses_of(&e1);
    let in_b = |x: i64| x <= 0;
    let in_e = |x: i64| x >= level;
    let c1_b: f64 = m1.iter().filter(|(&x, _)| in_b(x)).map(|(_, c)| c).sum();
    let c1_e: f64 = m1.iter().filter(|(&x, _)| in_e(x)).map(|(_, c)| c).sum();
    let pi = |pred: &dyn Fn(i64) -> bool, total: f64| -> Vec<(i64, f64)> {
        m1.iter().filter(|(&x, &c)| pred(x) && c > 0.0).map(|(&x, &c)| (x, c / total)).collect()
    };
    let pi_b = pi(&in_b, c1_b);
    let pi_e = pi(&in_e, c1_e);
    let edges = match kind {
        ReductionKind::Omega1 => e1,
        ReductionKind::Omega2 => collapse(&e1, |x| x.max(0)),
        ReductionKind::Omega3 => collapse(&e1, |x| x.clamp(0, level)),
    };
    let masses = masses_of(&edges).into_iter().collect();
    Ok(NetworkReduction {
        kind,
        level,
        r_max: env.r_max(),
        kappa: env.params().kappa,
        edges,
        masses,
        c1_b,
        c1_e,
        pi_b,
        pi_e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentParams;

    fn random_env(r: usize, seed: u64) -> Environment {
        Environment::generate(EnvironmentParams::iid(0.5, 2.0, 1.0, r, (-20, 80), seed)).unwrap()
    }

    #[test]
    fn fair_walk_collapses_to_unit_path_with_boundary_loop() {
        let env = Environment::generate(EnvironmentParams::srw(-5, 30)).unwrap();
        let red = reduce(&env, 6, ReductionKind::Omega3).unwrap();
        for x in 0..6 {
            assert_eq!(red.conductance(x, x + 1), 1.0);
        }
        assert_eq!(red.conductance(0, 0), 1.0);
        assert_eq!(red.conductance(6, 6), 0.0);
        assert_eq!(red.mass(0), 3.0);
        assert_eq!(red.mass(6), 1.0);
        assert!((1..6).all(|x| red.mass(x) == 2.0));
        assert_eq!(red.c1_b, 3.0);
        assert_eq!(red.pi_b, vec![(-1, 1.0 / 3.0), (0, 2.0 / 3.0)]);
        assert_eq!(red.pi_e, vec![(6, 1.0)]);
    }

    #[test]
    fn omega1_drops_only_outer_pairs() {
        let env = random_env(3, 1);
        let n = 10;
        let red = reduce(&env, n, ReductionKind::Omega1).unwrap();
        for a in -3..n + 3 {
            for b in a + 1..=a + 3 {
                let outer = |x: i64| x < 0 || x >= n;
                let expect = if outer(a) && outer(b) || b > n + 2 { 0.0 } else { env.conductance(a, b).unwrap() };
                assert_eq!(red.conductance(a, b), expect, "{a}~{b}");
            }
        }
        for x in 1..n {
            assert!((red.mass(x) - env.total_conductance(x).unwrap()).abs() < 1e-12);
        }
        assert!((red.mass(0) - env.total_conductance(0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn collapsed_masses_and_edges() {
        let env = random_env(2, 2);
        let n = 7;
        let r1 = reduce(&env, n, ReductionKind::Omega1).unwrap();
        let r2 = reduce(&env, n, ReductionKind::Omega2).unwrap();
        let r3 = reduce(&env, n, ReductionKind::Omega3).unwrap();
        let w = |a, b| env.conductance(a, b).unwrap();
        assert!((r3.conductance(n - 1, n) - (w(n - 1, n) + w(n - 1, n + 1))).abs() < 1e-15);
        assert!((r3.conductance(0, 1) - (w(0, 1) + w(-1, 1))).abs() < 1e-15);
        assert!((r2.mass(0) - r1.c1_b).abs() < 1e-12);
        assert!((r3.mass(0) - r1.c1_b).abs() < 1e-12);
        assert!((r3.mass(n) - r1.c1_e).abs() < 1e-12);
        for x in 1..n {
            assert_eq!(r2.mass(x), r1.mass(x));
            assert!((r3.mass(x) - r1.mass(x)).abs() < 1e-12);
            for y in 1..n {
                assert_eq!(r3.conductance(x, y), r1.conductance(x, y));
            }
        }
        let pb: f64 = r1.pi_b.iter().map(|p| p.1).sum();
        let pe: f64 = r1.pi_e.iter().map(|p| p.1).sum();
        assert!((pb - 1.0).abs() < 1e-12 && (pe - 1.0).abs() < 1e-12);
    }

    #[test]
    fn handshake_identity() {
        for seed in 0..5 {
            let env = random_env(3, seed);
            for kind in [ReductionKind::Omega1, ReductionKind::Omega2, ReductionKind::Omega3] {
                let red = reduce(&env, 12, kind).unwrap();
                let total: f64 = red.masses.iter().map(|m| m.1).sum();
                assert!((total - 2.0 * red.total_edge_weight()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn json_round_trip_and_window_check() {
        let env = random_env(2, 3);
        let red = reduce(&env, 9, ReductionKind::Omega3).unwrap();
        assert_eq!(NetworkReduction::from_json(&red.to_json().unwrap()).unwrap(), red);
        assert!(matches!(reduce(&env, 80, ReductionKind::Omega1), Err(Error::WindowTooSmall { .. })));
    }
}
