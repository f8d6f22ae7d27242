//! Walk conditioned to cross level n before returning to the half-line, its
//! crossing time on the n^2 clock, and the Bessel-3 hitting time it approaches.
//!
//! ```text
//! cargo run --release --example crossing_bessel
//! ```

use condwalk::continuum;
use condwalk::stats::{ks_two_sample, EmpiricalDistribution};
use condwalk::{walk, Environment, EnvironmentParams};

fn main() -> condwalk::Result<()> {
    let env = Environment::generate(EnvironmentParams::srw(-8, 200))?;
    let n = 64;
    let table = walk::harmonic_hit(&env, n as i64)?;
    println!("P[cross {n} before returning] = {:.6} (1/2N = {:.6})", table.crossing_probability, 0.5 / n as f64);

    let m = 3000;
    let mut t_n = Vec::with_capacity(m);
    for seed in 0..m as u64 {
        let path = walk::conditioned_sample_crossing(&env, &table, seed)?;
        t_n.push(walk::crossing_functionals(&path.positions, n, 1.0)?.t_n);
    }
    let rho: Vec<f64> = (0..m as u64)
        .map(|s| continuum::sample_rho1(1e-4, 1.0, s + 1_000_000, false).map(|r| r.rho))
        .collect::<Result<_, _>>()?;

    let a = EmpiricalDistribution::new(t_n)?;
    let b = EmpiricalDistribution::new(rho)?;
    println!("mean T_n = {:.4}, mean rho_1 = {:.4} (exact 1/3)", a.mean(), b.mean());
    println!("two-sample KS = {:.4}", ks_two_sample(&a, &b));
    Ok(())
}
