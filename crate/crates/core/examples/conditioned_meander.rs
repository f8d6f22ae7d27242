//! Exact sampling of the walk conditioned to stay positive for n steps, and
//! the Rayleigh law of its rescaled endpoint.
//!
//! ```text
//! cargo run --release --example conditioned_meander
//! ```

use condwalk::continuum::rayleigh_cdf;
use condwalk::stats::{self, EmpiricalDistribution};
use condwalk::{walk, Environment, EnvironmentParams};

fn main() -> condwalk::Result<()> {
    let env = Environment::generate(EnvironmentParams::srw(-16, 4000))?;
    for n in [16, 256, 4096] {
        let s = walk::survival_auto(&env, n)?;
        println!(
            "n = {n:>5}: P[stay positive] = {:.6e}  sqrt(n) P = {:.5}  window {} bracket {:.1e}",
            s.value(),
            s.value() * (n as f64).sqrt(),
            s.table.window(),
            s.bracket()
        );
    }

    let n = 2048;
    let s = walk::survival_auto(&env, n)?;
    let path = walk::conditioned_sample_meander(&env, &s.table, 1)?;
    let z = walk::rescale(&path.positions, n, 1.0)?;
    println!("one path: Z(0.25) = {:.3}, Z(0.5) = {:.3}, Z(1) = {:.3}", z.value_at(0.25), z.value_at(0.5), z.value_at(1.0));

    let (cols, _) = stats::meander_marginals(&env, n, 1.0, &[1.0], 5000, 3)?;
    let end = EmpiricalDistribution::new(cols[0].clone())?;
    println!("KS(Z_1, Rayleigh) over 5000 paths: {:.4}", end.ks(rayleigh_cdf));
    Ok(())
}
