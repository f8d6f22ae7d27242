//! Boundary reductions of an environment around the strip (0, N), effective
//! conductances, crossing probabilities by three routes, and exit times.
//!
//! ```text
//! cargo run --release --example electrical_network
//! ```

use condwalk::network::{self, ReductionKind};
use condwalk::{Environment, EnvironmentParams};

fn main() -> condwalk::Result<()> {
    let env = Environment::generate(EnvironmentParams::iid(0.5, 2.0, 1.0, 3, (-16, 600), 11))?;
    let red = network::reduce(&env, 6, ReductionKind::Omega3)?;
    println!("omega3 at N = 6: {} edges, C3_0 = {:.4}, C3_N = {:.4}", red.edges.len(), red.mass(0), red.mass(6));

    println!("{:>5} {:>10} {:>10} {:>12} {:>10} {:>10}", "N", "C_eff", "N*P[A]", "routes gap", "E/N", "bound/N");
    for level in [8, 16, 32, 64, 128, 256] {
        let red = network::reduce(&env, level, ReductionKind::Omega3)?;
        let p = network::crossing_probability_exact(&env, level)?;
        let e = network::expected_exit_time_exact(&env, level)?;
        let n = level as f64;
        println!(
            "{level:>5} {:>10.5} {:>10.5} {:>12.1e} {:>10.4} {:>10.4}",
            network::effective_conductance(&red)?,
            n * p.value(),
            p.max_discrepancy(),
            e / n,
            network::little_bound(&red)? / n
        );
    }

    let level = 32;
    let exits = network::exit_distribution(&env, level)?;
    let total: f64 = exits.iter().map(|e| e.1).sum();
    println!("overshoot law past N = {level} given a crossing:");
    for (z, p) in exits {
        println!("  X = {z}: {:.5}", p / total);
    }
    Ok(())
}
