//! Open particle system on the collapsed network: detailed balance against the
//! product Poisson measure, and Little's law for the M/G/inf queue at 0.
//!
//! ```text
//! cargo run --release --example particle_system
//! ```

use condwalk::network::{self, ParticleSystemSpec, ReductionKind};
use condwalk::{Environment, EnvironmentParams};

fn main() -> condwalk::Result<()> {
    let env = Environment::generate(EnvironmentParams::iid(0.5, 2.0, 1.0, 2, (-8, 40), 5))?;
    let red = network::reduce(&env, 4, ReductionKind::Omega3)?;
    let spec = ParticleSystemSpec::from_reduction(&red)?;
    println!("sites 0..={}, injection rates {:.4} and {:.4}", spec.level, spec.lambda0, spec.lambda_n);

    let eta = [1, 0, 2, 0, 0];
    let next = [0, 1, 2, 0, 0];
    println!(
        "L(eta, eta') mu(eta) = {:.6e}, L(eta', eta) mu(eta') = {:.6e}",
        network::particle_rates(&spec, &eta, &next) * spec.mu(&eta),
        network::particle_rates(&spec, &next, &eta) * spec.mu(&next)
    );
    let rev = network::check_reversibility(&spec, 3, 1e-12)?;
    println!("{} configurations, {} pairs, max violation {:.1e}", rev.configurations, rev.pairs_checked, rev.max_violation);

    let q = network::simulate_queue(&spec, 1e5, 9)?;
    let exact = network::reduced_exit_time_exact(&red)?;
    println!("E[T] = {:.4} +- {:.4} (exact {:.4})", q.e_t_hat, q.e_t_stderr, exact);
    println!("E[R] = {:.4} +- {:.4}, lambda0 E[T] = {:.4}", q.e_r_hat, q.e_r_stderr, q.lambda0 * q.e_t_hat);
    println!("little bound {:.4}", network::little_bound(&red)?);
    Ok(())
}
