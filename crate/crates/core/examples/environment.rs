//! Generate a random conductance environment, check the ellipticity and tail
//! conditions, round-trip it through JSON, and run the free walk.
//!
//! ```text
//! cargo run --release --example environment
//! ```

use condwalk::{walk, Environment, EnvironmentParams};

fn main() -> condwalk::Result<()> {
    let params = EnvironmentParams::markov(0.5, 2.0, 1.0, 3, (-2000, 2000), 42);
    let env = Environment::generate(params)?;
    let report = env.validate();
    println!("env {} ({})", env.env_id(), env.kind());
    println!("  conditions hold: {}  kappa_hat = {:.4}", report.pass, report.kappa_hat);
    println!("  C_x in [{:.4}, {:.4}]", report.c_min, report.c_max);

    let row = env.transition_row(0)?;
    println!("  jumps from 0:");
    for (y, p) in &row.targets {
        println!("    -> {y:>3}  {p:.5}");
    }

    // identical after a JSON round trip, same id
    let back = Environment::from_json(&env.to_json()?)?;
    assert_eq!(back.env_id(), env.env_id());

    let m = 10_000;
    let ends: Vec<f64> = (0..400).map(|s| walk::simulate(&env, 0, m, s).map(|p| p.last() as f64)).collect::<Result<_, _>>()?;
    let var = ends.iter().map(|x| x * x).sum::<f64>() / ends.len() as f64;
    println!("  E[X_m^2]/m at m = {m}: {:.3}", var / m as f64);

    let sigma = walk::estimate_sigma(&env, 1000, 4000, 7)?;
    println!("  sigma_hat = {:.4} +- {:.4}", sigma.sigma, sigma.stderr);
    Ok(())
}
