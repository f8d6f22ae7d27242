//! Run a selection of the verification suites and print their reports.
//! `condwalk verify all` runs the full-size versions.
//!
//! ```text
//! cargo run --release --example verification_suite
//! ```

use condwalk::stats::{self, Thresholds};
use condwalk::{Environment, EnvironmentParams};

fn main() -> condwalk::Result<()> {
    let th = Thresholds::default();
    let srw = Environment::generate(EnvironmentParams::srw(-32, 2000))?;
    let random = Environment::generate(EnvironmentParams::iid(0.5, 2.0, 1.0, 3, (-1000, 2000), 101))?;

    let reports = vec![
        stats::verify_rayleigh(&srw, 4096, 20_000, None, 1, &th)?,
        stats::verify_marginal(&srw, 4096, 0.5, 20_000, None, 1, &th)?,
        stats::verify_ratio(&random, 1024, &[0.25, 0.5], &th)?,
        stats::verify_crossing_lemmas(&random, &[8, 16, 32, 64, 128], &th)?,
        stats::verify_overshoot(&random, &[16, 32], None, 4000, 1, &th)?,
        stats::verify_particles(&random, 4, 3, 5e4, 1, &th)?,
    ];
    for r in &reports {
        print!("{}", r.summary());
    }
    println!("{}", reports[0].canonical_json()?);
    Ok(())
}
