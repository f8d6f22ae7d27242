//! Empirical CDFs, one- and two-sample Kolmogorov-Smirnov distances, and
//! plot data in the `(x, empirical, target)` CSV layout.
//!
//! ```text
//! cargo run --release --example goodness_of_fit
//! ```

use condwalk::continuum::rayleigh_cdf;
use condwalk::rng;
use condwalk::stats::{ks_two_sample, write_plot_csv, EmpiricalDistribution};
use rand::Rng;

fn main() -> condwalk::Result<()> {
    // Rayleigh draws by inversion
    let draw = |seed: u64, m: usize| -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..m).map(|_| (-2.0 * (1.0 - r.random::<f64>()).ln()).sqrt()).collect()
    };
    for m in [100, 1000, 10_000, 100_000] {
        let d = EmpiricalDistribution::new(draw(1, m))?;
        println!("m = {m:>6}: KS = {:.5}  sqrt(m) KS = {:.3}", d.ks(rayleigh_cdf), (m as f64).sqrt() * d.ks(rayleigh_cdf));
    }

    let a = EmpiricalDistribution::new(draw(2, 5000))?;
    let b = EmpiricalDistribution::new(draw(3, 5000))?;
    let shifted = EmpiricalDistribution::new(draw(4, 5000).into_iter().map(|x| x * 1.05).collect())?;
    println!("two-sample KS, same law: {:.4}; 5% scale change: {:.4}", ks_two_sample(&a, &b), ks_two_sample(&a, &shifted));

    write_plot_csv(std::io::stdout().lock(), &a.plot_data(rayleigh_cdf, 6))?;
    Ok(())
}
