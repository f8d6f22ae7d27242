//! Brownian meander, the meander marginal density, Bessel-3 paths and the
//! first passage time of the Bessel process.
//!
//! ```text
//! cargo run --release --example continuum_processes
//! ```

use condwalk::continuum::{self, chi3_cdf, marginal_cdf, rayleigh_cdf};
use condwalk::stats::EmpiricalDistribution;

fn main() -> condwalk::Result<()> {
    for t in [0.1, 0.5, 1.0] {
        println!(
            "t = {t}: mass of q = {:.12}, P[W+(t) <= 1] = {:.6} (quadrature {:.6})",
            continuum::q_total_mass(t)?,
            marginal_cdf(t, 1.0)?,
            continuum::marginal_cdf_quadrature(t, 1.0)?
        );
    }

    let m = 4000;
    let ends: Vec<f64> = (0..m).map(|s| continuum::sample_meander(1.0 / 1024.0, s).map(|x| x.path.last())).collect::<Result<_, _>>()?;
    println!("meander endpoint KS vs Rayleigh: {:.4}", EmpiricalDistribution::new(ends)?.ks(rayleigh_cdf));

    let b3: Vec<f64> = (0..m).map(|s| continuum::sample_bessel3(0.01, 1.0, s).map(|p| p.last())).collect::<Result<_, _>>()?;
    println!("Bessel-3 at time 1 KS vs chi_3: {:.4}", EmpiricalDistribution::new(b3)?.ks(chi3_cdf));

    let rho: Vec<f64> = (0..m).map(|s| continuum::sample_rho1(1e-4, 1.0, s, false).map(|r| r.rho)).collect::<Result<_, _>>()?;
    println!("E[rho_1] = {:.4} (1/3)", rho.iter().sum::<f64>() / m as f64);

    let bound = continuum::meander_sup_tail(1.0, 9.0, 3.0)?;
    println!("P[sup W+_12 over [0,4] < 1] <= {bound:.5}");
    Ok(())
}
