use std::f64::consts::{FRAC_2_PI, SQRT_2};

use crate::continuum::quad;
use crate::error::{Error, Result};

const QUAD_TOL: f64 = 1e-13;

/// Gaussian mass beyond this many scale units is below 1e-300.
const TAIL_CUTOFF: f64 = 40.0;

pub(crate) fn ntilde(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else {
        libm::erf(x / SQRT_2)
    }
}

/// `sqrt(2/pi) int_0^x exp(-u^2/2) du`, i.e. `erf(x / sqrt 2)`. Accepts `+inf`.
pub fn normal_integral(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("normal_integral needs x >= 0, got {x}")));
    }
    Ok(ntilde(x))
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("meander time must lie in (0, 1], got {t}")));
    }
    Ok(())
}

/// Density of the meander at time `t` started from 0.
pub fn q_density(t: f64, y: f64) -> Result<f64> {
    check_t(t)?;
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("q_density needs y >= 0, got {y}")));
    }
    Ok(q_unchecked(t, y))
}

fn q_unchecked(t: f64, y: f64) -> f64 {
    if t == 1.0 {
        return y * (-0.5 * y * y).exp();
    }
    t.powf(-1.5) * y * (-0.5 * y * y / t).exp() * ntilde(y / (1.0 - t).sqrt())
}

/// `P[W^+(t) <= x]` in closed form.
///
/// Integrating the density by parts gives
/// `Ntilde(x / sqrt(t(1-t))) - t^{-1/2} exp(-x^2/2t) Ntilde(x / sqrt(1-t))`.
pub fn marginal_cdf(t: f64, x: f64) -> Result<f64> {
    check_t(t)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(rayleigh_cdf(x));
    }
    let v = ntilde(x / (t * (1.0 - t)).sqrt()) - t.powf(-0.5) * (-0.5 * x * x / t).exp() * ntilde(x / (1.0 - t).sqrt());
    Ok(v.clamp(0.0, 1.0))
}

/// `int_0^x q(t, y) dy` by adaptive quadrature.
pub fn marginal_cdf_quadrature(t: f64, x: f64) -> Result<f64> {
    check_t(t)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let x = x.min(TAIL_CUTOFF * t.sqrt());
    quad::integrate(|y| q_unchecked(t, y), 0.0, x, QUAD_TOL)
}

/// `int_0^inf q(t, y) dy`, which should be 1.
pub fn q_total_mass(t: f64) -> Result<f64> {
    check_t(t)?;
    let top = TAIL_CUTOFF * t.sqrt();
    // split near the mode so the first panel is not mostly tail
    let mid = 3.0 * t.sqrt();
    Ok(quad::integrate(|y| q_unchecked(t, y), 0.0, mid, QUAD_TOL)?
        + quad::integrate(|y| q_unchecked(t, y), mid, top, QUAD_TOL)?)
}

pub fn rayleigh_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-0.5 * x * x).exp_m1()
    }
}

/// CDF of the chi distribution with 3 degrees of freedom.
pub fn chi3_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (ntilde(x) - FRAC_2_PI.sqrt() * x * (-0.5 * x * x).exp()).clamp(0.0, 1.0)
}

/// Upper bound `(1/3) sqrt((c+d)/(c-a)) (a+d)^{-3/2}` on
/// `P[sup_{s <= a+d} W^+_{c+d}(s) < 1]`.
pub fn meander_sup_tail(a: f64, c: f64, delta: f64) -> Result<f64> {
    if !(a >= 0.0 && c > 2.0 * a && delta > 0.0) {
        return Err(Error::Domain(format!("meander_sup_tail needs c > 2a >= 0 and delta > 0 (got a={a}, c={c}, delta={delta})")));
    }
    Ok(((c + delta) / (c - a)).sqrt() * (a + delta).powf(-1.5) / 3.0)
}

/// `(y, q(t, y))` on a uniform grid of `points` values over `[0, y_max]`.
pub fn q_table(t: f64, y_max: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    check_t(t)?;
    if points < 2 || !(y_max > 0.0) {
        return Err(Error::Domain("q_table needs at least two points and y_max > 0".into()));
    }
    Ok((0..points)
        .map(|i| {
            let y = y_max * i as f64 / (points - 1) as f64;
            (y, q_unchecked(t, y))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normal_integral_values() {
        assert_eq!(normal_integral(0.0).unwrap(), 0.0);
        assert_eq!(normal_integral(f64::INFINITY).unwrap(), 1.0);
        assert!((normal_integral(1.0).unwrap() - 0.682_689_492_137_085_9).abs() < 1e-15);
        assert!((normal_integral(2.0).unwrap() - 0.954_499_736_103_641_6).abs() < 1e-15);
        assert!(normal_integral(-1.0).is_err());
        assert!(normal_integral(f64::NAN).is_err());
        // against direct quadrature of the defining integral
        for x in [0.3, 1.7, 4.5] {
            let by_quad = FRAC_2_PI.sqrt() * quad::integrate(|u| (-0.5 * u * u).exp(), 0.0, x, 1e-15).unwrap();
            assert!((normal_integral(x).unwrap() - by_quad).abs() <= 1e-12 * by_quad);
        }
    }

    #[test]
    fn density_values() {
        for t in [0.1, 0.5, 1.0] {
            assert_eq!(q_density(t, 0.0).unwrap(), 0.0);
        }
        assert!((q_density(1.0, 1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-16);
        assert!(q_density(0.0, 1.0).is_err());
        assert!(q_density(1.5, 1.0).is_err());
        assert!(q_density(0.5, -1.0).is_err());
        assert_eq!(q_density(0.3, 0.7).unwrap().to_bits(), q_density(0.3, 0.7).unwrap().to_bits());
    }

    #[test]
    fn density_is_normalised() {
        for t in [0.1, 0.5, 0.9, 1.0, 0.01, 0.999] {
            assert!((q_total_mass(t).unwrap() - 1.0).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for t in [0.05, 0.25, 0.5, 0.75, 0.99, 1.0] {
            for x in [0.01, 0.2, 0.5, 1.0, 1.5, 2.5, 4.0] {
                let a = marginal_cdf(t, x).unwrap();
                let b = marginal_cdf_quadrature(t, x).unwrap();
                assert!((a - b).abs() < 1e-11, "t={t} x={x}: {a} vs {b}");
            }
        }
        for x in [0.1, 1.0, 3.0] {
            assert!((marginal_cdf(1.0, x).unwrap() - (1.0 - (-x * x / 2.0).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn chi3_matches_quadrature() {
        let density = |r: f64| FRAC_2_PI.sqrt() * r * r * (-0.5 * r * r).exp();
        for x in [0.2, 1.0, 1.6, 3.0] {
            let q = quad::integrate(density, 0.0, x, 1e-14).unwrap();
            assert!((chi3_cdf(x) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_tail_bound() {
        let v = meander_sup_tail(1.0, 9.0, 3.0).unwrap();
        assert!((v - 1.5f64.sqrt() / 24.0).abs() < 1e-15);
        assert!((v - 0.05103).abs() < 1e-5);
        let mut last = f64::INFINITY;
        for c in [16.0, 100.0, 1e4, 1e6] {
            let b = meander_sup_tail(1.0, c, f64::sqrt(c)).unwrap();
            assert!(b < last);
            last = b;
        }
        assert!(last < 1e-4);
        assert!(meander_sup_tail(1.0, 2.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(t in 0.01f64..=1.0, x in 0.0f64..5.0, dx in 0.0f64..1.0) {
            let a = marginal_cdf(t, x).unwrap();
            let b = marginal_cdf(t, x + dx).unwrap();
            prop_assert!(a <= b + 1e-15);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
