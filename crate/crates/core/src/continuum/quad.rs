//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 40;

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// `int_a^b f` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, floor: f64, whole: (f64, f64), depth: u32) -> Result<f64> {
        let (value, err) = whole;
        if err <= tol.max(floor) || (b - a).abs() < 1e-15 * a.abs().max(1.0) {
            return Ok(value);
        }
        if depth == MAX_DEPTH {
            return Err(Error::Domain(format!("quadrature did not converge on [{a}, {b}] (error {err:e})")));
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        Ok(rec(f, a, m, 0.5 * tol, floor, left, depth + 1)? + rec(f, m, b, 0.5 * tol, floor, right, depth + 1)?)
    }
    let whole = gk15(&f, a, b);
    // stop splitting the budget once panels are 2^-24 of the tolerance
    rec(&f, a, b, tol, tol * 6e-8, whole, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((integrate(|x| x.powi(5), 0.0, 2.0, 1e-14).unwrap() - 64.0 / 6.0).abs() < 1e-12);
        assert!((integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-14).unwrap() - 2.0).abs() < 1e-13);
        let gauss = integrate(|x| (-x * x / 2.0).exp(), -40.0, 40.0, 1e-14).unwrap();
        assert!((gauss - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((integrate(f64::sqrt, 0.0, 1.0, 1e-12).unwrap() - 2.0 / 3.0).abs() < 1e-11);
    }
}
