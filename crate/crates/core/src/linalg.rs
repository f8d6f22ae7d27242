//! Certified linear solves for absorbing-chain systems.
//!
//! Systems up to [`DENSE_LIMIT`] unknowns go through a pivoted dense LU;
//! larger ones through band elimination. The matrices built by this crate
//! are `I - P` restricted to a transient set, i.e. nonsingular M-matrices,
//! so elimination without pivoting is stable. Every solution is checked by
//! plugging it back in.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DENSE_LIMIT: usize = 512;

/// Residual bound, relative to `max(1, |x|_inf)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Square matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.ku {
            return None;
        }
        Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Add `v` to entry `(i, j)`. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) outside band"));
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

enum Factors {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Banded(BandMatrix),
}

/// A factorised system that can be solved for several right-hand sides.
pub struct Factorization<'a> {
    a: &'a BandMatrix,
    factors: Factors,
}

impl<'a> Factorization<'a> {
    pub fn new(a: &'a BandMatrix) -> Result<Self> {
        let factors = if a.n <= DENSE_LIMIT { Factors::Dense(a.to_dense().lu()) } else { Factors::Banded(band_lu(a)?) };
        Ok(Factorization { a, factors })
    }

    /// Band elimination regardless of size.
    pub fn banded(a: &'a BandMatrix) -> Result<Self> {
        Ok(Factorization { a, factors: Factors::Banded(band_lu(a)?) })
    }

    /// Pivoted dense LU regardless of size.
    pub fn dense(a: &'a BandMatrix) -> Self {
        Factorization { a, factors: Factors::Dense(a.to_dense().lu()) }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.a.n);
        let x = match &self.factors {
            Factors::Dense(lu) => lu
                .solve(&DVector::from_column_slice(b))
                .map(|v| v.as_slice().to_vec())
                .ok_or(Error::SingularSystem { residual: f64::INFINITY, tolerance: RESIDUAL_TOL })?,
            Factors::Banded(lu) => band_solve(lu, b),
        };
        certify(self.a, &x, b)?;
        Ok(x)
    }
}

/// Solve `a x = b` with the default strategy.
pub fn solve(a: &BandMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(a)?.solve(b)
}

fn certify(a: &BandMatrix, x: &[f64], b: &[f64]) -> Result<()> {
    let ax = a.mul_vec(x);
    let residual = ax.iter().zip(b).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max);
    let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if !(residual <= RESIDUAL_TOL * scale) {
        return Err(Error::SingularSystem { residual, tolerance: RESIDUAL_TOL * scale });
    }
    Ok(())
}

/// In-place LU without pivoting, kept in band storage.
fn band_lu(a: &BandMatrix) -> Result<BandMatrix> {
    let mut lu = a.clone();
    let n = lu.n;
    for i in 0..n {
        let pivot = lu.get(i, i);
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { residual: f64::INFINITY, tolerance: RESIDUAL_TOL });
        }
        let col_end = (i + lu.ku).min(n - 1);
        for k in (i + 1)..=(i + lu.kl).min(n - 1) {
            let lik = lu.get(k, i);
            if lik == 0.0 {
                continue;
            }
            let factor = lik / pivot;
            let ki = lu.idx(k, i).unwrap();
            lu.data[ki] = factor;
            for j in (i + 1)..=col_end {
                let u = lu.get(i, j);
                if u != 0.0 {
                    let kj = lu.idx(k, j).unwrap();
                    lu.data[kj] -= factor * u;
                }
            }
        }
    }
    Ok(lu)
}

fn band_solve(lu: &BandMatrix, b: &[f64]) -> Vec<f64> {
    let n = lu.n;
    let mut y = b.to_vec();
    for i in 0..n {
        let lo = i.saturating_sub(lu.kl);
        let s: f64 = (lo..i).map(|j| lu.get(i, j) * y[j]).sum();
        y[i] -= s;
    }
    for i in (0..n).rev() {
        let hi = (i + lu.ku).min(n - 1);
        let s: f64 = ((i + 1)..=hi).map(|j| lu.get(i, j) * y[j]).sum();
        y[i] = (y[i] - s) / lu.get(i, i);
    }
    y
}
