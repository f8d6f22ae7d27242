//! Continuum reference objects: Brownian motion, the Brownian meander, the
//! meander marginal density, the 3-dimensional Bessel process and its first
//! passage time.

mod density;
mod paths;
pub mod quad;

pub use density::{
    chi3_cdf, marginal_cdf, marginal_cdf_quadrature, meander_sup_tail, normal_integral, q_density, q_table,
    q_total_mass, rayleigh_cdf,
};
pub(crate) use paths::{sample_meander_with, sample_rho1_with};
pub use paths::{
    meander_scaled, sample_bessel3, sample_bm, sample_meander, sample_rho1, ContinuumPath, MeanderSample, PathKind,
    Rho1Sample, MEANDER_MAX_DT,
};
