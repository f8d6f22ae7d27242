//! Empirical distributions, Kolmogorov-Smirnov distances, and the suites that
//! compare conditioned-walk functionals with their limit laws.

mod empirical;
mod report;
mod verify;

pub use empirical::{ecdf, ks, ks_two_sample, write_plot_csv, EmpiricalDistribution};
pub use report::{Comparison, Meta, Statistic, Thresholds, VerificationReport};
pub use verify::{
    calibration_env, meander_marginals, resolve_sigma, verify_all, verify_continuum, verify_corollary,
    verify_crossing_lemmas, verify_marginal, verify_overshoot, verify_particles, verify_ratio, verify_rayleigh,
    verify_tightness_probe, SuiteConfig, SIGMA_FIT_RUNS, SIGMA_FIT_STEPS,
};
