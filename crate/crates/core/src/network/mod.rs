//! Finite electrical networks around a crossing strip `(0, N)`, exact
//! crossing and exit-time solves, and the open particle system whose
//! stationary law bounds the exit time.

mod electrical;
mod particles;
mod queue;
mod reduction;

pub use electrical::{
    crossing_probability_exact, effective_conductance, escape_conductance, exit_distribution,
    expected_exit_time_exact, little_bound, reduced_exit_time_exact, series_conductance, CrossingProbability,
};
pub use particles::{
    check_reversibility, check_reversibility_capped, particle_rates, ParticleSystemSpec, ReversibilityReport,
    ENUMERATION_CAP,
};
pub use queue::{simulate_queue, QueueReport, BURN_IN_FRACTION};
pub use reduction::{reduce, Edge, NetworkReduction, ReductionKind};
