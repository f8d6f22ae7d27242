//! The quenched walk: simulation, exact survival and hitting recursions, and
//! exact samplers for the walk conditioned to stay positive or to cross a level.

mod dump;
mod harmonic;
mod path;
mod sigma;
mod survival;

pub use dump::TABLE_FORMAT_VERSION;
pub use harmonic::{conditioned_sample_crossing, harmonic_hit, harmonic_with, CrossingSampler, HarmonicTable};
pub use path::{
    crossing_functionals, rescale, simulate, stopping_time, CrossingFunctionals, PathHeader, RescaledPath, SiteSet,
    WalkPath,
};
pub use sigma::{estimate_sigma, SigmaEstimate, JACKKNIFE_GROUPS};
pub use survival::{
    conditioned_sample_meander, default_window, survival_auto, survival_probability, survival_with, MeanderSampler,
    Survival, SurvivalTable, BRACKET_TOL,
};
