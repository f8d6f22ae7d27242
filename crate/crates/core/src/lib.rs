//! Random walks in reversible random environments on the integers, conditioned
//! to stay positive, together with the electrical-network reductions and
//! continuum limit laws used to check them.

pub mod cli;
pub mod continuum;
pub mod env;
pub mod error;
pub mod linalg;
pub mod network;
pub mod rng;
pub mod stats;
pub mod walk;

pub use env::{Environment, EnvironmentParams, GeneratorKind};
pub use error::{Error, Result};
