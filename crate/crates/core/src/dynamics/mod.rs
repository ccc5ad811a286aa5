//! Gaussian-ansatz dynamics: equations of motion, integration, steady states.

pub mod integrator;
mod rhs;
mod state;
mod steady;

pub use rhs::{gaussian_rhs, meanfield_rhs, Ansatz, ChainSystem};
pub use state::{fluctuation_ratio, GaussianRates, GaussianState};
pub use steady::{
    find_steady_state, find_steady_state_from, integrate, IntegrateOptions, Outcome, Sample,
    SteadyStateOptions, SteadyStateReport, Trajectory,
};
