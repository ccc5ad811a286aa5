//! Driven-dissipative chiral Bose-Hubbard chain: Gaussian-ansatz dynamics,
//! non-Hermitian topology of the linearized fluctuations, phase diagrams and
//! an exact single-site reference solver.

pub mod dynamics;
pub mod error;
pub mod fit;
pub mod io;
pub mod model;
pub mod oracle;
pub mod sweep;
pub mod topology;

pub use error::{Error, Result};
