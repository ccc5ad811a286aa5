use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The adaptive step fell below the representable minimum.
    #[error("step size underflow at t = {t} (h = {h:e}); system is too stiff for the explicit integrator")]
    StepUnderflow { t: f64, h: f64 },

    #[error("state norm exceeded the divergence guard at t = {t}")]
    Divergence { t: f64 },

    /// det H(k) passes (numerically) through the origin.
    #[error("winding number did not become integral after refinement to {points} k-points (total phase / 2π = {winding}); the point gap is closed")]
    GapClosing { points: usize, winding: f64 },

    #[error("matrix is singular or numerically singular: {0}")]
    Singular(String),

    #[error("linearized dynamics unstable: eigenvalue {re} + {im}i has non-negative imaginary part")]
    Unstable { re: f64, im: f64 },

    #[error("Fock truncation too small: population {tail:e} in the top two levels of D = {dim} exceeds {tol:e}; try D = {suggested}")]
    Truncation {
        dim: usize,
        tail: f64,
        tol: f64,
        suggested: usize,
    },

    #[error("steady state not reached: {0}")]
    NotConverged(String),

    #[error("transition not resolved: {0}")]
    Resolution(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}
