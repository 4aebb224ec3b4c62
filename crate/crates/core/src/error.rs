use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network is islanded: buses {buses:?} are disconnected from the rest of the system")]
    Islanding { buses: Vec<usize> },

    #[error("singular network matrix: zero pivot at bus {bus}")]
    SingularNetwork { bus: usize },

    #[error("non-finite derivative in {device}")]
    NonFiniteDerivative { device: String },

    #[error("simulation diverged at step {step} (t = {time:.4} s)")]
    Divergence { step: usize, time: f64 },

    #[error("operating point is not an equilibrium (max |dx/dt| = {norm:.3e})")]
    NotEquilibrium { norm: f64 },

    #[error("load flow did not converge after {iterations} iterations (mismatch {mismatch:.3e})")]
    LoadFlow { iterations: usize, mismatch: f64 },

    #[error("phase compensation is undefined for a zero residue")]
    ZeroResidue,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid case: {0}")]
    Case(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
