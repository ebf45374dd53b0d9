use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Kernel evaluated at or inside its singular set.
    #[error("domain error: {0}")]
    Domain(String),

    /// Separation / containment hypothesis violated. `pair` is `(l, λ)` for a
    /// separation failure and `(l, l)` for a particle sticking out of the box.
    #[error("H2 violation between particles {} and {}: {reason}", pair.0, pair.1)]
    H2 { pair: (usize, usize), reason: String },

    #[error("saturation: placed {placed} of {requested} particles after {attempts} attempts")]
    Saturation { placed: usize, requested: usize, attempts: usize },

    #[error("gate violation: a^3/d^3 = {phi_local:.3e} exceeds eps0 = {gate:.3e} (use --force to override)")]
    Gate { phi_local: f64, gate: f64 },

    /// Effective model too large for the contraction solver.
    #[error("model sup-norm {sup_norm:.3e} exceeds the contraction limit {limit}")]
    ModelGate { sup_norm: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::H2 { .. } | Error::Saturation { .. } => 2,
            Error::Gate { .. } | Error::ModelGate { .. } => 3,
            Error::InvalidParameter(_) => 4,
            _ => 1,
        }
    }
}
