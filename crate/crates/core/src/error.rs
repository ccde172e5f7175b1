use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input (knots, topology, experiment specs).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("interface {interface} mismatch: max deviation {deviation:.3e} at parameter {parameter} (tolerance {tolerance:.3e})")]
    InterfaceMismatch {
        interface: usize,
        deviation: f64,
        parameter: f64,
        tolerance: f64,
    },

    #[error("singular jacobian on patch {patch} at ({u}, {v}): det = {det:.3e}")]
    SingularJacobian { patch: usize, u: f64, v: f64, det: f64 },

    #[error("matrix singular at pivot {index} (|d| = {pivot:.3e})")]
    Singular { index: usize, pivot: f64 },

    #[error("matrix is not positive definite: {negative} negative pivots{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    NotPositiveDefinite {
        negative: usize,
        context: Option<String>,
    },

    #[error("non-positive curvature p^T F p = {curvature:.3e} at iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Config(_)
                | Error::InterfaceMismatch { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
