use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("x' = {x} lies outside the profiled range |x'| <= {neck}")]
    OutOfProfileRange { x: f64, neck: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry construction failed: {0}")]
    GeometryConstruction(String),

    #[error("grading failure: {0} (try raising the anisotropy cap or refining the far spacing)")]
    GradingFailure(String),

    #[error("coefficient field error: {0}")]
    Coefficient(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e}, target {tol:.1e})")]
    SolverNonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("inconsistent conductor system: {0}")]
    SingularSystem(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge on [{a}, {b}] (estimate {estimate:.6e}, error {error:.3e})"
    )]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    #[error("tolerance error: {0}")]
    Tolerance(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by invalid input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::OutOfProfileRange { .. }
                | Error::InvalidParameter(_)
                | Error::GeometryConstruction(_)
                | Error::Coefficient(_)
                | Error::Domain(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
