use thiserror::Error;

/// Errors produced by the trap simulation crate.
#[derive(Debug, Error)]
pub enum QrError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A requested state cannot be represented on the grid.
    #[error("unresolved state: {0}")]
    Resolution(String),

    #[error("singular tridiagonal system (zero pivot at row {row})")]
    SingularSystem { row: usize },

    /// The nonlinear fixed-point iteration ran out of iterations. For
    /// strongly attractive coupling this is one of the collapse signatures,
    /// so the last iterate is kept for the collapse detector.
    #[error("fixed-point iteration did not converge after {iters} passes at tau = {tau}")]
    CollapseSuspected { tau: f64, iters: usize },

    #[error("non-finite amplitudes encountered at tau = {tau}")]
    NumericalBlowup { tau: f64 },

    #[error("quadrature did not reach tolerance {tol} on [{a}, {b}]")]
    QuadratureAccuracy { a: f64, b: f64, tol: f64 },

    #[error("degenerate derivative: |d h_int/d alpha| = {value} is below 1e-30")]
    DegenerateDerivative { value: f64 },

    #[error("invalid bracket: {0}")]
    Bracket(String),

    #[error("unknown species '{name}'; available: {available}")]
    UnknownSpecies { name: String, available: String },

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QrError>;
