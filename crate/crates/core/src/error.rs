use thiserror::Error;

/// Errors produced by the ball constructions and their numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BallError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry (NaN or Inf) in {0}")]
    NonFinite(&'static str),

    #[error("matrix not invertible (smallest eigenvalue or singular value {min:.3e})")]
    NotInvertible { min: f64 },

    #[error("matrix condition number {cond:.3e} exceeds limit {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("Moebius map has a pole: 1 - conj(a) z vanishes")]
    Pole,

    #[error("oracle returned unknown on the ray; norm cannot be bracketed")]
    OracleIncomplete,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("curves coincide")]
    CurvesCoincide,

    #[error("no intersection in the admissible interval: {0}")]
    NoRoot(String),

    #[error("sequence step {step} failed: {diagnostic}")]
    SequenceStep { step: usize, diagnostic: String },

    #[error("grid budget exceeded: {evaluations:.3e} evaluations requested (limit {limit:.0e})")]
    GridBudget { evaluations: f64, limit: f64 },

    #[error("geometric median iteration did not converge; value lies in [{lower}, {upper}]")]
    MedianNoConvergence { lower: f64, upper: f64 },

    #[error("degenerate polynomial: sup norm {0:.3e} below 1e-12")]
    DegeneratePolynomial(f64),
}

pub type Result<T> = std::result::Result<T, BallError>;
