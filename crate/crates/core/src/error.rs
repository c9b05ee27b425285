use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("evaluation failed at point {point}: {reason}")]
    Evaluation { point: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The active columns are numerically independent although their count
    /// still exceeds the requested bound; the rank tolerance is too tight.
    #[error("no null-space direction among {active} active columns (bound {bound})")]
    NullspaceNotFound { active: usize, bound: usize },

    /// A Carathéodory update pushed a kept weight below `-tol`.
    #[error("weight update drove index {index} to {value:e}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("NNLS did not converge within {iterations} iterations (best residual {residual:e})")]
    Indeterminate { iterations: usize, residual: f64 },

    #[error("target leaves the column span (residual {residual:e})")]
    SpanViolation { residual: f64 },

    #[error(
        "p = {0} is not an even positive integer; exact Marcinkiewicz-Zygmund \
         equalities fail in general for non-even exponents"
    )]
    OddExponent(u32),

    #[error("power system would have {count} functions (cap {cap})")]
    TooManyCompositions { count: u128, cap: u128 },

    #[error("target matrix is not positive definite (smallest eigenvalue {0:e})")]
    NonPositiveTarget(f64),

    #[error("every point has a vanishing Christoffel function")]
    AllDegenerate,

    #[error("no nonsingular initial design among the candidates")]
    SingularStart,

    #[error("design not converged: det = {det}, required at least {required}")]
    NotConverged { det: f64, required: f64 },

    #[error("tail truncation too short: neglected tail {neglected:e} exceeds {allowed:e}")]
    TruncationTooShort { neglected: f64, allowed: f64 },
}
