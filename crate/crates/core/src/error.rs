use thiserror::Error;

/// Errors raised by the algebra, coalgebra and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rewrite budget of {0} rule applications exceeded")]
    RewriteBudgetExceeded(usize),
    #[error("term budget of {0} terms exceeded")]
    TermBudgetExceeded(usize),
    #[error("length mismatch: {0} coefficients vs {1} operands")]
    LengthMismatch(usize, usize),
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("subcoalgebra dimension cap {0} exceeded")]
    DimCapExceeded(usize),
    #[error("degree cap {0} exceeded")]
    DegreeCapExceeded(usize),
    #[error("series did not converge after {0} terms")]
    NonConvergence(usize),
    #[error("partition mesh {mesh} exceeds admissible step {max}")]
    MeshTooCoarse { mesh: f64, max: f64 },
    #[error("conditional positivity violated: minimal Gram eigenvalue {0}")]
    PositivityViolation(f64),
    #[error("representation only approximately defined: residual {0}")]
    RankDeficiency(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Fock truncation tail bound {0} exceeds tolerance")]
    TailBoundExceeded(f64),
    #[error("element is outside the carrier: {0}")]
    NotInCarrier(String),
}

pub type Result<T> = std::result::Result<T, Error>;
