use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("photon cutoff must be non-negative, got {0}")]
    NegativeCutoff(i64),

    #[error("mode index must be 1 or 2, got {0}")]
    InvalidMode(usize),

    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("operator is not block diagonal in {quantity} (off-block residual {residual:e})")]
    NotBlockDiagonal { quantity: &'static str, residual: f64 },

    #[error("decoupling constraint violated: {relation} (residual {residual:e})")]
    ConstraintViolation { relation: &'static str, residual: f64 },

    #[error("diagonalization condition (Ω₁−Ω₂)sin2θ = −2λcos2θ violated (residual {residual:e})")]
    DiagonalCondition { residual: f64 },

    #[error("phase η = {found} inconsistent with Ω̃₁−Ω̃₂ = {expected}")]
    InconsistentPhase { expected: f64, found: f64 },

    #[error("not in quadratic family: residual {residual:e}; largest unexplained elements: {}", largest.join(", "))]
    NotInQuadraticFamily { residual: f64, largest: Vec<String> },

    #[error("cutoff n_max = {n_max} too small, need at least {required}")]
    InsufficientCutoff { n_max: usize, required: usize },

    #[error("ket |{n1},{n2},{spin}⟩ lies outside the truncation n₁+n₂ ≤ {n_max}")]
    OutOfTruncation {
        n1: usize,
        n2: usize,
        spin: char,
        n_max: usize,
    },

    #[error("operation requires a single-mode space")]
    RequiresSingleMode,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
