use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unimodular: det = {det}")]
    NotUnimodular { det: i128 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue solver did not converge for matrix {matrix}")]
    EigenNonConvergence { matrix: String },

    #[error("restricted inverse norms not summable: no power k <= {max_power} with norm < 1")]
    TailNotSummable { max_power: usize },

    #[error("integer overflow in exact word product")]
    WordOverflow,

    #[error("non-finite sample at grid point {point:?}")]
    SampleNotFinite { point: Vec<f64> },

    #[error("point inversion did not converge after {iterations} iterations (residual {residual:e})")]
    InvertDiverged { iterations: usize, residual: f64 },

    #[error("series budget exceeded: tail bound {achieved:e} after max_n = {max_n} terms")]
    BudgetExceeded { achieved: f64, max_n: usize },

    #[error("stacked projectors have rank {rank} < {n}; add words")]
    InsufficientSpan { rank: usize, n: usize },

    #[error("conjugating map not certified as a homeomorphism (Lipschitz bound {lip_bound:.4})")]
    ConjugatorNotCertified { lip_bound: f64 },

    #[error("induced map entry {value} is not within 1e-6 of an integer")]
    NotInteger { value: f64 },

    #[error("induced map varies across probe points")]
    NotConstant,

    #[error("dimension {0} too large for neighbourhood torus distance (max 6)")]
    DimensionTooLarge(usize),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed SCGF data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
