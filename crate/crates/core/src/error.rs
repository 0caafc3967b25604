use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not SPD: {0}")]
    NotSpd(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty stencil")]
    EmptyStencil,

    #[error("A-NN search exceeded max(|p|,|q|) <= {cap}")]
    SearchBound { cap: i64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    CgNotConverged { iterations: usize, residual: f64 },

    #[error("explicit scheme unstable at step {step}: sup norm grew by {growth:.1}x; try a smaller time step")]
    Unstable { step: usize, growth: f64 },

    #[error("power iteration did not converge after {0} iterations")]
    PowerIterationNotConverged(usize),

    #[error("grid too large for dense eigensolver: {cells} cells (cap {cap})")]
    GridTooLarge { cells: usize, cap: usize },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} {unit}, found {found}")]
    TruncatedPayload { expected: usize, found: usize, unit: &'static str },

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("unsupported magic {0:?}")]
    UnsupportedMagic(String),

    #[error("empty clip range")]
    EmptyClipRange,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
