use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pauli string length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("trace of {0} is not real")]
    NonRealTrace(String),

    #[error("dense representation of {qubits} qubits exceeds the limit of {limit}")]
    DimensionTooLarge { qubits: usize, limit: usize },

    #[error("bloch vector ({x}, {y}, {z}) is not normalized (|b|^2 = {norm_sq})")]
    NotNormalized {
        x: f64,
        y: f64,
        z: f64,
        norm_sq: f64,
    },

    #[error("cannot parse pauli string {0:?}")]
    Parse(String),

    #[error("invalid party count {n}: {reason}")]
    InvalidPartyCount { n: usize, reason: &'static str },

    #[error("bit string {0:?} is not in the MABK index set")]
    NotInIndexSet(Vec<u8>),

    #[error("MABK expression invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("objective monomial {0} is missing from the moment matrix (hierarchy level too low)")]
    MissingMonomial(String),

    #[error("SDP solver did not converge after {iterations} iterations (gap {gap:.3e}, primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e})")]
    MaxIterations {
        iterations: usize,
        gap: f64,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("SDP numerical breakdown at iteration {iteration}: {reason}")]
    NumericalBreakdown { iteration: usize, reason: String },

    #[error("SDP instance is infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
