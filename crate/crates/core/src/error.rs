use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("right-hand side is outside the range (null-space residual {residual:e}, norm {rhs_norm:e})")]
    InconsistentRange { residual: f64, rhs_norm: f64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("no connected Erdős–Rényi sample after {attempts} attempts (q = {q} too small for connectivity)")]
    ConnectivityCap { attempts: usize, q: f64 },

    #[error("invalid mixing matrix: {0}")]
    InvalidMixing(String),

    #[error("combiner is not admissible: {condition} fails (margin {margin:.3e})")]
    Inadmissible { condition: String, margin: f64 },

    #[error("combiner {variant} requires a positive semidefinite mixing matrix; lazify W first")]
    MixingNotPsd { variant: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot split {samples} samples across {agents} agents")]
    Partition { samples: usize, agents: usize },

    #[error("power iteration did not converge within {iterations} iterations")]
    PowerIteration { iterations: usize },

    #[error("iteration diverged at k = {k}")]
    Divergence { k: usize },

    #[error("centralized proximal gradient stopped after {iterations} iterations with residual {residual:e}")]
    CentralizedNoConvergence { iterations: usize, residual: f64 },

    #[error("fixed point check failed: {0}")]
    FixedPoint(String),

    #[error("{check} falsified at k = {k} (slack {slack:e}, tolerance {tolerance:e})")]
    Falsified {
        check: &'static str,
        k: usize,
        slack: f64,
        tolerance: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
