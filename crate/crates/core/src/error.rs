use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian: max |M - M†| = {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error("trace is {trace:.12}, expected 1")]
    NotUnitTrace { trace: f64 },

    #[error("state is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("steady-state system is singular (smallest relative singular value {ratio:.3e})")]
    SingularSystem { ratio: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("susceptibility pole: |denominator| = {magnitude:.3e}")]
    DividedPole { magnitude: f64 },

    #[error("bad detuning grid: {0}")]
    BadGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("reference value is zero")]
    ZeroReference,

    #[error("blockade denominator sqrt((2Δc)²+Ωc²) = {value:.3e} is degenerate")]
    DegenerateDenominator { value: f64 },

    #[error("tomography design matrix is rank deficient")]
    SingularDesign,

    #[error("tomography record: {0}")]
    BadRecord(String),

    #[error("fit failed after {iterations} iterations (last chi2 = {chi2:.6e})")]
    FitFailure { chi2: f64, iterations: usize },

    #[error("bad fit input: {0}")]
    BadInput(String),

    #[error("frequency resolution {resolution:.4e} exceeds γrg/5 = {limit:.4e} (2π×MHz); window must be at least {min_window_ns:.1} ns")]
    ResolutionTooCoarse {
        resolution: f64,
        limit: f64,
        min_window_ns: f64,
    },
}
