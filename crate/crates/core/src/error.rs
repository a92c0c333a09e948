use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix does not have full row rank (rank {rank} < {rows})")]
    RankDeficient { rank: usize, rows: usize },
    #[error("window of length {window} does not fit a sequence of length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("data too short: {0}")]
    DataTooShort(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("system is not SISO")]
    NotSiso,
    #[error("system is not observable")]
    NotObservable,
    #[error("system is not minimal")]
    NotMinimal,
    #[error("no vector relative degree exists")]
    NoVectorRelativeDegree,
    #[error("decoupling matrix is singular")]
    SingularG,
    #[error("input is not persistently exciting of order {order}")]
    NotPersistentlyExciting { order: usize },
    #[error("no trajectory of the data matches the prescribed past and future input")]
    Infeasible,
    #[error("the output continuation is not unique")]
    NotUnique,
    #[error("zero-dynamics continuation is not unique")]
    ContinuationNotUnique,
    #[error("zero-dynamics dimension {found} differs from n - sum(r) = {expected}")]
    DimensionMismatchZd { expected: usize, found: usize },
    #[error("constraints could not be met after {attempts} attempts")]
    InfeasibleConstraints { attempts: usize },
    #[error("eigenvalue magnitude shells do not match across sampling times")]
    ShellMismatch,
    #[error("no branch index with |k| <= {k_max} matches eigenvalue {index}")]
    NoBranchMatch { index: usize, k_max: usize },
    #[error("several branch indices match eigenvalue {index}")]
    AmbiguousBranch { index: usize },
    #[error("repeated discrete eigenvalue resolves to distinct continuous eigenvalues")]
    DuplicateAlias,
    #[error("A is not diagonalizable within tolerance")]
    Defective,
    #[error("the zero-order-hold integral is numerically singular")]
    NearSingularIntegral,
    #[error("re-discretization check failed (relative error {error:e})")]
    ValidationFailed { error: f64 },
    #[error("Markov parameters disagree across sampling rates (relative error {error:e})")]
    MarkovMismatch { error: f64 },
    #[error("Markov-parameter Hankel matrix has rank {rank} < declared order {n}")]
    RankDeficientHankel { rank: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
