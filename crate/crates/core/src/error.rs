use thiserror::Error;

/// Errors raised by the library. Every fallible operation returns [`Result`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {k} outside 0..={n}")]
    Index { n: u64, k: u64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("|f(x)|/psi(x) not representable at x = {x}")]
    PsiRatioOverflow { x: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("step h = {h} too small: cancellation exceeds quadrature accuracy")]
    StepTooSmall { h: f64 },

    #[error("truncation budget exceeded: {needed} terms needed, cap is {cap}")]
    TruncationBudgetExceeded { needed: u64, cap: u64 },

    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),

    #[error("function is not in C_psi: f(0) = {f0}, f(1) = {f1}")]
    NotInCpsi { f0: f64, f1: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("unknown function '{0}'")]
    UnknownFunction(String),

    #[error("unknown operator family '{0}'")]
    UnknownFamily(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
