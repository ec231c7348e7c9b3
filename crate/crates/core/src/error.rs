use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no initial state")]
    NoInitialState,

    #[error("degenerate width")]
    DegenerateWidth,

    #[error("unidentifiable model")]
    UnidentifiableModel,

    #[error("no field lever arm")]
    NoFieldLeverArm,

    #[error("line not excitable under config")]
    LineNotExcitable,

    #[error("tensor component unidentifiable for {0}")]
    TensorUnidentifiable(String),

    #[error("relaxation did not converge after {iterations} sweeps (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
