use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the zero vector has no capacity or moment map")]
    ZeroVector,

    #[error("amplitude of term {0} is not finite")]
    NonFiniteAmplitude(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),

    #[error("enumeration budget exceeded: at least {count} tables, budget {budget}")]
    EnumerationBudget { count: BigUint, budget: u64 },

    #[error("root finder did not converge, residual {residual:e}")]
    RootFinding { residual: f64 },

    #[error("unsupported group action: {0}")]
    UnsupportedGroup(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
