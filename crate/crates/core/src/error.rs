use thiserror::Error;

use crate::exactnum::NumError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("bad lengths: {0}")]
    BadLengths(String),
    #[error("bad permutation: {0}")]
    BadPermutation(String),
    #[error("bad interval: {0}")]
    BadInterval(String),
    #[error("no return within {steps} steps")]
    BudgetExhausted { steps: u64 },
    #[error("minimality certificate failed: {0}")]
    NotMinimal(String),
    #[error("expected an irrational number, got {0}")]
    NotIrrational(String),
    #[error("rational input {0} has a terminating expansion")]
    RationalInput(String),
    #[error("scale sequence does not satisfy s_n/n -> infinity: {0}")]
    ScaleTooSlow(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("integer overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
