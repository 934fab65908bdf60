//! Exact scalars: rationals and real quadratic irrationals, plus the
//! circle `[0,1)` with addition and subtraction mod 1.

mod circle;
pub(crate) mod fixed;
mod parse;
mod real;

pub use circle::{circle_add, circle_sub, nearest_int_dist, CirclePoint};
pub use real::ExactReal;
pub(crate) use real::join_fields;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("incompatible quadratic fields: sqrt({0}) and sqrt({1})")]
    IncompatibleField(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0}")]
    Domain(String),
    #[error("cannot parse {input:?} at byte {pos}: {reason}")]
    Parse {
        input: String,
        pos: usize,
        reason: String,
    },
}

/// Exact comparison; see [`ExactReal::compare`].
pub fn compare(a: &ExactReal, b: &ExactReal) -> Result<std::cmp::Ordering, NumError> {
    a.compare(b)
}
