//! 96-bit fixed-point shadows of exact values.
//!
//! A shadow is `⌊x · 2^96⌋` stored in an `i128`. Shadows only ever serve as
//! filters: every decision drawn from one is either certified by an explicit
//! error bound or redone in exact arithmetic.

use num_traits::ToPrimitive;

use super::ExactReal;

pub(crate) const FRAC_BITS: u32 = 96;
pub(crate) const ONE: i128 = 1 << FRAC_BITS;

/// `⌊x · 2^96⌋`; `x` must satisfy `|x| < 2^30`.
pub(crate) fn shadow(x: &ExactReal) -> i128 {
    x.floor_scaled(FRAC_BITS)
        .to_i128()
        .expect("value too large for a fixed-point shadow")
}

pub(crate) fn to_f64(v: i128) -> f64 {
    v as f64 / ONE as f64
}

/// Shadow of a dyadic `k / 2^53`, which is exact.
pub(crate) fn from_dyadic53(k: u64) -> i128 {
    (k as i128) << (FRAC_BITS - 53)
}
