//! Exact-arithmetic toolkit for interval exchange transformations: orbit
//! gauges, induced maps and towers, discrepancy and τ-entropy, and the
//! continued-fraction constructions used to probe them.

pub mod dioph;
pub mod error;
pub mod exactnum;
pub mod gauges;
pub mod iet;
pub mod induce;
pub mod sampling;

pub use error::{LabError, Result};
pub use exactnum::{CirclePoint, ExactReal};
pub use iet::Iet;
