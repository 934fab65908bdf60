//! Scale sequences, finite-horizon gauge traces and the Monte Carlo
//! diagnostics built on them. Every estimate here is a running minimum over
//! an explicit horizon, never a claimed limit.

mod bc;
mod decisive;
mod discrepancy;
mod polar;
mod scale;
mod tau;
mod trace;

pub use bc::{proximality_bc_measure, BcReport};
pub use decisive::{decisiveness_diagnostic, DecisiveReport, PointSequence};
pub use discrepancy::{discrepancy, omega_discrepancy, DiscMode, Discrepancy, OmegaReport, Window};
pub use polar::{
    estimate_constants, polarization_histogram, sample_pair, ConstantsReport, KindEstimate,
    PolarizationReport, Thresholds,
};
pub use scale::{classify_scale, ScaleEval, ScaleFlags, ScaleSequence};
pub use tau::{loglog_slope, tau_entropy, TauReport};
pub use trace::{
    dyadic_ladder, gauge_trace, gauge_trace_with, GaugeKind, GaugeTrace, Metric, TraceMode,
    TraceOptions, EXACT_DEFAULT_LIMIT,
};
