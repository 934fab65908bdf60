//! Continued fractions and the Diophantine constructions around rotations:
//! irrationality type, the scale-driven Liouville construction, `A_{k,c}`
//! measures, Kesten counts and the 3-IET mixing falsifier.

mod cf;
mod kesten;
mod liouville;
mod mixing;

pub use cf::{check_convergent_ineq, cf_expand, type_estimate, ContinuedFraction, ConvergentCheck, TypeEstimate};
pub use kesten::{kesten_window_counts, three_distance_check, KestenReport, ThreeDistanceVerdict, MAX_Q};
pub use liouville::{akc_measure, liouville_from_scale, AkcReport, LiouvilleConstruction, EXACT_BALLS, FEASIBLE_Q};
pub use mixing::{mixing_falsifier, MixingReport, MixingTime};
