use rayon::prelude::*;
use serde::Serialize;

use super::polar::Thresholds;
use super::scale::ScaleSequence;
use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;
use crate::iet::{FastIet, Iet};
use crate::sampling::{dyadic, dyadic_value, sample_rng};

/// The point sequence `x₁, x₂, …` of a contact gauge.
#[derive(Clone, Debug, PartialEq)]
pub enum PointSequence {
    Constant(ExactReal),
    /// `xₙ = Tⁿ(x₀)`
    Orbit { iet: Iet, x0: ExactReal },
}

impl PointSequence {
    fn points(&self, n_max: u64) -> Vec<f64> {
        match self {
            PointSequence::Constant(c) => vec![c.to_f64(); n_max as usize],
            PointSequence::Orbit { iet, x0 } => {
                let fast = FastIet::new(iet);
                let mut o = fast.orbit(x0);
                (0..n_max)
                    .map(|_| {
                        o.step();
                        o.approx()
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisiveReport {
    pub horizons: Vec<u64>,
    pub samples: u64,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub below: Vec<f64>,
    pub middle: Vec<f64>,
    pub above: Vec<f64>,
    pub note: String,
}

/// Fractions of uniformly sampled `y` whose contact value
/// `min_{√N < n ≤ N} sₙ|xₙ − y|` lies below, between and above the thresholds.
pub fn decisiveness_diagnostic(
    points: &PointSequence,
    s: &ScaleSequence,
    samples: u64,
    seed: u64,
    horizons: &[u64],
    th: Thresholds,
) -> Result<DecisiveReport> {
    if horizons.is_empty() || horizons[0] < 4 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Invalid("horizons must be increasing and at least 4".into()));
    }
    let n_max = *horizons.last().unwrap();
    let eval = s.evaluator(n_max)?;
    let first = s.first_index();
    let xs = points.points(n_max);
    let values: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let y = dyadic_value(dyadic(&mut sample_rng(seed, i))).to_f64();
            horizons
                .iter()
                .map(|&big_n| {
                    let start = ((big_n as f64).sqrt() as u64 + 1).max(first);
                    (start..=big_n)
                        .map(|n| eval.at(n) * (xs[n as usize - 1] - y).abs())
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();
    let frac = |h: usize, pred: &dyn Fn(f64) -> bool| {
        values.iter().filter(|v| pred(v[h])).count() as f64 / samples.max(1) as f64
    };
    let idx = 0..horizons.len();
    Ok(DecisiveReport {
        horizons: horizons.to_vec(),
        samples,
        seed,
        thresholds: th,
        below: idx.clone().map(|h| frac(h, &|v| v <= th.theta_low)).collect(),
        middle: idx.clone().map(|h| frac(h, &|v| th.theta_low < v && v < th.theta_high)).collect(),
        above: idx.map(|h| frac(h, &|v| v >= th.theta_high)).collect(),
        note: "finite-horizon diagnostic over the tail window (sqrt N, N]".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_escapes() {
        let s = ScaleSequence::power(1.0).unwrap();
        let th = Thresholds { theta_low: 1e-3, theta_high: 10.0, delta: 0.05 };
        let rep = decisiveness_diagnostic(&PointSequence::Constant(ExactReal::zero()), &s, 200, 4, &[1 << 12, 1 << 16], th).unwrap();
        // the tail minimum is ⌈√N⌉·|y|, which leaves the window once √N|y| > 10
        assert!(rep.middle[1] < rep.middle[0]);
        assert!(rep.above[1] > 0.9);
    }

    #[test]
    fn golden_orbit_middle_mass_shrinks() {
        let g = Iet::rotation(&ExactReal::golden()).unwrap();
        let seq = PointSequence::Orbit { iet: g, x0: ExactReal::zero() };
        let s = ScaleSequence::power(1.0).unwrap();
        let th = Thresholds { theta_low: 1e-2, theta_high: 1e2, delta: 0.05 };
        let rep = decisiveness_diagnostic(&seq, &s, 300, 2, &[1 << 8, 1 << 18], th).unwrap();
        assert!(rep.middle[1] < rep.middle[0], "{rep:?}");
    }
}
