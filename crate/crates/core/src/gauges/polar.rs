use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scale::ScaleSequence;
use super::trace::{gauge_trace_with, GaugeKind, Metric, TraceMode, TraceOptions};
use crate::error::{LabError, Result};
use crate::exactnum::fixed::{self, ONE};
use crate::iet::{FastIet, Iet};
use crate::sampling::{dyadic, dyadic_value, sample_rng};

/// Smallness and largeness thresholds and the tolerance `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub theta_low: f64,
    pub theta_high: f64,
    pub delta: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            theta_low: 1e-3,
            theta_high: 1e3,
            delta: 0.05,
        }
    }
}

/// The dyadic pair `(x, y)` of sample `i`.
pub fn sample_pair(seed: u64, i: u64) -> (u64, u64) {
    let mut rng = sample_rng(seed, i);
    let x = dyadic(&mut rng);
    (x, dyadic(&mut rng))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KindEstimate {
    pub kind: GaugeKind,
    pub alpha: Vec<f64>,
    /// fraction of samples with running min below `theta_low`, per α
    pub below: Vec<f64>,
    pub above: Vec<f64>,
    /// largest α whose below-fraction is at least `1 − δ`
    pub c_hat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub horizon: u64,
    pub samples: u64,
    pub seed: u64,
    pub metric: Metric,
    pub thresholds: Thresholds,
    pub estimates: Vec<KindEstimate>,
    pub note: String,
}

const KINDS: [GaugeKind; 3] = [GaugeKind::Phi, GaugeKind::Psi, GaugeKind::Rho];

/// Polarization fractions of the `n^α` gauges for every α in the grid, from
/// one orbit pass per sampled pair.
pub fn estimate_constants(
    t: &Iet,
    seed: u64,
    samples: u64,
    alpha_grid: &[f64],
    horizon: u64,
    metric: Metric,
    th: Thresholds,
) -> Result<ConstantsReport> {
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(*a > 0.0)) || alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Invalid("alpha grid must be positive and increasing".into()));
    }
    if samples == 0 || horizon == 0 {
        return Err(LabError::Invalid("samples and horizon must be positive".into()));
    }
    let fast = FastIet::new(t);
    let m = alpha_grid.len();
    // per sample: min over n of α ln n + ln d, for each kind and α
    let mins: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (kx, ky) = sample_pair(seed, i);
            let (x0, y0) = (fixed::from_dyadic53(kx), fixed::from_dyadic53(ky));
            let mut ox = fast.orbit(&dyadic_value(kx));
            let mut oy = fast.orbit(&dyadic_value(ky));
            let mut best = vec![f64::INFINITY; 3 * m];
            for n in 1..=horizon {
                ox.step();
                oy.step();
                let xn = ox.bracket().0;
                let ln_n = (n as f64).ln();
                for (j, other) in [y0, oy.bracket().0, x0].into_iter().enumerate() {
                    let mut diff = (xn - other).abs();
                    if metric == Metric::Circle {
                        diff = diff.min(ONE - diff);
                    }
                    let ld = fixed::to_f64(diff).ln();
                    for (a, alpha) in alpha_grid.iter().enumerate() {
                        let v = alpha * ln_n + ld;
                        let b = &mut best[j * m + a];
                        if v < *b {
                            *b = v;
                        }
                    }
                }
            }
            best
        })
        .collect();
    let (lo, hi) = (th.theta_low.ln(), th.theta_high.ln());
    let estimates = KINDS
        .iter()
        .enumerate()
        .map(|(j, &kind)| {
            let frac = |pred: &dyn Fn(f64) -> bool, a: usize| {
                mins.iter().filter(|b| pred(b[j * m + a])).count() as f64 / samples as f64
            };
            let below: Vec<f64> = (0..m).map(|a| frac(&|v| v < lo, a)).collect();
            let above: Vec<f64> = (0..m).map(|a| frac(&|v| v > hi, a)).collect();
            let c_hat = alpha_grid
                .iter()
                .zip(&below)
                .filter(|(_, b)| **b >= 1.0 - th.delta)
                .map(|(a, _)| *a)
                .last();
            KindEstimate {
                kind,
                alpha: alpha_grid.to_vec(),
                below,
                above,
                c_hat,
            }
        })
        .collect();
    Ok(ConstantsReport {
        horizon,
        samples,
        seed,
        metric,
        thresholds: th,
        estimates,
        note: format!("finite-horizon estimate at N = {horizon}; running minima, not limits"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolarizationReport {
    pub kind: GaugeKind,
    pub scale: ScaleSequence,
    pub horizons: Vec<u64>,
    /// `log10` bin edges; bin 0 is everything below the first edge, the last
    /// bin everything at or above the last edge
    pub log10_edges: Vec<f64>,
    /// `counts[h][b]` over samples, per horizon
    pub counts: Vec<Vec<u64>>,
    pub warning: Option<String>,
}

impl PolarizationReport {
    pub fn bin_of(&self, v: f64) -> usize {
        let l = v.log10();
        self.log10_edges.partition_point(|e| *e <= l)
    }
}

/// Histogram of running minima over sampled pairs, per horizon.
pub fn polarization_histogram(
    t: &Iet,
    kind: GaugeKind,
    s: &ScaleSequence,
    seed: u64,
    samples: u64,
    horizons: &[u64],
    metric: Metric,
) -> Result<PolarizationReport> {
    let n_max = *horizons.last().ok_or_else(|| LabError::Invalid("no horizons".into()))?;
    let fast = FastIet::new(t);
    let eval = s.evaluator(n_max)?;
    let opts = TraceOptions { metric, mode: TraceMode::Float };
    let traces = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (kx, ky) = sample_pair(seed, i);
            let y = dyadic_value(ky);
            let y = kind.needs_y().then_some(&y);
            gauge_trace_with(kind, &fast, s, &eval, &dyadic_value(kx), y, horizons, &opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let flags = s.classify();
    let warning = (!flags.two_jumpy).then(|| {
        format!("{s} is not two-jumpy; extremality of the gauge is not expected for such scales")
    });
    let mut rep = PolarizationReport {
        kind,
        scale: s.clone(),
        horizons: horizons.to_vec(),
        log10_edges: (-8..=8).map(f64::from).collect(),
        counts: vec![vec![0; 18]; horizons.len()],
        warning,
    };
    for tr in &traces {
        for (h, v) in tr.running_min.iter().enumerate() {
            let b = rep.bin_of(*v);
            rep.counts[h][b] += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ExactReal;

    #[test]
    fn golden_rotation_constants() {
        let g = Iet::rotation(&ExactReal::golden()).unwrap();
        let grid = [0.25, 0.5, 2.0];
        let rep = estimate_constants(&g, 3, 40, &grid, 20_000, Metric::Circle, Thresholds::default()).unwrap();
        let psi = &rep.estimates[1];
        // isometry: ‖Tⁿx − Tⁿy‖ is constant, so nothing falls below θ_low
        assert_eq!(psi.below, vec![0.0, 0.0, 0.0]);
        assert_eq!(psi.c_hat, None);
        let phi = &rep.estimates[0];
        assert!(phi.below[0] > 0.5 && phi.below[0] >= phi.below[1] && phi.below[1] >= phi.below[2]);
        // determinism across calls
        let again = estimate_constants(&g, 3, 40, &grid, 20_000, Metric::Circle, Thresholds::default()).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn histogram_bins() {
        let g = Iet::rotation(&ExactReal::golden()).unwrap();
        let s = ScaleSequence::power(1.0).unwrap();
        let rep = polarization_histogram(&g, GaugeKind::Rho, &s, 1, 30, &[100, 10_000], Metric::Interval).unwrap();
        assert_eq!(rep.counts[1].iter().sum::<u64>(), 30);
        // the recurrence gauge of the golden rotation stays of order one
        let unit = rep.bin_of(0.5);
        let near: u64 = rep.counts[1][unit - 1..=unit + 1].iter().sum();
        assert_eq!(near, 30);
        assert!(rep.warning.is_none());
        let log: ScaleSequence = "powlog:0,1".parse().unwrap();
        let w = polarization_histogram(&g, GaugeKind::Rho, &log, 1, 2, &[10], Metric::Interval).unwrap();
        assert!(w.warning.is_some());
        assert_eq!(rep.bin_of(0.0), 0);
        assert_eq!(rep.bin_of(1e9), 17);
    }
}
