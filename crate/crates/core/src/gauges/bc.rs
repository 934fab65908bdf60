use rayon::prelude::*;
use serde::Serialize;

use super::polar::sample_pair;
use crate::error::{LabError, Result};
use super::trace::Metric;
use crate::exactnum::fixed::{self, ONE};
use crate::iet::{FastIet, Iet};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BcReport {
    pub n: u64,
    pub metric: Metric,
    pub c: f64,
    pub samples: u64,
    pub seed: u64,
    pub hits: u64,
    pub estimate: f64,
    pub sigma: f64,
    /// 95% normal confidence interval
    pub ci: (f64, f64),
    /// `4(r−1)/n^{2c}`
    pub bound: f64,
    /// `estimate − 3σ ≤ bound`
    pub within_3_sigma: bool,
}

/// Monte Carlo estimate of the planar measure of
/// `Uₙ = {(x,y) : d(Tⁿx, Tⁿy) < min(d(Tⁿ⁻¹x, Tⁿ⁻¹y), n^{−c})}`.
pub fn proximality_bc_measure(
    t: &Iet,
    n: u64,
    c: f64,
    samples: u64,
    seed: u64,
    metric: Metric,
) -> Result<BcReport> {
    if n < 2 || samples == 0 || !(c > 0.5) {
        return Err(LabError::Invalid("need n >= 2, samples >= 1 and c > 1/2".into()));
    }
    let fast = FastIet::new(t);
    let radius = (n as f64).powf(-c);
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (kx, ky) = sample_pair(seed, i);
            let (mut ox, mut oy) = (fast.orbit_dyadic(kx), fast.orbit_dyadic(ky));
            for _ in 0..n - 1 {
                ox.step();
                oy.step();
            }
            let dist = |a: i128, b: i128| {
                let d = (a - b).abs();
                match metric {
                    Metric::Interval => d,
                    Metric::Circle => d.min(ONE - d),
                }
            };
            let before = dist(ox.bracket().0, oy.bracket().0);
            ox.step();
            oy.step();
            let after = dist(ox.bracket().0, oy.bracket().0);
            // equal translations leave the shadow difference unchanged, so a strict
            // decrease is never an artefact of rounding
            (after < before && fixed::to_f64(after) < radius) as u64
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let sigma = (p * (1.0 - p) / samples as f64).sqrt();
    let bound = 4.0 * (t.r() as f64 - 1.0) / (n as f64).powf(2.0 * c);
    Ok(BcReport {
        n,
        metric,
        c,
        samples,
        seed,
        hits,
        estimate: p,
        sigma,
        ci: (p - 1.96 * sigma, p + 1.96 * sigma),
        bound,
        within_3_sigma: p - 3.0 * sigma <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ExactReal;

    #[test]
    fn isometric_cases_are_empty() {
        let g = Iet::rotation(&ExactReal::golden()).unwrap();
        let rep = proximality_bc_measure(&g, 50, 0.6, 20_000, 1, Metric::Circle).unwrap();
        assert_eq!(rep.hits, 0);
        // with the interval metric only pairs wrapping across 0 can come closer
        let wrap = proximality_bc_measure(&g, 50, 0.6, 20_000, 1, Metric::Interval).unwrap();
        assert!(wrap.within_3_sigma);
        let id = proximality_bc_measure(&Iet::identity(), 10, 0.6, 1000, 1, Metric::Interval).unwrap();
        assert_eq!(id.estimate, 0.0);
        assert!(proximality_bc_measure(&g, 1, 0.6, 10, 1, Metric::Interval).is_err());
        assert!(proximality_bc_measure(&g, 5, 0.5, 10, 1, Metric::Interval).is_err());
    }

    #[test]
    fn three_iet_respects_the_bound() {
        let t = crate::induce::iet3_from_rotation(&"sqrt(2)-1".parse().unwrap(), &ExactReal::ratio(3, 4)).unwrap();
        let rep = proximality_bc_measure(&t, 30, 0.6, 50_000, 9, Metric::Interval).unwrap();
        assert!(rep.within_3_sigma, "{rep:?}");
        assert_eq!(rep, proximality_bc_measure(&t, 30, 0.6, 50_000, 9, Metric::Interval).unwrap());
    }
}
