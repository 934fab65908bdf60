use serde::Serialize;

use super::scale::fit_line;
use super::trace::dyadic_ladder;
use crate::error::{LabError, Result};
use crate::iet::{DeltaPrimeBuilder, Iet};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauReport {
    pub n_max: u64,
    /// `(n, card Δ′ₙ)` along the dyadic ladder
    pub table: Vec<(u64, usize)>,
    /// max of `log card / log n` over the upper half of the ladder
    pub tau_hat: f64,
    /// log-log slope over the upper half of the ladder
    pub slope: Option<f64>,
    pub note: String,
}

/// Slope of `ln y` against `ln n` over the points with `lo ≤ n ≤ hi`.
pub fn loglog_slope(points: &[(u64, f64)], lo: u64, hi: u64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, y)| (lo..=hi).contains(n) && *y > 0.0)
        .map(|&(n, y)| ((n as f64).ln(), y.ln()))
        .collect();
    (pts.len() >= 2).then(|| fit_line(&pts).1)
}

/// `card Δ′ₙ(T)` on the ladder `2, 4, …, n_max`, by exact set arithmetic.
pub fn tau_entropy(t: &Iet, n_max: u64) -> Result<TauReport> {
    if n_max < 2 {
        return Err(LabError::Invalid("tau entropy needs n_max >= 2".into()));
    }
    let ladder: Vec<u64> = dyadic_ladder(n_max).into_iter().filter(|&n| n >= 2).collect();
    let mut b = DeltaPrimeBuilder::new(t)?;
    let mut table = Vec::with_capacity(ladder.len());
    for &n in &ladder {
        while b.k() < n {
            b.step()?;
        }
        table.push((n, *b.cards().last().expect("at least one step")));
    }
    let upper = &table[table.len() / 2..];
    let tau_hat = upper
        .iter()
        .map(|&(n, c)| (c as f64).ln() / (n as f64).ln())
        .fold(0.0f64, f64::max);
    let pts: Vec<(u64, f64)> = table.iter().map(|&(n, c)| (n, c as f64)).collect();
    let slope = loglog_slope(&pts, upper[0].0, n_max);
    Ok(TauReport {
        n_max,
        table,
        tau_hat,
        slope,
        note: format!("finite-horizon estimate up to n = {n_max}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ExactReal;

    #[test]
    fn rotations_and_identity() {
        let r = Iet::rotation(&"sqrt(2)-1".parse().unwrap()).unwrap();
        let rep = tau_entropy(&r, 64).unwrap();
        assert!(rep.table.iter().all(|&(_, c)| c == 1));
        assert_eq!(rep.tau_hat, 0.0);
        assert_eq!(tau_entropy(&Iet::identity(), 16).unwrap().tau_hat, 0.0);
        assert!(tau_entropy(&r, 1).is_err());
    }

    #[test]
    fn cubic_bound_holds_for_a_three_iet() {
        let t = crate::induce::iet3_from_rotation(&ExactReal::golden(), &ExactReal::ratio(2, 3)).unwrap();
        let rep = tau_entropy(&t, 128).unwrap();
        for &(n, c) in &rep.table {
            assert!((c as u64) < 9 * n * n * n);
        }
        assert!(rep.table.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(u64, f64)> = (1..10).map(|k| (1u64 << k, (1u64 << (2 * k)) as f64)).collect();
        assert!((loglog_slope(&pts, 4, 512).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts, 600, 700), None);
    }
}
