use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::scale::{ScaleEval, ScaleSequence};
use crate::error::{LabError, Result};
use crate::exactnum::fixed::{self, shadow, ONE};
use crate::exactnum::{CirclePoint, ExactReal};
use crate::iet::{FastIet, FastOrbit, Iet};

/// Horizons up to which exact mode is the default.
pub const EXACT_DEFAULT_LIMIT: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeKind {
    /// `sₙ·d(Tⁿx, y)`
    Phi,
    /// `sₙ·d(Tⁿx, Tⁿy)`
    Psi,
    /// `sₙ·d(Tⁿx, x)`
    Rho,
}

impl GaugeKind {
    pub fn needs_y(self) -> bool {
        !matches!(self, GaugeKind::Rho)
    }
}

impl fmt::Display for GaugeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaugeKind::Phi => "phi",
            GaugeKind::Psi => "psi",
            GaugeKind::Rho => "rho",
        })
    }
}

impl FromStr for GaugeKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(GaugeKind::Phi),
            "psi" => Ok(GaugeKind::Psi),
            "rho" => Ok(GaugeKind::Rho),
            _ => Err(LabError::Invalid(format!("unknown gauge kind `{s}`"))),
        }
    }
}

/// Distance on `[0,1)`: `|x − y|` or the circle distance `‖x − y‖`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Interval,
    Circle,
}

impl FromStr for Metric {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(Metric::Interval),
            "circle" => Ok(Metric::Circle),
            _ => Err(LabError::Invalid(format!("unknown metric `{s}`"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Interval => "interval",
            Metric::Circle => "circle",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    /// exact up to [`EXACT_DEFAULT_LIMIT`], float beyond
    #[default]
    Auto,
    Exact,
    Float,
}

impl FromStr for TraceMode {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(TraceMode::Auto),
            "exact" => Ok(TraceMode::Exact),
            "float" => Ok(TraceMode::Float),
            _ => Err(LabError::Invalid(format!("unknown trace mode `{s}`"))),
        }
    }
}

impl fmt::Display for TraceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceMode::Auto => "auto",
            TraceMode::Exact => "exact",
            TraceMode::Float => "float",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub metric: Metric,
    pub mode: TraceMode,
}

/// Running minima of `sₙ·d(·,·)` along one orbit, read off at each horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeTrace {
    pub kind: GaugeKind,
    pub metric: Metric,
    pub x: ExactReal,
    pub y: Option<ExactReal>,
    pub horizons: Vec<u64>,
    pub running_min: Vec<f64>,
    /// the minima as exact numbers, in exact mode
    pub running_min_exact: Option<Vec<ExactReal>>,
    pub argmin: Vec<u64>,
    pub exact: bool,
    /// absolute bound on the error of `running_min` in float mode
    pub float_error: f64,
    /// orbit lookups the fixed-point filter could not decide
    pub fallbacks: u64,
}

/// `1, 2, 4, …` below `n_max`, then `n_max`.
pub fn dyadic_ladder(n_max: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..64).map(|k| 1u64 << k).take_while(|&h| h < n_max).collect();
    v.push(n_max);
    v
}

fn check_horizons(horizons: &[u64]) -> Result<()> {
    if horizons.is_empty() || horizons[0] == 0 {
        return Err(LabError::Invalid("horizons must be positive and non-empty".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Invalid("horizons must be strictly increasing".into()));
    }
    Ok(())
}

/// One pass over `n = s.first_index() ..= max horizon`, recording
/// `min sₙ·d` at every horizon.
pub fn gauge_trace(
    kind: GaugeKind,
    t: &Iet,
    s: &ScaleSequence,
    x: &CirclePoint,
    y: Option<&CirclePoint>,
    horizons: &[u64],
    opts: &TraceOptions,
) -> Result<GaugeTrace> {
    let fast = FastIet::new(t);
    let eval = s.evaluator(*horizons.last().unwrap_or(&1))?;
    gauge_trace_with(kind, &fast, s, &eval, x.value(), y.map(|p| p.value()), horizons, opts)
}

/// As [`gauge_trace`], reusing a prepared map and scale evaluator.
#[allow(clippy::too_many_arguments)]
pub fn gauge_trace_with(
    kind: GaugeKind,
    fast: &FastIet,
    s: &ScaleSequence,
    eval: &ScaleEval,
    x: &ExactReal,
    y: Option<&ExactReal>,
    horizons: &[u64],
    opts: &TraceOptions,
) -> Result<GaugeTrace> {
    check_horizons(horizons)?;
    if kind.needs_y() != y.is_some() {
        return Err(LabError::Invalid(format!(
            "{kind} gauge {} a second point",
            if kind.needs_y() { "needs" } else { "takes no" }
        )));
    }
    let n_max = *horizons.last().unwrap();
    let exact_scale = s.exact_power();
    let exact = match opts.mode {
        TraceMode::Exact => true,
        TraceMode::Float => false,
        TraceMode::Auto => n_max <= EXACT_DEFAULT_LIMIT && exact_scale.is_some(),
    };
    if exact && exact_scale.is_none() {
        return Err(LabError::Invalid(format!("exact mode needs an integer power scale, got {s}")));
    }
    let mut scan = Scan::new(kind, fast, x, y, opts.metric);
    let first = s.first_index();
    let mut out = GaugeTrace {
        kind,
        metric: opts.metric,
        x: x.clone(),
        y: y.cloned(),
        horizons: horizons.to_vec(),
        running_min: Vec::with_capacity(horizons.len()),
        running_min_exact: exact.then(Vec::new),
        argmin: Vec::with_capacity(horizons.len()),
        exact,
        float_error: 0.0,
        fallbacks: 0,
    };
    let mut best_f = f64::INFINITY;
    let mut best_n = 0u64;
    let mut best_exact: Option<ExactReal> = None;
    let mut best_err = 0.0f64;
    let mut hi = horizons.iter().peekable();
    for n in 1..=n_max {
        scan.advance();
        if n >= first {
            let sn = eval.at(n);
            let (d, e) = scan.distance();
            if exact {
                // skip n only when its value certainly exceeds the best so far
                let lo = sn * (d - e).max(0.0) * (1.0 - 1e-12);
                if best_exact.is_none() || lo < best_f * (1.0 + 1e-12) {
                    let k = exact_scale.unwrap_or(1);
                    let v = scan.exact_distance().mul_int(&BigInt::from(n).pow(k));
                    if best_exact.as_ref().is_none_or(|b| &v < b) {
                        best_f = v.to_f64();
                        best_n = n;
                        best_exact = Some(v);
                    }
                }
            } else {
                let v = sn * d;
                if v < best_f {
                    best_f = v;
                    best_n = n;
                    best_err = sn * e + v * 1e-15;
                }
            }
        }
        while hi.peek() == Some(&&n) {
            hi.next();
            out.running_min.push(best_f);
            out.argmin.push(best_n);
            if let Some(v) = out.running_min_exact.as_mut() {
                v.push(best_exact.clone().unwrap_or_else(ExactReal::zero));
            }
            out.float_error = out.float_error.max(best_err);
        }
    }
    out.fallbacks = scan.fallbacks();
    Ok(out)
}

/// Orbit state for one gauge: the moving point(s) and the reference.
struct Scan<'a> {
    kind: GaugeKind,
    metric: Metric,
    ox: FastOrbit<'a>,
    oy: Option<FastOrbit<'a>>,
    x0: ExactReal,
    y0: Option<ExactReal>,
    // shadow of the fixed reference point (x for rho, y for phi)
    reference: i128,
}

impl<'a> Scan<'a> {
    fn new(kind: GaugeKind, fast: &'a FastIet, x: &ExactReal, y: Option<&ExactReal>, metric: Metric) -> Self {
        let reference = match kind {
            GaugeKind::Phi => shadow(y.unwrap()),
            _ => shadow(x),
        };
        Scan {
            kind,
            metric,
            ox: fast.orbit(x),
            oy: (kind == GaugeKind::Psi).then(|| fast.orbit(y.unwrap())),
            x0: x.clone(),
            y0: y.cloned(),
            reference,
        }
    }

    #[inline]
    fn advance(&mut self) {
        self.ox.step();
        if let Some(o) = self.oy.as_mut() {
            o.step();
        }
    }

    /// Float distance and an absolute bound on its error.
    #[inline]
    fn distance(&self) -> (f64, f64) {
        let (a, ea) = self.ox.bracket();
        let (b, eb) = match &self.oy {
            Some(o) => o.bracket(),
            None => (self.reference, self.reference + 1),
        };
        let ulps = (ea - a) + (eb - b) + 2;
        let mut diff = (a - b).abs();
        if self.metric == Metric::Circle {
            diff = diff.min(ONE - diff);
        }
        let d = fixed::to_f64(diff);
        (d, fixed::to_f64(ulps) + d * 2f64.powi(-52))
    }

    fn exact_distance(&self) -> ExactReal {
        let xn = self.ox.exact();
        let other = match self.kind {
            GaugeKind::Phi => self.y0.clone().unwrap(),
            GaugeKind::Psi => self.oy.as_ref().unwrap().exact(),
            GaugeKind::Rho => self.x0.clone(),
        };
        let diff = &xn - &other;
        match self.metric {
            Metric::Interval => diff.abs(),
            Metric::Circle => diff.nearest_int_dist(),
        }
    }

    fn fallbacks(&self) -> u64 {
        self.ox.fallbacks() + self.oy.as_ref().map_or(0, |o| o.fallbacks())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Iet {
        Iet::rotation(&ExactReal::golden()).unwrap()
    }

    fn cp(s: &str) -> CirclePoint {
        CirclePoint::new(s.parse().unwrap()).unwrap()
    }

    fn fib(k: usize) -> u64 {
        let (mut a, mut b) = (0u64, 1u64);
        for _ in 0..k {
            (a, b) = (b, a + b);
        }
        a
    }

    #[test]
    fn golden_rho_trace_exact() {
        let s = ScaleSequence::power(1.0).unwrap();
        let hs = [1000, 10_000, 100_000];
        let opts = TraceOptions { mode: TraceMode::Exact, ..Default::default() };
        let tr = gauge_trace(GaugeKind::Rho, &golden(), &s, &CirclePoint::zero(), None, &hs, &opts).unwrap();
        let inv_sqrt5 = 1.0 / 5f64.sqrt();
        for (i, &h) in hs.iter().enumerate() {
            // oracle: largest odd-index Fibonacci number ≤ h
            let q = (1..60).step_by(2).map(fib).filter(|&f| f <= h).max().unwrap();
            assert_eq!(tr.argmin[i], q, "horizon {h}");
            let v = tr.running_min_exact.as_ref().unwrap()[i].clone();
            let expect = (&ExactReal::from_int(q as i64) * &ExactReal::golden()).fract().mul_int(&BigInt::from(q));
            assert_eq!(v, expect);
            assert!(tr.running_min[i] > inv_sqrt5);
        }
        assert!(tr.running_min.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn float_matches_exact() {
        let t: Iet = "iet: lengths=[sqrt(2)/4,1/3,1-1/3-sqrt(2)/4] perm=[3,1,2]".parse().unwrap();
        let s = ScaleSequence::power(1.0).unwrap();
        let hs = dyadic_ladder(5000);
        for kind in [GaugeKind::Phi, GaugeKind::Psi, GaugeKind::Rho] {
            let y = kind.needs_y().then(|| cp("5/7"));
            for metric in [Metric::Interval, Metric::Circle] {
                let run = |mode| {
                    let opts = TraceOptions { metric, mode };
                    gauge_trace(kind, &t, &s, &cp("1/9"), y.as_ref(), &hs, &opts).unwrap()
                };
                let (e, f) = (run(TraceMode::Exact), run(TraceMode::Float));
                assert_eq!(e.argmin, f.argmin, "{kind} {metric}");
                for (a, b) in e.running_min.iter().zip(&f.running_min) {
                    assert!((a - b).abs() <= f.float_error + 1e-15 * a, "{kind}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn fixed_point_phi_is_zero() {
        // the 2-interval swap with equal lengths has no fixed point; use a 3-IET fixing its middle
        let t: Iet = "iet: lengths=[1/4,1/2,1/4] perm=[3,2,1]".parse().unwrap();
        let p = cp("1/2");
        assert_eq!(t.apply(p.value()), *p.value());
        let s = ScaleSequence::power(2.0).unwrap();
        let tr = gauge_trace(GaugeKind::Phi, &t, &s, &p, Some(&p), &[10, 100], &TraceOptions::default()).unwrap();
        assert_eq!(tr.running_min, vec![0.0, 0.0]);
        assert_eq!(tr.argmin[0], 1);
    }

    #[test]
    fn rotations_are_isometries() {
        let r = Iet::rotation(&"sqrt(3)-1".parse().unwrap()).unwrap();
        let (x, y) = (cp("1/5"), cp("0.9"));
        let s = ScaleSequence::power(0.5).unwrap();
        let opts = TraceOptions { metric: Metric::Circle, mode: TraceMode::Float };
        let tr = gauge_trace(GaugeKind::Psi, &r, &s, &x, Some(&y), &[1, 10, 1000], &opts).unwrap();
        assert!(tr.running_min.iter().all(|&v| (v - 0.3).abs() < 1e-12));
        assert_eq!(tr.argmin, vec![1, 1, 1]);
    }

    #[test]
    fn argument_checks() {
        let s = ScaleSequence::power(1.0).unwrap();
        let o = TraceOptions::default();
        let z = CirclePoint::zero();
        assert!(gauge_trace(GaugeKind::Rho, &golden(), &s, &z, None, &[10, 10], &o).is_err());
        assert!(gauge_trace(GaugeKind::Phi, &golden(), &s, &z, None, &[10], &o).is_err());
        assert!(gauge_trace(GaugeKind::Rho, &golden(), &s, &z, Some(&z), &[10], &o).is_err());
        let half = ScaleSequence::power(0.5).unwrap();
        let ex = TraceOptions { mode: TraceMode::Exact, ..o };
        assert!(gauge_trace(GaugeKind::Rho, &golden(), &half, &z, None, &[10], &ex).is_err());
        assert_eq!(dyadic_ladder(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(dyadic_ladder(8), vec![1, 2, 4, 8]);
    }
}
