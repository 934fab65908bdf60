use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::cf::{big_strings, ContinuedFraction};
use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;
use crate::gauges::ScaleSequence;

/// Denominators up to this size are considered reachable by orbit experiments.
pub const FEASIBLE_Q: u64 = 1_000_000_000_000;

/// The continued fraction `aₖ = max(Nₖ, 3k²)` built from a fast scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiouvilleConstruction {
    pub scale: ScaleSequence,
    /// `Nₖ = min{m : sₙ/n ≥ k⁴ for all n ≥ m}`, `k = 1..K`
    #[serde(serialize_with = "big_strings")]
    pub n_k: Vec<BigInt>,
    /// false when some `Nₖ` came from floating point or a finite table
    pub n_exact: bool,
    #[serde(serialize_with = "big_strings")]
    pub a: Vec<BigInt>,
    #[serde(serialize_with = "big_strings")]
    pub q: Vec<BigInt>,
    /// `mₖ = ⌊qₖ₊₁/k²⌋`, `k = 1..K−1`
    #[serde(serialize_with = "big_strings")]
    pub m: Vec<BigInt>,
    /// `qₖ₊₁ ≥ mₖ ≥ 3qₖ`, per `k`
    pub chain_holds: Vec<bool>,
    /// whether `q_K` is small enough to simulate
    pub feasible: bool,
    #[serde(skip)]
    pub cf: ContinuedFraction,
}

impl LiouvilleConstruction {
    /// The rational truncation `p_K/q_K`, within `1/(q_K q_{K+1})` of `α`.
    pub fn truncation(&self) -> ExactReal {
        self.cf.convergent(self.cf.depth())
    }
}

/// `⌈e^x⌉`, through a 53-bit mantissa when `x` is large.
fn ceil_exp(x: f64) -> BigInt {
    if x < 36.0 {
        return BigInt::from(x.exp().ceil() as u64);
    }
    let y = x / std::f64::consts::LN_2;
    let m = y.floor();
    let mant = (2f64.powf(y - m) * 2f64.powi(52)).ceil() as u64;
    BigInt::from(mant) << (m as u64 - 52)
}

/// `Nₖ` and whether it is exact.
fn threshold(s: &ScaleSequence, k: u64) -> Result<(BigInt, bool)> {
    let k4 = BigInt::from(k).pow(4);
    let target = 4.0 * (k as f64).ln();
    let slow = || LabError::ScaleTooSlow(s.to_string());
    match s {
        ScaleSequence::Power { alpha } => {
            if *alpha <= 1.0 {
                return Err(slow());
            }
            let e = alpha - 1.0;
            if e.fract() == 0.0 && e <= 64.0 {
                // least n with n^e ≥ k⁴
                let e = e as u32;
                let mut n = k4.nth_root(e);
                if n.pow(e) < k4 {
                    n += 1;
                }
                Ok((n.max(BigInt::one()), true))
            } else {
                Ok((ceil_exp(target / e).max(BigInt::one()), false))
            }
        }
        ScaleSequence::PowerLog { alpha, beta } => {
            if *alpha < 1.0 || (*alpha == 1.0 && *beta <= 0.0) {
                return Err(slow());
            }
            if *alpha == 1.0 {
                // (ln n)^β ≥ k⁴ ⟺ n ≥ e^{k^{4/β}}
                let n = ceil_exp((k as f64).powf(4.0 / beta)).max(BigInt::from(2));
                return Ok((n, false));
            }
            // (α−1) ln n + β ln ln n ≥ 4 ln k, bisected in u = ln n
            let f = |u: f64| (alpha - 1.0) * u + beta * u.ln();
            let (mut lo, mut hi) = (std::f64::consts::LN_2, 1.0f64);
            while f(hi) < target {
                hi *= 2.0;
            }
            if f(lo) >= target {
                return Ok((BigInt::from(2), false));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok((ceil_exp(hi), false))
        }
        ScaleSequence::Table { .. } | ScaleSequence::Expr { .. } => {
            let h = s.horizon().unwrap_or(4096);
            let ratio: Vec<f64> = (1..=h).map(|n| s.value(n).map(|v| v / n as f64)).collect::<Result<_>>()?;
            // s′ₙ/n = min over the tail makes the sequence non-decreasing
            let mut suffix = ratio.clone();
            for i in (0..suffix.len().saturating_sub(1)).rev() {
                suffix[i] = suffix[i].min(suffix[i + 1]);
            }
            let half = suffix.len() / 2;
            if half < 2 || suffix[suffix.len() - 1] <= 1.5 * suffix[half] {
                return Err(slow());
            }
            let need = k4.to_f64().unwrap_or(f64::INFINITY);
            suffix
                .iter()
                .position(|&r| r >= need)
                .map(|i| (BigInt::from(i + 1), false))
                .ok_or_else(|| LabError::Invalid(format!("table too short to certify N_{k}")))
        }
    }
}

/// `aₖ = max(Nₖ, 3k²)` for `k = 1..K`, with the convergent ladder and the
/// chain `qₖ₊₁ ≥ mₖ ≥ 3qₖ`.
pub fn liouville_from_scale(s: &ScaleSequence, k_max: usize) -> Result<LiouvilleConstruction> {
    if k_max == 0 {
        return Err(LabError::Invalid("need K >= 1".into()));
    }
    let mut n_k = Vec::with_capacity(k_max);
    let mut a = Vec::with_capacity(k_max);
    let mut n_exact = true;
    for k in 1..=k_max as u64 {
        let (n, exact) = threshold(s, k)?;
        n_exact &= exact;
        a.push(n.clone().max(BigInt::from(3 * k * k)));
        n_k.push(n);
    }
    let cf = ContinuedFraction::from_quotients(a.clone())?;
    let mut m = Vec::new();
    let mut chain_holds = Vec::new();
    for k in 1..k_max {
        let mk = &cf.q[k + 1] / BigInt::from(k * k);
        chain_holds.push(cf.q[k + 1] >= mk && mk >= &cf.q[k] * 3);
        m.push(mk);
    }
    Ok(LiouvilleConstruction {
        scale: s.clone(),
        n_k,
        n_exact,
        a,
        q: cf.q.clone(),
        m,
        chain_holds,
        feasible: cf.q[k_max] <= BigInt::from(FEASIBLE_Q),
        cf,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AkcReport {
    pub k: usize,
    pub c: ExactReal,
    pub q_k: String,
    pub q_k1: String,
    pub balls: u64,
    /// `λ(A_{k,c})` as an exact number, when there are at most `EXACT_BALLS` balls
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<ExactReal>,
    /// certified enclosure `measure_lo ≤ λ(A_{k,c}) ≤ measure_hi` on a `2^-120` grid
    pub measure_lo: ExactReal,
    pub measure_hi: ExactReal,
    pub measure_f64: f64,
    /// `(4c+1)/k² + (c+1)/k⁴`
    pub bound: ExactReal,
    /// `min(1, Σ 2c/sₙ)`, in floating point
    pub union_bound: f64,
    /// `λ(A_{k,c}) ≤ bound`, decided exactly or from the enclosure
    pub within_bound: bool,
}

/// Ball counts up to which the measure is also computed as one exact number.
pub const EXACT_BALLS: u64 = 2000;

const GRID_BITS: u32 = 120;

/// Total length of a union of intervals.
fn union_length<T: Ord + Clone>(mut pieces: Vec<(T, T)>, zero: T, len: impl Fn(&T, &T) -> T, add: impl Fn(T, T) -> T) -> T {
    pieces.sort();
    let mut total = zero;
    let mut cur: Option<(T, T)> = None;
    for (l, r) in pieces {
        cur = match cur {
            Some((cl, cr)) if l <= cr => Some((cl, if r > cr { r } else { cr })),
            Some((cl, cr)) => {
                total = add(total, len(&cl, &cr));
                Some((l, r))
            }
            None => Some((l, r)),
        };
    }
    if let Some((cl, cr)) = cur {
        total = add(total, len(&cl, &cr));
    }
    total
}

/// Splits `[lo, hi]` at the ends of the circle `[0, one)`.
fn wrap<T: Clone + PartialOrd>(lo: T, hi: T, zero: T, one: T, sub: impl Fn(&T, &T) -> T, add: impl Fn(&T, &T) -> T, out: &mut Vec<(T, T)>) {
    if lo < zero {
        out.push((add(&lo, &one), one));
        out.push((zero, hi));
    } else if hi > one {
        out.push((lo, one.clone()));
        out.push((zero, sub(&hi, &one)));
    } else {
        out.push((lo, hi));
    }
}

/// Measure of `A_{k,c}(α) = ⋃_{qₖ ≤ n < qₖ₊₁} B(nα mod 1, c/sₙ)` on the
/// circle, for an integer power scale. Each ball is rounded outwards and
/// inwards to a `2^-120` grid, which encloses the measure of the union.
pub fn akc_measure(
    alpha: &ExactReal,
    cf: &ContinuedFraction,
    k: usize,
    c: &ExactReal,
    s: &ScaleSequence,
    budget: u64,
) -> Result<AkcReport> {
    let e = s
        .exact_power()
        .ok_or_else(|| LabError::Invalid(format!("A_k,c needs an integer power scale, got {s}")))?;
    if k == 0 || k + 1 >= cf.q.len() {
        return Err(LabError::Invalid(format!("k = {k} needs q_(k+1); expand the fraction further")));
    }
    if !c.is_positive() {
        return Err(LabError::Invalid("c must be positive".into()));
    }
    let (qk, qk1) = (&cf.q[k], &cf.q[k + 1]);
    let balls = (qk1 - qk).to_u64().filter(|&b| b <= budget).ok_or(LabError::BudgetExhausted { steps: budget })?;
    let one = ExactReal::one();
    let half = ExactReal::ratio(1, 2);
    let grid: i128 = 1 << GRID_BITS;
    let keep_exact = balls <= EXACT_BALLS;
    let step = alpha.fract();
    let mut x = alpha.mul_int(qk).fract();
    let mut exact_pieces: Vec<(ExactReal, ExactReal)> = Vec::new();
    let (mut outer, mut inner): (Vec<(i128, i128)>, Vec<(i128, i128)>) = (Vec::new(), Vec::new());
    let mut sum = 0.0;
    let mut full = false;
    let mut n = qk.clone();
    for _ in 0..balls {
        let r = c / &ExactReal::from_bigint(n.pow(e));
        sum += 2.0 * r.to_f64();
        if r >= half {
            full = true;
        } else if !full {
            let fx = x.floor_scaled(GRID_BITS).to_i128().expect("inside [0,1)");
            let rf = r.floor_scaled(GRID_BITS).to_i128().expect("below 1/2");
            let (isub, iadd) = (|a: &i128, b: &i128| a - b, |a: &i128, b: &i128| a + b);
            // x lies in [fx, fx + 1] grid units and r in [rf, rf + 1]
            wrap(fx - rf - 1, fx + rf + 2, 0, grid, isub, iadd, &mut outer);
            if 1 < rf {
                wrap(fx + 1 - rf, fx + rf, 0, grid, isub, iadd, &mut inner);
            }
            if keep_exact {
                let (sub, add) = (|a: &ExactReal, b: &ExactReal| a - b, |a: &ExactReal, b: &ExactReal| a + b);
                wrap(&x - &r, &x + &r, ExactReal::zero(), one.clone(), sub, add, &mut exact_pieces);
            }
        }
        x = &x + &step;
        if x >= one {
            x = &x - &one;
        }
        n += 1;
    }
    let dyadic = |v: i128| ExactReal::from_rational(num_rational::BigRational::new(v.into(), BigInt::from(grid)));
    let (measure, lo, hi) = if full {
        (keep_exact.then(|| one.clone()), one.clone(), one.clone())
    } else {
        let exact = keep_exact.then(|| union_length(exact_pieces, ExactReal::zero(), |a, b| b - a, |a, b| &a + &b));
        let lo = dyadic(union_length(inner, 0, |a, b| b - a, |a, b| a + b));
        let hi = dyadic(union_length(outer, 0, |a, b| b - a, |a, b| a + b).min(grid));
        (exact, lo, hi)
    };
    let kk = BigInt::from(k as u64 * k as u64);
    let four_c_plus_one = &c.mul_int(&BigInt::from(4)) + &one;
    let bound = &(&four_c_plus_one / &ExactReal::from_bigint(kk.clone()))
        + &(&(c + &one) / &ExactReal::from_bigint(&kk * &kk));
    let within_bound = match &measure {
        Some(m) => *m <= bound,
        None if hi <= bound => true,
        None if lo > bound => false,
        None => return Err(LabError::Invalid(format!("measure enclosure straddles the bound at k = {k}"))),
    };
    Ok(AkcReport {
        k,
        c: c.clone(),
        q_k: qk.to_string(),
        q_k1: qk1.to_string(),
        balls,
        measure_f64: measure.as_ref().map(|m| m.to_f64()).unwrap_or_else(|| (&lo + &hi).to_f64() / 2.0),
        measure,
        measure_lo: lo,
        measure_hi: hi,
        bound,
        union_bound: sum.min(1.0),
        within_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dioph::cf_expand;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn square_scale() {
        let s = ScaleSequence::power(2.0).unwrap();
        let l = liouville_from_scale(&s, 5).unwrap();
        assert_eq!(l.n_k, ints(&[1, 16, 81, 256, 625]));
        assert_eq!(l.a, ints(&[3, 16, 81, 256, 625]));
        assert!(l.n_exact && l.chain_holds.iter().all(|&b| b));
        assert_eq!(&l.q[..4], &ints(&[1, 3, 49, 3972])[..]);
        for (k, a) in l.a.iter().enumerate() {
            let k = k as i64 + 1;
            assert!(a >= &BigInt::from(3 * k * k));
        }
    }

    #[test]
    fn slow_and_log_scales() {
        let lin = ScaleSequence::power(1.0).unwrap();
        assert!(matches!(liouville_from_scale(&lin, 3), Err(LabError::ScaleTooSlow(_))));
        let nlog: ScaleSequence = "powlog:1,1".parse().unwrap();
        let l = liouville_from_scale(&nlog, 3).unwrap();
        assert_eq!(l.n_k[0], BigInt::from(3));
        // e^16 = 8886110.52…
        assert_eq!(l.n_k[1], BigInt::from(8886111));
        // e^81 has 36 digits
        assert_eq!(l.n_k[2].to_string().len(), 36);
        assert!(!l.n_exact && !l.feasible);
        let cube = ScaleSequence::power(3.0).unwrap();
        // n² ≥ k⁴ ⟺ n ≥ k²
        assert_eq!(liouville_from_scale(&cube, 3).unwrap().n_k, ints(&[1, 4, 9]));
        let t = ScaleSequence::table((1..=3000).map(|n| (n * n) as f64).collect()).unwrap();
        assert_eq!(liouville_from_scale(&t, 2).unwrap().n_k, ints(&[1, 16]));
    }

    fn brute_measure(alpha: f64, lo: u64, hi: u64, c: f64, grid: usize) -> f64 {
        let mut hit = 0;
        for i in 0..grid {
            let y = (i as f64 + 0.5) / grid as f64;
            if (lo..hi).any(|n| {
                let d = ((n as f64 * alpha - y).rem_euclid(1.0)).min((y - n as f64 * alpha).rem_euclid(1.0));
                (n * n) as f64 * d < c
            }) {
                hit += 1;
            }
        }
        hit as f64 / grid as f64
    }

    #[test]
    fn golden_akc() {
        let g = ExactReal::golden();
        let cf = cf_expand(&g, 12).unwrap();
        let s = ScaleSequence::power(2.0).unwrap();
        let rep = akc_measure(&g, &cf, 5, &ExactReal::one(), &s, 1000).unwrap();
        assert!(rep.within_bound);
        let m = rep.measure.clone().unwrap();
        assert!(rep.measure_lo <= m && m <= rep.measure_hi);
        assert!((rep.measure_hi.to_f64() - rep.measure_lo.to_f64()) < 1e-30);
        assert!(m.to_f64() <= rep.union_bound + 1e-15);
        let oracle = brute_measure(g.to_f64(), 8, 13, 1.0, 200_000);
        assert!((oracle - rep.measure_f64).abs() < 1e-4, "{oracle} vs {}", rep.measure_f64);
        let big = akc_measure(&g, &cf, 1, &ExactReal::from_int(5), &s, 1000).unwrap();
        assert_eq!(big.measure, Some(ExactReal::one()));
        assert!(matches!(akc_measure(&g, &cf, 5, &ExactReal::one(), &s, 2), Err(LabError::BudgetExhausted { .. })));
    }

    #[test]
    fn liouville_akc() {
        let s = ScaleSequence::power(2.0).unwrap();
        let l = liouville_from_scale(&s, 6).unwrap();
        let alpha = l.truncation();
        let rep = akc_measure(&alpha, &l.cf, 2, &ExactReal::one(), &s, 10_000).unwrap();
        assert_eq!(rep.balls, 3972 - 49);
        assert!(rep.within_bound && rep.measure_f64 <= rep.union_bound + 1e-15);
    }
}
