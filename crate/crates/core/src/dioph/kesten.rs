use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::cf::cf_expand;
use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;

/// Largest `q_m` the counting checks will enumerate.
pub const MAX_Q: u64 = 2_000_000;

fn q_of(alpha: &ExactReal, m: usize) -> Result<u64> {
    let cf = cf_expand(alpha, m)?;
    let q = &cf.q[m];
    q.to_u64().filter(|&q| q <= MAX_Q).ok_or(LabError::BudgetExhausted { steps: MAX_Q })
}

// Orbit points `{kα}` are tracked as `k·⌊α·2^B⌋ mod 2^B`, which undershoots
// the true value by less than `k` units; decisions closer than that to a
// boundary are redone exactly.
const B: u32 = 100;
const MODULUS: i128 = 1 << B;

fn fixed(x: &ExactReal) -> i128 {
    x.floor_scaled(B).to_i128().expect("value in [0, 1]")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThreeDistanceVerdict {
    pub m: usize,
    pub q: u64,
    pub holds: bool,
    /// cells `(r/q, (r+1)/q)` holding no point or more than one
    pub bad_cells: Vec<u64>,
}

/// Checks that every `(r/q_m, (r+1)/q_m)` holds exactly one of `ka mod 1`,
/// `1 ≤ k ≤ q_m`.
pub fn three_distance_check(alpha: &ExactReal, m: usize) -> Result<ThreeDistanceVerdict> {
    let q = q_of(alpha, m)?;
    let qb = BigInt::from(q);
    let mut hits = vec![0u32; q as usize];
    let a = fixed(&alpha.fract());
    let mut x = 0i128;
    for k in 1..=q {
        x = (x + a) % MODULUS;
        // an irrational point never sits on r/q, so the cell is ⌊q {kα}⌋
        let (lo, hi) = ((x * q as i128) >> B, ((x + k as i128) * q as i128) >> B);
        let r = if lo == hi && x + (k as i128) < MODULUS {
            lo as usize
        } else {
            alpha.mul_int(&BigInt::from(k)).fract().mul_int(&qb).floor().to_usize().expect("cell index")
        };
        hits[r] += 1;
    }
    let bad_cells: Vec<u64> = (0..q).filter(|&r| hits[r as usize] != 1).collect();
    Ok(ThreeDistanceVerdict {
        m,
        q,
        holds: bad_cells.is_empty(),
        bad_cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KestenReport {
    pub m: usize,
    pub q: u64,
    pub window: (ExactReal, ExactReal),
    /// every value of `#{k < q : x + ka mod 1 ∈ J}` as `x` ranges over `[0,1)`
    pub counts: Vec<u64>,
    /// the largest count
    pub b_m: u64,
    /// `⌊|J| q⌋`
    pub center: u64,
    pub consecutive: bool,
    /// all counts lie in `[center − 1, center + 2]`
    pub within_window: bool,
}

/// The set of visit counts of an orbit segment of length `q_m` to
/// `J = [u, v)`, computed exactly by sweeping `x` over its breakpoints.
pub fn kesten_window_counts(alpha: &ExactReal, u: &ExactReal, v: &ExactReal, m: usize) -> Result<KestenReport> {
    if u.is_negative() || v <= u || *v > ExactReal::one() {
        return Err(LabError::BadInterval(format!("[{u}, {v}) is not a subinterval of [0,1)")));
    }
    let q = q_of(alpha, m)?;
    let counts = match sweep_fixed(alpha, u, v, q) {
        Some(c) => c,
        None => sweep_exact(alpha, u, v, q),
    };
    let len = v - u;
    let center = len.mul_int(&BigInt::from(q)).floor().to_u64().expect("non-negative");
    let lo = center.saturating_sub(1);
    Ok(KestenReport {
        m,
        q,
        window: (u.clone(), v.clone()),
        b_m: *counts.last().unwrap(),
        consecutive: counts.windows(2).all(|w| w[1] == w[0] + 1),
        within_window: counts.iter().all(|&c| lo <= c && c <= center + 2),
        counts,
        center,
    })
}

/// Sorted distinct counts from a running total and its jumps; a jump
/// flagged `true` shares its position with the next one.
fn distinct_counts(mut count: i64, jumps: impl Iterator<Item = (bool, i64)>) -> Vec<u64> {
    let mut counts = vec![count];
    for (same_as_next, d) in jumps {
        count += d;
        if !same_as_next {
            counts.push(count);
        }
    }
    let mut counts: Vec<u64> = counts.into_iter().map(|c| c as u64).collect();
    counts.sort_unstable();
    counts.dedup();
    counts
}

/// The sweep on the `2^-B` grid, or `None` when some comparison is too close
/// to call.
fn sweep_fixed(alpha: &ExactReal, u: &ExactReal, v: &ExactReal, q: u64) -> Option<Vec<u64>> {
    if u.is_zero() && *v == ExactReal::one() {
        return Some(vec![q]);
    }
    let a = fixed(&alpha.fract());
    let (uf, vf) = (fixed(u), fixed(v));
    let margin = q as i128 + 2;
    // the point k = 0 sits exactly at 0
    let mut count = i64::from(u.is_zero());
    let mut events: Vec<(i128, i64)> = Vec::with_capacity(2 * q as usize);
    for (edge, exact_zero, delta) in [(uf, u.is_zero(), 1), (vf, *v == ExactReal::one(), -1)] {
        if !exact_zero {
            if edge <= margin || edge >= MODULUS - margin {
                return None;
            }
            events.push((edge, delta));
        }
    }
    let mut x = a;
    for k in 1..q as i128 {
        // {kα}·2^B lies in [x, x + k], each edge in [e, e + 1]
        let wraps = x + k >= MODULUS;
        let inside = !wraps && x > uf && x + k < vf;
        let outside = if wraps { x > vf && x + k - MODULUS < uf } else { x + k < uf || x > vf };
        match (inside, outside) {
            (true, _) => count += 1,
            (false, true) => {}
            (false, false) => return None,
        }
        for (edge, delta) in [(uf, 1), (vf, -1)] {
            let p = (edge - x).rem_euclid(MODULUS);
            if p <= margin || p >= MODULUS - margin {
                return None;
            }
            events.push((p, delta));
        }
        x = (x + a) % MODULUS;
    }
    events.sort_unstable();
    if events.windows(2).any(|w| w[1].0 - w[0].0 <= 2 * margin) {
        return None;
    }
    Some(distinct_counts(count, events.into_iter().map(|(_, d)| (false, d))))
}

fn sweep_exact(alpha: &ExactReal, u: &ExactReal, v: &ExactReal, q: u64) -> Vec<u64> {
    let one = ExactReal::one();
    let mut ka = ExactReal::zero();
    let mut count = 0i64;
    let mut events: Vec<(ExactReal, i64)> = Vec::with_capacity(2 * q as usize);
    for _ in 0..q {
        if u <= &ka && &ka < v {
            count += 1;
        }
        // point k enters J at x ≡ u − ka and leaves at x ≡ v − ka
        for (edge, delta) in [(u, 1), (v, -1)] {
            let p = (edge - &ka).fract();
            if !p.is_zero() {
                events.push((p, delta));
            }
        }
        ka = &ka + alpha;
        if ka >= one {
            ka = &ka - &one;
        }
    }
    events.sort();
    let same_as_next: Vec<bool> = events.windows(2).map(|w| w[0].0 == w[1].0).chain([false]).collect();
    distinct_counts(count, same_as_next.into_iter().zip(events).map(|(same, (_, d))| (same, d)))
}
