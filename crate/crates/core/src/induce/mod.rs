//! First-return maps, Rohlin towers and the 4-IET tower bookkeeping.

mod book;
mod tower;

pub use book::{
    generate_sequence, tower_book, BRule, BookFlags, HeuristicRule, TowerBook,
};
pub use tower::{find_tower, find_tower_with_budget, Tower};

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;
use crate::iet::{keane_certificate, Iet};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// One column of a first-return decomposition: the points of `domain`
/// return to the inducing interval after exactly `time` steps, all by the
/// same translation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Column {
    pub domain: (ExactReal, ExactReal),
    pub time: u64,
    pub translation: ExactReal,
}

impl Column {
    pub fn length(&self) -> ExactReal {
        &self.domain.1 - &self.domain.0
    }

    /// The floors `Tⁱ(domain)`, `0 ≤ i < time`, each an interval.
    pub fn floors(&self, t: &Iet) -> Vec<(ExactReal, ExactReal)> {
        let len = self.length();
        let mut a = self.domain.0.clone();
        let mut out = Vec::with_capacity(self.time as usize);
        for _ in 0..self.time {
            out.push((a.clone(), &a + &len));
            a = t.apply(&a);
        }
        out
    }
}

/// The first-return map of `T` to `I = [a, b)`.
#[derive(Clone, Debug)]
pub struct FirstReturn {
    pub interval: (ExactReal, ExactReal),
    /// Maximal pieces with constant return time and translation, in order.
    pub columns: Vec<Column>,
    /// The induced map rescaled to `[0,1)`.
    pub induced: Iet,
    /// Return time of each interval of `induced`.
    pub return_times: Vec<u64>,
}

impl FirstReturn {
    /// `Σ Nₖ·|Iₖ|`, which is 1 when the floors tile the circle.
    pub fn total_measure(&self) -> ExactReal {
        self.columns.iter().fold(ExactReal::zero(), |acc, c| {
            &acc + &c.length().mul_int(&c.time.into())
        })
    }
}

struct Piece {
    start: ExactReal,
    end: ExactReal,
    shift: ExactReal,
    time: u64,
}

/// Computes the first return of `T` to `[a, b)` by pushing pieces of the
/// interval forward, splitting them at the discontinuities of `T` and at
/// the endpoints of `I`, until every piece is back in `I`.
pub fn first_return(t: &Iet, a: &ExactReal, b: &ExactReal, max_steps: u64) -> Result<FirstReturn> {
    if a.is_negative() || b <= a || *b > ExactReal::one() {
        return Err(LabError::BadInterval(format!("[{a}, {b}) is not a subinterval of [0,1)")));
    }
    let inner = &t.breakpoints()[1..t.r()];
    let mut active = vec![Piece {
        start: a.clone(),
        end: b.clone(),
        shift: ExactReal::zero(),
        time: 0,
    }];
    let mut done: Vec<Column> = Vec::new();
    let mut steps = 0u64;
    while !active.is_empty() {
        if steps >= max_steps {
            return Err(LabError::BudgetExhausted { steps: max_steps });
        }
        steps += 1;
        let mut next = Vec::with_capacity(active.len() + 2);
        for piece in active {
            // split at the discontinuities of T and translate
            let mut k = inner.partition_point(|s| s <= &piece.start);
            let mut p = piece.start.clone();
            loop {
                let q = if k < inner.len() && inner[k] < piece.end {
                    inner[k].clone()
                } else {
                    piece.end.clone()
                };
                let h = &t.translations()[k];
                let (u, v) = (&p + h, &q + h);
                let shift = &piece.shift + h;
                // split the image at the endpoints of I
                let mut cuts = vec![u.clone()];
                for e in [a, b] {
                    if &u < e && e < &v {
                        cuts.push(e.clone());
                    }
                }
                cuts.push(v.clone());
                for w in cuts.windows(2) {
                    let (lo, hi) = (&w[0], &w[1]);
                    let pc = Piece {
                        start: lo.clone(),
                        end: hi.clone(),
                        shift: shift.clone(),
                        time: piece.time + 1,
                    };
                    if a <= lo && hi <= b {
                        done.push(Column {
                            domain: (lo - &shift, hi - &shift),
                            time: pc.time,
                            translation: shift.clone(),
                        });
                    } else {
                        next.push(pc);
                    }
                }
                if q == piece.end {
                    break;
                }
                p = q;
                k += 1;
            }
        }
        active = next;
    }
    done.sort_by(|x, y| x.domain.0.cmp(&y.domain.0));
    let mut columns: Vec<Column> = Vec::with_capacity(done.len());
    for c in done {
        match columns.last_mut() {
            Some(last)
                if last.time == c.time && last.translation == c.translation && last.domain.1 == c.domain.0 =>
            {
                last.domain.1 = c.domain.1;
            }
            _ => columns.push(c),
        }
    }
    let scale = (b - a).recip()?;
    let lengths: Vec<ExactReal> = columns.iter().map(|c| &c.length() * &scale).collect();
    let images: Vec<ExactReal> = columns
        .iter()
        .map(|c| &c.domain.0 + &c.translation)
        .collect();
    let mut order: Vec<usize> = (0..columns.len()).collect();
    order.sort_by(|&i, &j| images[i].cmp(&images[j]));
    let mut perm = vec![0; columns.len()];
    for (rank, &k) in order.iter().enumerate() {
        perm[k] = rank + 1;
    }
    let induced = Iet::new(lengths, perm)?;
    let return_times = columns.iter().map(|c| c.time).collect();
    Ok(FirstReturn {
        interval: (a.clone(), b.clone()),
        columns,
        induced,
        return_times,
    })
}

/// The 3-IET obtained by inducing `R_α` on `[0, b)` and rescaling.
pub fn iet3_from_rotation(alpha: &ExactReal, b: &ExactReal) -> Result<Iet> {
    if alpha.is_rational() {
        return Err(LabError::NotIrrational(alpha.to_string()));
    }
    if !b.is_positive() || *b > ExactReal::one() {
        return Err(LabError::BadInterval(format!("b = {b} is outside (0,1]")));
    }
    let rot = Iet::rotation(&alpha.fract())?;
    Ok(first_return(&rot, &ExactReal::zero(), b, DEFAULT_MAX_STEPS)?.induced)
}

/// `p·leb + (1−p)·sing`, the length vector of the renormalized 4-IET `S_p`
/// (used with permutation `4213`).
pub fn renormalized_lengths(
    leb: &[ExactReal; 4],
    sing: &[ExactReal; 4],
    p: &ExactReal,
) -> Result<[ExactReal; 4]> {
    for (name, v) in [("leb", leb), ("sing", sing)] {
        if v.iter().any(|x| x.is_negative()) {
            return Err(LabError::BadLengths(format!("{name} has a negative entry")));
        }
        let total = v.iter().fold(ExactReal::zero(), |a, x| &a + x);
        if total != ExactReal::one() {
            return Err(LabError::BadLengths(format!("{name} sums to {total}")));
        }
    }
    if p.is_negative() || *p > ExactReal::one() {
        return Err(LabError::Invalid(format!("p = {p} is outside [0,1]")));
    }
    let q = &ExactReal::one() - p;
    Ok(std::array::from_fn(|i| &(p * &leb[i]) + &(&q * &sing[i])))
}

/// Checks the distinct-orbit condition before inducing, as the
/// return-time analysis presumes minimality.
pub(crate) fn require_minimal(t: &Iet, depth: u64) -> Result<()> {
    let v = keane_certificate(t, depth);
    if v.is_certified() {
        Ok(())
    } else {
        Err(LabError::NotMinimal(format!("{v:?}")))
    }
}
