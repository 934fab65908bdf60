use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::cf::cf_expand;
use super::kesten::kesten_window_counts;
use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;
use crate::iet::{FastIet, Iet};
use crate::induce::{first_return, DEFAULT_MAX_STEPS};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingTime {
    pub m: usize,
    pub q: u64,
    pub b_m: u64,
    /// `q_m − 1 − b_m`
    pub time: u64,
    /// rotation steps `M` with `T^time(x) = x + Mα` on the inducing interval
    pub displacement: Vec<u64>,
    /// `max − min + 1` over `displacement`
    pub displacement_span: u64,
    /// cells met by the image of each cell
    pub hit_cells: Vec<Vec<usize>>,
    pub missed_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingReport {
    pub alpha: ExactReal,
    pub t: ExactReal,
    pub cell_count: usize,
    /// the induced 3-IET, rescaled to `[0,1)`
    pub iet: String,
    pub times: Vec<MixingTime>,
}

impl MixingReport {
    /// Smallest missed count over all times and cells.
    pub fn min_missed(&self) -> usize {
        self.times.iter().flat_map(|t| t.missed_counts.iter().copied()).min().unwrap_or(0)
    }

    /// Widest block of consecutive integers needed to hold the displacement
    /// at any time.
    pub fn max_displacement_span(&self) -> u64 {
        self.times.iter().map(|t| t.displacement_span).max().unwrap_or(0)
    }
}

/// For `T` the first return of `R_α` to `I = [1−t, 1)` (rescaled), and
/// `b_m` the maximal visit count of a `q_m`-segment of the rotation to the
/// complement `[0, 1−t)`, records which of `cells` equal cells the image
/// `T^{q_m−1−b_m}(cell)` meets.
pub fn mixing_falsifier(
    alpha: &ExactReal,
    t: &ExactReal,
    m_range: std::ops::RangeInclusive<usize>,
    cells: usize,
) -> Result<MixingReport> {
    if alpha.is_rational() {
        return Err(LabError::NotIrrational(alpha.to_string()));
    }
    if !t.is_positive() || *t >= ExactReal::one() {
        return Err(LabError::Invalid(format!("t = {t} is outside (0,1)")));
    }
    if cells == 0 || m_range.is_empty() {
        return Err(LabError::Invalid("need at least one cell and one m".into()));
    }
    let one = ExactReal::one();
    let start = &one - t;
    let rot = Iet::rotation(alpha)?;
    let fr = first_return(&rot, &start, &one, DEFAULT_MAX_STEPS)?;
    let tind = fr.induced.clone();
    let fast = FastIet::new(&tind);
    let cf = cf_expand(alpha, *m_range.end())?;
    let ncells = BigInt::from(cells);
    let mut times = Vec::new();
    for m in m_range {
        let k = kesten_window_counts(alpha, &ExactReal::zero(), &start, m)?;
        let q = cf.q[m].to_u64().expect("checked by the count");
        let time = (q - 1)
            .checked_sub(k.b_m)
            .ok_or_else(|| LabError::Invalid(format!("b_{m} = {} exceeds q_{m} − 1", k.b_m)))?;
        let p = tind.power(time);
        let bp = p.breakpoints();
        let mut disp = BTreeSet::new();
        for j in 0..p.r() {
            let mid = &(&bp[j] + &bp[j + 1]) / &ExactReal::from_int(2);
            let mut o = fast.orbit(&mid);
            for _ in 0..time {
                o.step();
            }
            let steps: u64 = o.visits().iter().zip(&fr.return_times).map(|(v, r)| v * r).sum();
            disp.insert(steps);
        }
        let displacement: Vec<u64> = disp.into_iter().collect();
        let mut hit_cells = Vec::with_capacity(cells);
        for c in 0..cells {
            let (c0, c1) = (ExactReal::ratio(c as i64, cells as i64), ExactReal::ratio(c as i64 + 1, cells as i64));
            let mut hit = BTreeSet::new();
            for j in 0..p.r() {
                let lo = if bp[j] > c0 { &bp[j] } else { &c0 };
                let hi = if bp[j + 1] < c1 { &bp[j + 1] } else { &c1 };
                if lo >= hi {
                    continue;
                }
                let h = &p.translations()[j];
                let (a, b) = ((lo + h).mul_int(&ncells), (hi + h).mul_int(&ncells));
                let first = a.floor().to_usize().expect("inside [0,1)");
                // last cell with positive overlap is ⌈b⌉ − 1
                let bf = b.floor();
                let last = if ExactReal::from_bigint(bf.clone()) == b { bf - 1 } else { bf };
                hit.extend(first..=last.to_usize().expect("inside [0,1)"));
            }
            hit_cells.push(hit.into_iter().collect::<Vec<_>>());
        }
        let missed_counts = hit_cells.iter().map(|h| cells - h.len()).collect();
        times.push(MixingTime {
            m,
            q,
            b_m: k.b_m,
            time,
            displacement_span: displacement.last().unwrap() - displacement[0] + 1,
            displacement,
            hit_cells,
            missed_counts,
        });
    }
    Ok(MixingReport {
        alpha: alpha.clone(),
        t: t.clone(),
        cell_count: cells,
        iet: tind.to_string(),
        times,
    })
}
