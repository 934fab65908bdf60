use serde::Serialize;

use super::{first_return, require_minimal, FirstReturn, DEFAULT_MAX_STEPS};
use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;
use crate::iet::Iet;

const KEANE_DEPTH: u64 = 1000;

/// A Rohlin tower `J, T(J), …, T^{N−1}(J)`.
#[derive(Clone, Debug, Serialize)]
pub struct Tower {
    pub base: (ExactReal, ExactReal),
    pub height: u64,
    pub floors: Vec<(ExactReal, ExactReal)>,
    /// Number of intervals of the induced map the tower was cut from.
    pub s: usize,
    /// The inducing interval `I`.
    pub inducing: (ExactReal, ExactReal),
    #[serde(skip)]
    pub first_return: Option<FirstReturn>,
}

impl Tower {
    pub fn base_length(&self) -> ExactReal {
        &self.base.1 - &self.base.0
    }

    /// `N·λ(J)`.
    pub fn measure(&self) -> ExactReal {
        self.base_length().mul_int(&self.height.into())
    }

    /// Exact check that the floors are pairwise disjoint intervals of
    /// `[0,1)`, each as long as the base.
    pub fn floors_disjoint(&self) -> bool {
        let len = self.base_length();
        let mut fl = self.floors.clone();
        if fl.iter().any(|(a, b)| a.is_negative() || *b > ExactReal::one() || &(b - a) != &len) {
            return false;
        }
        fl.sort();
        fl.windows(2).all(|w| w[0].1 <= w[1].0)
    }
}

/// One Rauzy-type step: the right end of `[0,1)` is cut at
/// `1 − min(ℓ_r, ℓ_{π⁻¹(r)})`, after which the induced map has `r` intervals.
fn rauzy_cut(t: &Iet) -> Option<ExactReal> {
    let r = t.r();
    let perm = t.perm();
    let bottom = perm.iter().position(|&p| p == r)?;
    let top_len = &t.lengths()[r - 1];
    let bot_len = &t.lengths()[bottom];
    if top_len == bot_len {
        return None;
    }
    let m = if top_len < bot_len { top_len } else { bot_len };
    Some(&ExactReal::one() - m)
}

/// Tower with `λ(J) < eps` and `N·λ(J) ≥ 1/s`, following the construction
/// of inducing on a short interval and keeping the heaviest column.
pub fn find_tower(t: &Iet, eps: &ExactReal) -> Result<Tower> {
    find_tower_with_budget(t, eps, DEFAULT_MAX_STEPS)
}

pub fn find_tower_with_budget(t: &Iet, eps: &ExactReal, max_steps: u64) -> Result<Tower> {
    if !eps.is_positive() || *eps >= ExactReal::one() {
        return Err(LabError::Invalid(format!("eps = {eps} must lie in (0,1)")));
    }
    let t = t.canonical();
    require_minimal(&t, KEANE_DEPTH)?;
    // shrink I = [0, c) by Rauzy cuts of the current induced map
    let mut c = ExactReal::one();
    let mut current = t.clone();
    let mut guard = 0u64;
    while &c >= eps {
        let cut = rauzy_cut(&current)
            .ok_or_else(|| LabError::NotMinimal("equal last lengths in Rauzy step".into()))?;
        current = first_return(&current, &ExactReal::zero(), &cut, max_steps)?.induced;
        c = &c * &cut;
        guard += 1;
        if guard > max_steps {
            return Err(LabError::BudgetExhausted { steps: max_steps });
        }
    }
    let fr = first_return(&t, &ExactReal::zero(), &c, max_steps)?;
    let best = fr
        .columns
        .iter()
        .max_by(|x, y| {
            let mx = x.length().mul_int(&x.time.into());
            let my = y.length().mul_int(&y.time.into());
            mx.cmp(&my)
        })
        .expect("first return has at least one column");
    let floors = best.floors(&t);
    Ok(Tower {
        base: best.domain.clone(),
        height: best.time,
        floors,
        s: fr.columns.len(),
        inducing: (ExactReal::zero(), c),
        first_return: Some(fr.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::induce::iet3_from_rotation;

    #[test]
    fn golden_tower() {
        let g = Iet::rotation(&ExactReal::golden()).unwrap();
        let eps = ExactReal::ratio(1, 10);
        let tw = find_tower(&g, &eps).unwrap();
        assert!(tw.base_length() < eps);
        assert!(tw.measure() >= ExactReal::ratio(1, 2));
        assert!(tw.floors_disjoint());
        assert_eq!(tw.s, 2);
        // oracle: enumerate the columns directly and take the heaviest
        let fr = tw.first_return.as_ref().unwrap();
        let best = fr
            .columns
            .iter()
            .map(|c| c.length().mul_int(&c.time.into()))
            .max()
            .unwrap();
        assert_eq!(tw.measure(), best);
        assert_eq!(fr.total_measure(), ExactReal::one());
    }

    #[test]
    fn identity_is_rejected() {
        assert!(matches!(
            find_tower(&Iet::identity(), &ExactReal::ratio(1, 2)),
            Err(LabError::NotMinimal(_))
        ));
    }

    #[test]
    fn three_iet_tower() {
        let t = iet3_from_rotation(&"sqrt(2)-1".parse().unwrap(), &ExactReal::ratio(3, 4)).unwrap();
        let eps = ExactReal::ratio(1, 20);
        let tw = find_tower(&t, &eps).unwrap();
        assert!(tw.s <= 3);
        assert!(tw.base_length() < eps);
        assert!(tw.measure() >= ExactReal::ratio(1, 3));
        assert!(tw.floors_disjoint());
    }
}
