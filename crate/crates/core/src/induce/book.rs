//! Integer bookkeeping for the towers `O(I_j^{(k)})` of the 4-IET
//! construction: tower heights `b_{k,j}`, conditions 1–3, consequences 1–2,
//! the two convergent series and the measure bound of the convergence lemma.

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;

/// Update rule for the tower heights other than `b_{·,2}`.
///
/// Only the visit pattern of tower 2 is known,
/// `b_{k+1,2} = b_{k,4} + m_{k+1}·b_{k,2} + n_{k+1}·b_{k,3}`;
/// the remaining heights have to be supplied by a rule.
pub trait BRule {
    fn name(&self) -> &str;
    /// Returns `(b_{k+1,1}, b_{k+1,3}, b_{k+1,4})` from row `k`.
    fn next(&self, prev: &[BigInt; 4], m_next: &BigInt, n_next: &BigInt) -> (BigInt, BigInt, BigInt);
}

/// Heuristic rule mirroring the tower-2 pattern with the roles permuted:
/// `b₁ ← b₁ + b₄`, `b₃ ← b₂ + n·b₃`, `b₄ ← b₂ + b₃`.
#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicRule;

impl BRule for HeuristicRule {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn next(&self, b: &[BigInt; 4], _m: &BigInt, n: &BigInt) -> (BigInt, BigInt, BigInt) {
        (&b[0] + &b[3], &b[1] + n * &b[2], &b[1] + &b[2])
    }
}

fn big_vec<S: Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn big_rows<S: Serializer>(v: &[[BigInt; 4]], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
}

fn rat_vec<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| ExactReal::from_rational(x.clone()).to_string()))
}

/// A condition or consequence evaluated at one index `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub k: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BookFlags {
    /// `n_k³ < m_k`, for `k = 1..K`.
    pub condition1: Vec<Flag>,
    /// `b_{k−1,2}² < m_k < b_{k−1,2}⁵`, for `k = 2..K`.
    pub condition2: Vec<Flag>,
    /// `b_{k,2}²·2^{2k}·m_k < n_{k+1}`, for `k = 1..K−1`.
    pub condition3: Vec<Flag>,
    /// `b_{k,2} ≥ b_{k,j}` for all `j`, for `k = 1..K`.
    pub consequence1: Vec<Flag>,
    /// `b_{k−1,2}³ < b_{k+1,2} < 4·b_{k−1,2}⁶`, for `k = 2..K−1`.
    pub consequence2: Vec<Flag>,
}

impl BookFlags {
    pub fn all_hold(&self) -> bool {
        [
            &self.condition1,
            &self.condition2,
            &self.condition3,
            &self.consequence1,
            &self.consequence2,
        ]
        .iter()
        .all(|v| v.iter().all(|f| f.holds))
    }

    /// `(which, k)` of every failed check.
    pub fn violations(&self) -> Vec<(&'static str, usize)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("condition1", &self.condition1),
            ("condition2", &self.condition2),
            ("condition3", &self.condition3),
            ("consequence1", &self.consequence1),
            ("consequence2", &self.consequence2),
        ] {
            out.extend(v.iter().filter(|f| !f.holds).map(|f| (name, f.k)));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerBook {
    pub depth: usize,
    pub rule: String,
    #[serde(serialize_with = "big_vec")]
    pub m: Vec<BigInt>,
    #[serde(serialize_with = "big_vec")]
    pub n: Vec<BigInt>,
    /// Row `k−1` holds `(b_{k,1}, b_{k,2}, b_{k,3}, b_{k,4})`.
    #[serde(serialize_with = "big_rows")]
    pub b: Vec<[BigInt; 4]>,
    pub flags: BookFlags,
    /// `n_{k+1}·b_{k,3} / b_{k+1,2}` for `k = 1..K−1`.
    #[serde(serialize_with = "rat_vec")]
    pub series4_terms: Vec<BigRational>,
    #[serde(serialize_with = "rat_vec")]
    pub series4_partial: Vec<BigRational>,
    /// `n_k / m_k` for `k = 1..K`.
    #[serde(serialize_with = "rat_vec")]
    pub series5_terms: Vec<BigRational>,
    #[serde(serialize_with = "rat_vec")]
    pub series5_partial: Vec<BigRational>,
    /// Convergence-lemma bound for `k = 2..K−1`, as printed.
    pub conv_bound: Vec<f64>,
    pub conv_r: u32,
}

impl TowerBook {
    pub fn b2(&self, k: usize) -> &BigInt {
        &self.b[k - 1][1]
    }

    /// Whether each series' terms shrink at least by half from one index to
    /// the next.
    pub fn series_halving(&self) -> (bool, bool) {
        fn halving(v: &[BigRational]) -> bool {
            let two = BigRational::from_integer(BigInt::from(2));
            v.windows(2).all(|w| &w[1] * &two <= w[0])
        }
        (halving(&self.series4_terms), halving(&self.series5_terms))
    }
}

fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        x.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        (x >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn ratio_f64(n: &BigInt, d: &BigInt) -> f64 {
    ExactReal::from_rational(BigRational::new(n.clone(), d.clone())).to_f64()
}

/// Fills the table from `b₁` with the stated `b₂` recurrence and `rule`,
/// then evaluates every condition and consequence. Violations are recorded
/// in the flags, never raised.
pub fn tower_book(
    m: &[BigInt],
    n: &[BigInt],
    seed_b: [BigInt; 4],
    rule: &dyn BRule,
    conv_r: u32,
) -> Result<TowerBook> {
    let depth = m.len();
    if depth < 2 || n.len() != depth {
        return Err(LabError::Invalid(format!(
            "m and n must have equal length K >= 2 (got {} and {})",
            m.len(),
            n.len()
        )));
    }
    if m.iter().chain(n.iter()).chain(seed_b.iter()).any(|v| !v.is_positive()) {
        return Err(LabError::Invalid("all entries must be positive integers".into()));
    }
    let mut b = vec![seed_b];
    for k in 1..depth {
        let prev = &b[k - 1];
        let b2 = &prev[3] + &m[k] * &prev[1] + &n[k] * &prev[2];
        let (b1, b3, b4) = rule.next(prev, &m[k], &n[k]);
        b.push([b1, b2, b3, b4]);
    }
    let b2 = |k: usize| &b[k - 1][1];
    let bj = |k: usize, j: usize| &b[k - 1][j - 1];
    let mm = |k: usize| &m[k - 1];
    let nn = |k: usize| &n[k - 1];

    let mut flags = BookFlags::default();
    for k in 1..=depth {
        flags.condition1.push(Flag {
            k,
            holds: nn(k).pow(3) < *mm(k),
        });
        flags.consequence1.push(Flag {
            k,
            holds: (1..=4).all(|j| b2(k) >= bj(k, j)),
        });
    }
    for k in 2..=depth {
        flags.condition2.push(Flag {
            k,
            holds: b2(k - 1).pow(2) < *mm(k) && *mm(k) < b2(k - 1).pow(5),
        });
    }
    for k in 1..depth {
        let lhs = b2(k).pow(2) * (BigInt::one() << (2 * k)) * mm(k);
        flags.condition3.push(Flag {
            k,
            holds: lhs < *nn(k + 1),
        });
    }
    for k in 2..depth {
        let lo = b2(k - 1).pow(3);
        let hi = b2(k - 1).pow(6) * 4;
        flags.consequence2.push(Flag {
            k,
            holds: lo < *b2(k + 1) && *b2(k + 1) < hi,
        });
    }

    let partial = |terms: &[BigRational]| {
        let mut acc = BigRational::zero();
        terms
            .iter()
            .map(|t| {
                acc += t;
                acc.clone()
            })
            .collect::<Vec<_>>()
    };
    let series4_terms: Vec<BigRational> = (1..depth)
        .map(|k| BigRational::new(nn(k + 1) * bj(k, 3), b2(k + 1).clone()))
        .collect();
    let series5_terms: Vec<BigRational> = (1..=depth)
        .map(|k| BigRational::new(nn(k).clone(), mm(k).clone()))
        .collect();
    let series4_partial = partial(&series4_terms);
    let series5_partial = partial(&series5_terms);

    let r = BigInt::from(conv_r);
    let conv_bound = (2..depth)
        .map(|k| {
            let t1 = 4.0 / (nn(k + 1) * bj(k, 3)).to_f64().unwrap_or(f64::INFINITY);
            let t2 = ratio_f64(&BigInt::from(2), &b2(k).pow(2));
            let t3 = ratio_f64(&(BigInt::from(2) * &r * b2(k - 1)), b2(k));
            let inner = nn(k) * bj(k - 1, 3) + bj(k - 1, 4);
            let t4 = 7.0 * ln_big(b2(k)) * ratio_f64(&inner, b2(k));
            t1 + t2 + t3 + t4
        })
        .collect();

    Ok(TowerBook {
        depth,
        rule: rule.name().to_string(),
        m: m.to_vec(),
        n: n.to_vec(),
        b,
        flags,
        series4_terms,
        series4_partial,
        series5_terms,
        series5_partial,
        conv_bound,
        conv_r,
    })
}

/// A candidate `(m, n)` sequence built to satisfy conditions 1 and 2:
/// `m_k = b_{k−1,2}³ + 1` and `n_k` the largest integer with `n_k³ < m_k`.
/// The first entries `m₁`, `n₁` are given.
pub fn generate_sequence(
    depth: usize,
    m1: BigInt,
    n1: BigInt,
    seed_b: [BigInt; 4],
    rule: &dyn BRule,
) -> (Vec<BigInt>, Vec<BigInt>) {
    let mut m = vec![m1];
    let mut n = vec![n1];
    let mut row = seed_b;
    for _ in 1..depth {
        let mk = row[1].pow(3) + 1;
        let nk: BigInt = Roots::cbrt(&(&mk - 1u32));
        let nk = if nk.pow(3) >= mk { nk - 1 } else { nk };
        let b2 = &row[3] + &mk * &row[1] + &nk * &row[2];
        let (b1, b3, b4) = rule.next(&row, &mk, &nk);
        row = [b1, b2, b3, b4];
        m.push(mk);
        n.push(nk);
    }
    (m, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: u64) -> BigInt {
        BigInt::from(v)
    }

    fn ones() -> [BigInt; 4] {
        [bi(1), bi(1), bi(1), bi(1)]
    }

    #[test]
    fn stated_recurrence_for_b2() {
        let m = vec![bi(1000), bi(10_000_000), bi(1_000_000_000_000_000)];
        let n = vec![bi(10), bi(1000), bi(100_000)];
        let book = tower_book(&m, &n, ones(), &HeuristicRule, 1).unwrap();
        for k in 1..3 {
            let expect = &book.b[k - 1][3] + &m[k] * &book.b[k - 1][1] + &n[k] * &book.b[k - 1][2];
            assert_eq!(book.b[k][1], expect);
        }
        // direct integer evaluation: b₂ = 1 + 10⁷ + 10³
        assert_eq!(*book.b2(2), bi(10_001_001));
        assert_eq!(book.flags.condition1.len(), 3);
        // n_k³ against m_k: 10³ = 10³, 10⁹ > 10⁷, 10¹⁵ = 10¹⁵, so none is strict
        let c1: Vec<bool> = book.flags.condition1.iter().map(|f| f.holds).collect();
        assert_eq!(c1, vec![false, false, false]);
        assert_eq!(book.series4_partial.len(), 2);
        assert!(book.series4_partial[0] < book.series4_partial[1]);
    }

    #[test]
    fn unit_sequences_fail_condition1() {
        let book = tower_book(&vec![bi(1); 4], &vec![bi(1); 4], ones(), &HeuristicRule, 1).unwrap();
        assert!(book.flags.condition1.iter().all(|f| !f.holds));
        assert!(!book.flags.all_hold());
    }

    #[test]
    fn generated_sequence_meets_conditions_one_and_two() {
        let (m, n) = generate_sequence(5, bi(1000), bi(9), [bi(2), bi(2), bi(1), bi(1)], &HeuristicRule);
        let book = tower_book(&m, &n, [bi(2), bi(2), bi(1), bi(1)], &HeuristicRule, 1).unwrap();
        assert!(book.flags.condition1.iter().all(|f| f.holds));
        assert!(book.flags.condition2.iter().all(|f| f.holds));
        for k in 2..5 {
            assert!(n[k - 1].pow(3) < m[k - 1] && (&n[k - 1] + 1u32).pow(3) >= m[k - 1]);
        }
    }
}
