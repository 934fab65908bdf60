//! Interval exchange transformations over one exact field.

mod delta;
mod keane;
pub(crate) mod orbit;

pub use delta::{delta_prime_n, delta_set, DeltaPrimeBuilder, DeltaSet};
pub use keane::{keane_certificate, KeaneVerdict};
pub use orbit::{FastIet, FastOrbit};

use std::fmt;
use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::exactnum::{join_fields, CirclePoint, ExactReal};

/// An IET given by lengths `ℓ₁..ℓ_r` and a permutation `π`, where `π(k)` is
/// the position of interval `k` after the exchange.
///
/// Internally indices are 0-based; [`Iet::perm`] reports the 1-based
/// one-line notation used in literals such as `perm=[3,2,1]`.
#[derive(Clone, Debug)]
pub struct Iet {
    lengths: Vec<ExactReal>,
    perm: Vec<usize>,
    breakpoints: Vec<ExactReal>,
    translations: Vec<ExactReal>,
    field: Option<u64>,
}

impl Iet {
    /// Builds and validates an IET. `perm` is 1-based one-line notation.
    pub fn new(lengths: Vec<ExactReal>, perm: Vec<usize>) -> Result<Self> {
        let r = lengths.len();
        if r == 0 {
            return Err(LabError::BadLengths("no intervals".into()));
        }
        if perm.len() != r {
            return Err(LabError::BadPermutation(format!(
                "{} entries for {r} intervals",
                perm.len()
            )));
        }
        let mut seen = vec![false; r];
        for &p in &perm {
            if p == 0 || p > r || seen[p - 1] {
                return Err(LabError::BadPermutation(format!("{perm:?} is not a bijection of 1..{r}")));
            }
            seen[p - 1] = true;
        }
        let mut field = None;
        for l in &lengths {
            field = join_fields(field, l.field())?;
            if !l.is_positive() {
                return Err(LabError::BadLengths(format!("length {l} is not positive")));
            }
        }
        let total = lengths.iter().fold(ExactReal::zero(), |acc, l| &acc + l);
        if total != ExactReal::one() {
            return Err(LabError::BadLengths(format!("lengths sum to {total}, not 1")));
        }
        let perm: Vec<usize> = perm.into_iter().map(|p| p - 1).collect();
        Ok(Self::from_parts(lengths, perm, field))
    }

    fn from_parts(lengths: Vec<ExactReal>, perm: Vec<usize>, field: Option<u64>) -> Self {
        let r = lengths.len();
        let mut breakpoints = Vec::with_capacity(r + 1);
        let mut acc = ExactReal::zero();
        breakpoints.push(acc.clone());
        for l in &lengths {
            acc = &acc + l;
            breakpoints.push(acc.clone());
        }
        // image start of interval k = Σ_{π(i') < π(k)} ℓ_{i'}
        let mut inv = vec![0; r];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut image_start = vec![ExactReal::zero(); r];
        let mut acc = ExactReal::zero();
        for &k in &inv {
            image_start[k] = acc.clone();
            acc = &acc + &lengths[k];
        }
        let translations = (0..r)
            .map(|k| &image_start[k] - &breakpoints[k])
            .collect();
        Iet {
            lengths,
            perm,
            breakpoints,
            translations,
            field,
        }
    }

    pub fn identity() -> Self {
        Self::from_parts(vec![ExactReal::one()], vec![0], None)
    }

    /// The rotation `x ↦ x + α mod 1` as the 2-IET `(1−α, α)`, `π = (2 1)`.
    /// `α = 0` gives the identity.
    pub fn rotation(alpha: &ExactReal) -> Result<Self> {
        if alpha.is_zero() {
            return Ok(Self::identity());
        }
        if alpha.is_negative() || *alpha >= ExactReal::one() {
            return Err(LabError::Invalid(format!("rotation number {alpha} is outside [0,1)")));
        }
        Self::new(vec![&ExactReal::one() - alpha, alpha.clone()], vec![2, 1])
    }

    pub fn r(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[ExactReal] {
        &self.lengths
    }

    /// 1-based one-line notation of `π`.
    pub fn perm(&self) -> Vec<usize> {
        self.perm.iter().map(|p| p + 1).collect()
    }

    /// `s₀ = 0 < s₁ < … < s_r = 1`.
    pub fn breakpoints(&self) -> &[ExactReal] {
        &self.breakpoints
    }

    /// `h_k = T(x) − x` on interval `k`.
    pub fn translations(&self) -> &[ExactReal] {
        &self.translations
    }

    pub fn field(&self) -> Option<u64> {
        self.field
    }

    /// 0-based index `k` with `s_k ≤ x < s_{k+1}`; `x` must lie in `[0,1)`.
    pub fn interval_of(&self, x: &ExactReal) -> usize {
        let inner = &self.breakpoints[1..self.r()];
        inner.partition_point(|s| s <= x)
    }

    /// `T(x)` for `x ∈ [0,1)`.
    pub fn apply(&self, x: &ExactReal) -> ExactReal {
        x + &self.translations[self.interval_of(x)]
    }

    pub fn evaluate(&self, x: &CirclePoint) -> CirclePoint {
        CirclePoint::new(self.apply(x.value())).expect("IET maps [0,1) into itself")
    }

    /// The image interval `[start, end)` of interval `k`.
    pub fn image_of(&self, k: usize) -> (ExactReal, ExactReal) {
        let a = &self.breakpoints[k] + &self.translations[k];
        let b = &a + &self.lengths[k];
        (a, b)
    }

    /// The inverse map `S` with `S(T(x)) = x`.
    pub fn invert(&self) -> Iet {
        let r = self.r();
        let mut inv = vec![0; r];
        for (k, &p) in self.perm.iter().enumerate() {
            inv[p] = k;
        }
        let lengths = inv.iter().map(|&k| self.lengths[k].clone()).collect();
        Self::from_parts(lengths, inv, self.field)
    }

    /// `U = T ∘ S`, in canonical form.
    pub fn compose(&self, s: &Iet) -> Iet {
        self.try_compose(s).expect("composition across quadratic fields")
    }

    pub fn try_compose(&self, s: &Iet) -> Result<Iet> {
        let field = join_fields(self.field, s.field)?;
        // pieces: (domain start, length, translation)
        let mut pieces: Vec<(ExactReal, ExactReal, ExactReal)> = Vec::new();
        let t_inner = &self.breakpoints[1..self.r()];
        for j in 0..s.r() {
            let (u, v) = s.image_of(j);
            let hs = &s.translations[j];
            let mut k = t_inner.partition_point(|t| t <= &u);
            let mut p = u;
            loop {
                let q = if k < t_inner.len() && t_inner[k] < v {
                    t_inner[k].clone()
                } else {
                    v.clone()
                };
                let h = hs + &self.translations[k];
                let start = &p - hs;
                let len = &q - &p;
                match pieces.last_mut() {
                    Some(last) if last.2 == h => last.1 = &last.1 + &len,
                    _ => pieces.push((start, len, h)),
                }
                if q == v {
                    break;
                }
                p = q;
                k += 1;
            }
        }
        Ok(Self::from_pieces(pieces, field))
    }

    fn from_pieces(pieces: Vec<(ExactReal, ExactReal, ExactReal)>, field: Option<u64>) -> Iet {
        let n = pieces.len();
        let image_starts: Vec<ExactReal> = pieces.iter().map(|(a, _, h)| a + h).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| image_starts[i].cmp(&image_starts[j]));
        let mut perm = vec![0; n];
        for (rank, &k) in order.iter().enumerate() {
            perm[k] = rank;
        }
        let lengths: Vec<ExactReal> = pieces.into_iter().map(|(_, l, _)| l).collect();
        // cancellation can leave a rational map even when the inputs were not
        let field = field.filter(|_| lengths.iter().any(|l| !l.is_rational()));
        Self::from_parts(lengths, perm, field)
    }

    /// Merges adjacent intervals that carry the same translation.
    pub fn canonical(&self) -> Iet {
        self.compose(&Iet::identity())
    }

    /// `Tⁿ` by repeated squaring.
    pub fn power(&self, n: u64) -> Iet {
        let mut result = Iet::identity();
        let mut base = self.canonical();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.compose(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.compose(&base);
            }
        }
        result
    }

    /// `Tⁿ` by `n` successive compositions with `T`.
    pub fn power_iterative(&self, n: u64) -> Iet {
        let mut result = Iet::identity();
        for _ in 0..n {
            result = self.compose(&result);
        }
        result
    }

    pub fn is_identity(&self) -> bool {
        self.canonical().r() == 1
    }
}

impl PartialEq for Iet {
    fn eq(&self, other: &Self) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        a.lengths == b.lengths && a.perm == b.perm
    }
}

impl Eq for Iet {}

/// `iet: lengths=[..] perm=[..]`.
impl fmt::Display for Iet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "iet: lengths=[")?;
        for (i, l) in self.lengths.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "] perm=[")?;
        for (i, p) in self.perm.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p + 1)?;
        }
        write!(f, "]")
    }
}

fn bracketed<'a>(src: &'a str, key: &str) -> Result<&'a str> {
    let start = src
        .find(&format!("{key}="))
        .ok_or_else(|| LabError::Invalid(format!("missing {key}= in {src:?}")))?;
    let rest = src[start + key.len() + 1..].trim_start();
    let rest = rest
        .strip_prefix('[')
        .ok_or_else(|| LabError::Invalid(format!("{key} must be a [..] list")))?;
    let end = rest
        .find(']')
        .ok_or_else(|| LabError::Invalid(format!("unterminated {key} list")))?;
    Ok(&rest[..end])
}

/// Accepts `iet: lengths=[1/2,1/4,1/4] perm=[3,2,1]`, `rot: alpha=sqrt(2)-1`
/// and the bare names `identity` and `golden`.
impl FromStr for Iet {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(Iet::identity());
        }
        if s == "golden" {
            return Iet::rotation(&ExactReal::golden());
        }
        if let Some(rest) = s.strip_prefix("rot:") {
            let rest = rest.trim();
            let alpha = rest
                .strip_prefix("alpha=")
                .ok_or_else(|| LabError::Invalid(format!("expected alpha= in {s:?}")))?;
            let alpha: ExactReal = alpha.trim().parse()?;
            return Iet::rotation(&alpha);
        }
        if let Some(rest) = s.strip_prefix("iet:") {
            let lengths = bracketed(rest, "lengths")?
                .split(',')
                .map(|t| t.trim().parse::<ExactReal>().map_err(LabError::from))
                .collect::<Result<Vec<_>>>()?;
            let perm = bracketed(rest, "perm")?
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| LabError::BadPermutation(format!("bad entry {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Iet::new(lengths, perm);
        }
        Err(LabError::Invalid(format!(
            "unrecognized IET literal {s:?}; expected `iet: lengths=[..] perm=[..]` or `rot: alpha=..`"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> ExactReal {
        s.parse().unwrap()
    }

    fn three() -> Iet {
        "iet: lengths=[1/2,1/4,1/4] perm=[3,2,1]".parse().unwrap()
    }

    #[test]
    fn rotation_translations() {
        let a = q("sqrt(2)-1");
        let t = Iet::rotation(&a).unwrap();
        assert_eq!(t.translations(), &[a.clone(), &a - &ExactReal::one()]);
        assert_eq!(t.apply(&ExactReal::zero()), a);
    }

    #[test]
    fn three_iet_translations_follow_the_defining_sum() {
        let t = three();
        assert_eq!(t.breakpoints(), &[q("0"), q("1/2"), q("3/4"), q("1")]);
        // h₂ = −ℓ₁ + ℓ₃ since only interval 3 lands before interval 2
        assert_eq!(t.translations(), &[q("1/2"), q("-1/4"), q("-3/4")]);
        assert_eq!(t.apply(&q("0.1")), q("0.6"));
    }

    #[test]
    fn validation() {
        assert!(matches!(
            Iet::new(vec![q("1/2"), q("1/3")], vec![2, 1]),
            Err(LabError::BadLengths(_))
        ));
        assert!(matches!(
            Iet::new(vec![q("1/2"), q("1/2")], vec![1, 1]),
            Err(LabError::BadPermutation(_))
        ));
        assert!(matches!(
            Iet::new(vec![q("3/2"), q("-1/2")], vec![2, 1]),
            Err(LabError::BadLengths(_))
        ));
        let id = Iet::new(vec![q("1/2"), q("1/2")], vec![1, 2]).unwrap();
        assert_eq!(id, Iet::identity());
        assert_eq!(id.apply(&q("0.7")), q("0.7"));
    }

    #[test]
    fn inversion() {
        let a = q("sqrt(2)-1");
        let t = Iet::rotation(&a).unwrap();
        assert_eq!(t.invert(), Iet::rotation(&(&ExactReal::one() - &a)).unwrap());
        assert_eq!(Iet::identity().invert(), Iet::identity());
        let inv = three().invert();
        let expect: Iet = "iet: lengths=[1/4,1/4,1/2] perm=[3,2,1]".parse().unwrap();
        assert_eq!(inv, expect);
        for i in 0..100 {
            let x = ExactReal::ratio(i, 100);
            assert_eq!(inv.apply(&three().apply(&x)), x);
        }
    }

    #[test]
    fn rotations_compose_additively() {
        let a = q("sqrt(5)/7");
        let b = q("3/4-sqrt(5)/9");
        let ab = CirclePoint::wrap(&(&a + &b));
        let lhs = Iet::rotation(&a).unwrap().compose(&Iet::rotation(&b).unwrap());
        assert_eq!(lhs, Iet::rotation(ab.value()).unwrap());
    }

    #[test]
    fn powers() {
        let t = three();
        assert!(t.power(0).is_identity());
        let a = q("golden");
        let r = Iet::rotation(&a).unwrap();
        for n in 0..20u64 {
            let na = CirclePoint::wrap(&a.mul_int(&n.into()));
            assert_eq!(r.power(n), Iet::rotation(na.value()).unwrap());
        }
        // this rational 3-IET is periodic with period 4
        assert!(t.power(4).is_identity());
        assert_eq!(t.power(7), t.power_iterative(7));
    }

    #[test]
    fn literal_roundtrip() {
        let t = three();
        assert_eq!(t.to_string().parse::<Iet>().unwrap(), t);
        let r: Iet = "rot: alpha=sqrt(2)-1".parse().unwrap();
        assert_eq!(r.r(), 2);
        assert!("iet: lengths=[1/2] perm=[1,2]".parse::<Iet>().is_err());
    }
}
