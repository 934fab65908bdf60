use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::NumError;

/// An exact real number: either a rational or an element `a + b·√d` of a
/// real quadratic field.
///
/// Values are kept normalized: rationals are in lowest terms (guaranteed by
/// [`BigRational`]), a quadratic always has `b ≠ 0` and squarefree `d > 1`.
/// Structural equality therefore coincides with numeric equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExactReal {
    Rational(BigRational),
    Quadratic {
        a: BigRational,
        b: BigRational,
        d: u64,
    },
}

/// Returns the field two operands live in, or an error if they need two
/// different square roots.
pub(crate) fn join_fields(x: Option<u64>, y: Option<u64>) -> Result<Option<u64>, NumError> {
    match (x, y) {
        (Some(p), Some(q)) if p != q => Err(NumError::IncompatibleField(p, q)),
        (Some(p), _) | (_, Some(p)) => Ok(Some(p)),
        (None, None) => Ok(None),
    }
}

/// Splits `n` into `s² · f` with `f` squarefree; returns `(s, f)`.
fn square_free_split(mut n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut f = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            s *= p;
        }
        if e % 2 == 1 {
            f *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (s, f * n)
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl ExactReal {
    pub fn zero() -> Self {
        ExactReal::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactReal::Rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        ExactReal::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        ExactReal::Rational(BigRational::from_integer(n))
    }

    /// `n / d`; panics if `d == 0`.
    pub fn ratio(n: i64, d: i64) -> Self {
        ExactReal::Rational(ratio(n, d))
    }

    pub fn from_rational(q: BigRational) -> Self {
        ExactReal::Rational(q)
    }

    /// `a + b·√d`, normalized (square factors of `d` are pulled into `b`).
    pub fn quadratic(a: BigRational, b: BigRational, d: u64) -> Self {
        if b.is_zero() || d == 0 {
            return ExactReal::Rational(a);
        }
        let (s, f) = square_free_split(d);
        let b = b * BigRational::from_integer(BigInt::from(s));
        if f == 1 {
            ExactReal::Rational(a + b)
        } else {
            ExactReal::Quadratic { a, b, d: f }
        }
    }

    /// `√d` for a non-negative integer `d`.
    pub fn sqrt_int(d: u64) -> Self {
        Self::quadratic(BigRational::zero(), BigRational::one(), d)
    }

    /// Exact square root of a non-negative rational, provided the result
    /// lies in some `ℚ(√d)` with `d` fitting a machine word.
    pub fn sqrt_rational(q: &BigRational) -> Result<Self, NumError> {
        if q.is_negative() {
            return Err(NumError::Domain(format!("sqrt of negative value {q}")));
        }
        // sqrt(p/q) = sqrt(p·q)/q
        let prod = q.numer() * q.denom();
        let prod = prod
            .to_u64()
            .ok_or_else(|| NumError::Domain(format!("radicand {prod} is too large")))?;
        let (s, f) = square_free_split(prod);
        let coeff = BigRational::new(BigInt::from(s), q.denom().clone());
        Ok(Self::quadratic(BigRational::zero(), coeff, f))
    }

    /// The golden mean `(√5 − 1)/2`.
    pub fn golden() -> Self {
        Self::quadratic(ratio(-1, 2), ratio(1, 2), 5)
    }

    /// The squarefree radicand, if this value is irrational.
    pub fn field(&self) -> Option<u64> {
        match self {
            ExactReal::Rational(_) => None,
            ExactReal::Quadratic { d, .. } => Some(*d),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, ExactReal::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ExactReal::Rational(q) => Some(q),
            ExactReal::Quadratic { .. } => None,
        }
    }

    /// Rational and irrational parts `(a, b)` of `a + b√d`.
    pub fn parts(&self) -> (BigRational, BigRational) {
        match self {
            ExactReal::Rational(q) => (q.clone(), BigRational::zero()),
            ExactReal::Quadratic { a, b, .. } => (a.clone(), b.clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExactReal::Rational(q) if q.is_zero())
    }

    /// Sign of the value, decided exactly.
    pub fn signum(&self) -> Ordering {
        match self {
            ExactReal::Rational(q) => q.cmp(&BigRational::zero()),
            ExactReal::Quadratic { a, b, d } => {
                let sa = a.cmp(&BigRational::zero());
                let sb = b.cmp(&BigRational::zero());
                if sa == sb || sa == Ordering::Equal {
                    return sb;
                }
                // opposite signs: compare a² with b²d
                let a2 = a * a;
                let b2d = b * b * BigRational::from_integer(BigInt::from(*d));
                if a2 > b2d {
                    sa
                } else {
                    sb
                }
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    /// Exact comparison. Two irrationals from different fields cannot be
    /// compared without approximation and are rejected.
    pub fn compare(&self, other: &Self) -> Result<Ordering, NumError> {
        if let (ExactReal::Rational(p), ExactReal::Rational(q)) = (self, other) {
            return Ok(p.cmp(q));
        }
        Ok(self.try_sub(other)?.signum())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, NumError> {
        let d = join_fields(self.field(), other.field())?;
        Ok(match (self, other) {
            (ExactReal::Rational(p), ExactReal::Rational(q)) => ExactReal::Rational(p + q),
            (ExactReal::Rational(p), ExactReal::Quadratic { a, b, .. })
            | (ExactReal::Quadratic { a, b, .. }, ExactReal::Rational(p)) => ExactReal::Quadratic {
                a: a + p,
                b: b.clone(),
                d: d.unwrap(),
            },
            (
                ExactReal::Quadratic { a: a1, b: b1, .. },
                ExactReal::Quadratic { a: a2, b: b2, .. },
            ) => Self::quadratic(a1 + a2, b1 + b2, d.unwrap()),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, NumError> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, NumError> {
        let d = join_fields(self.field(), other.field())?;
        Ok(match (self, other) {
            (ExactReal::Rational(p), ExactReal::Rational(q)) => ExactReal::Rational(p * q),
            (ExactReal::Rational(p), ExactReal::Quadratic { a, b, .. })
            | (ExactReal::Quadratic { a, b, .. }, ExactReal::Rational(p)) => {
                Self::quadratic(a * p, b * p, d.unwrap())
            }
            (
                ExactReal::Quadratic { a: a1, b: b1, .. },
                ExactReal::Quadratic { a: a2, b: b2, .. },
            ) => {
                let d = d.unwrap();
                let dq = BigRational::from_integer(BigInt::from(d));
                Self::quadratic(a1 * a2 + b1 * b2 * dq, a1 * b2 + a2 * b1, d)
            }
        })
    }

    pub fn recip(&self) -> Result<Self, NumError> {
        match self {
            ExactReal::Rational(q) => {
                if q.is_zero() {
                    Err(NumError::DivisionByZero)
                } else {
                    Ok(ExactReal::Rational(q.recip()))
                }
            }
            ExactReal::Quadratic { a, b, d } => {
                // 1/(a + b√d) = (a − b√d)/(a² − b²d); the norm is never zero
                let norm = a * a - b * b * BigRational::from_integer(BigInt::from(*d));
                Ok(Self::quadratic(a / &norm, -(b / &norm), *d))
            }
        }
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, NumError> {
        self.try_mul(&other.recip()?)
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        let k = BigRational::from_integer(k.clone());
        match self {
            ExactReal::Rational(q) => ExactReal::Rational(q * k),
            ExactReal::Quadratic { a, b, d } => Self::quadratic(a * &k, b * &k, *d),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Writes the value as `(A + B√d)/C` with integers and `C > 0`.
    pub(crate) fn integer_form(&self) -> (BigInt, BigInt, BigInt, u64) {
        match self {
            ExactReal::Rational(q) => (q.numer().clone(), BigInt::zero(), q.denom().clone(), 1),
            ExactReal::Quadratic { a, b, d } => {
                let c = a.denom().lcm(b.denom());
                let big_a = a.numer() * (&c / a.denom());
                let big_b = b.numer() * (&c / b.denom());
                (big_a, big_b, c, *d)
            }
        }
    }

    /// `⌊x · 2^shift⌋`, exactly.
    pub(crate) fn floor_scaled(&self, shift: u32) -> BigInt {
        let (a, b, c, d) = self.integer_form();
        let a = a << shift;
        let b = b << shift;
        let b_sqrt_floor = if b.is_zero() {
            BigInt::zero()
        } else {
            let radicand = (&b * &b * BigInt::from(d)).to_biguint().unwrap();
            let root: BigInt = BigInt::from(radicand.sqrt());
            if b.sign() == Sign::Minus {
                // ⌊−√m⌋ = −⌈√m⌉ and m is never a perfect square here
                -(root + BigInt::one())
            } else {
                root
            }
        };
        // A + B√d ∈ [t, t+1) and C is a positive integer
        (a + b_sqrt_floor).div_floor(&c)
    }

    /// `⌊x⌋`, exactly.
    pub fn floor(&self) -> BigInt {
        match self {
            ExactReal::Rational(q) => q.floor().to_integer(),
            ExactReal::Quadratic { .. } => self.floor_scaled(0),
        }
    }

    /// `x − ⌊x⌋ ∈ [0, 1)`.
    pub fn fract(&self) -> Self {
        let fl = self.floor();
        self - &ExactReal::from_bigint(fl)
    }

    /// `‖x‖`, the distance to the nearest integer, in `[0, 1/2]`.
    pub fn nearest_int_dist(&self) -> Self {
        let f = self.fract();
        let g = &ExactReal::one() - &f;
        if f <= g {
            f
        } else {
            g
        }
    }

    /// Nearest double. Accurate to a few ulps unless the two parts of a
    /// quadratic nearly cancel.
    pub fn to_f64(&self) -> f64 {
        match self {
            ExactReal::Rational(q) => rational_to_f64(q),
            ExactReal::Quadratic { .. } => {
                // evaluate via a 128-bit fixed-point floor, robust to cancellation
                let scaled = self.floor_scaled(128);
                let (mant, exp) = bigint_to_f64_parts(&scaled);
                mant * 2f64.powi(exp - 128)
            }
        }
    }
}

fn bigint_to_f64_parts(n: &BigInt) -> (f64, i32) {
    let bits = n.bits() as i32;
    if bits <= 1000 {
        (n.to_f64().unwrap_or(0.0), 0)
    } else {
        let shift = bits - 64;
        ((n >> shift as usize).to_f64().unwrap(), shift)
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    let (n, ne) = bigint_to_f64_parts(q.numer());
    let (d, de) = bigint_to_f64_parts(q.denom());
    if n.is_finite() && d.is_finite() && d != 0.0 {
        let v = n / d * 2f64.powi(ne - de);
        if v.is_finite() && v != 0.0 || q.is_zero() {
            return v;
        }
    }
    // fall back to a scaled integer division for extreme magnitudes
    let shift = 64i64 + q.denom().bits() as i64 - q.numer().bits() as i64;
    let scaled = if shift >= 0 {
        (q.numer() << shift as usize) / q.denom()
    } else {
        q.numer() / (q.denom() << (-shift) as usize)
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(shift as i32))
}

impl PartialOrd for ExactReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order within one quadratic field.
///
/// Panics when the operands come from two different fields; use
/// [`ExactReal::compare`] where mixed input is possible.
impl Ord for ExactReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.compare(other).expect("ordering across quadratic fields")
    }
}

impl Neg for &ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        match self {
            ExactReal::Rational(q) => ExactReal::Rational(-q),
            ExactReal::Quadratic { a, b, d } => ExactReal::Quadratic {
                a: -a,
                b: -b,
                d: *d,
            },
        }
    }
}

impl Neg for ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        -&self
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&ExactReal> for &ExactReal {
            type Output = ExactReal;
            fn $method(self, rhs: &ExactReal) -> ExactReal {
                self.$checked(rhs).expect("arithmetic across quadratic fields")
            }
        }
        impl $trait<ExactReal> for ExactReal {
            type Output = ExactReal;
            fn $method(self, rhs: ExactReal) -> ExactReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ExactReal> for ExactReal {
            type Output = ExactReal;
            fn $method(self, rhs: &ExactReal) -> ExactReal {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);
forward_binop!(Div, div, try_div);

impl From<i64> for ExactReal {
    fn from(n: i64) -> Self {
        ExactReal::from_int(n)
    }
}

impl From<BigRational> for ExactReal {
    fn from(q: BigRational) -> Self {
        ExactReal::Rational(q)
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, q: &BigRational) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// `p/q` for rationals and `a+b*sqrt(d)` for quadratics; the output parses
/// back to the same value.
impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactReal::Rational(q) => write_rational(f, q),
            ExactReal::Quadratic { a, b, d } => {
                let mut b = b.clone();
                if !a.is_zero() {
                    write_rational(f, a)?;
                    if b.is_negative() {
                        write!(f, "-")?;
                        b = -b;
                    } else {
                        write!(f, "+")?;
                    }
                } else if b.is_negative() {
                    write!(f, "-")?;
                    b = -b;
                }
                if !b.is_one() {
                    write_rational(f, &b)?;
                    write!(f, "*")?;
                }
                write!(f, "sqrt({d})")
            }
        }
    }
}

impl serde::Serialize for ExactReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for ExactReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt2m1() -> ExactReal {
        &ExactReal::sqrt_int(2) - &ExactReal::one()
    }

    #[test]
    fn normalizes_square_factors() {
        let r = ExactReal::sqrt_int(8);
        assert_eq!(r, ExactReal::quadratic(BigRational::zero(), ratio(2, 1), 2));
        assert_eq!(ExactReal::sqrt_int(9), ExactReal::from_int(3));
    }

    #[test]
    fn cancellation_returns_rational() {
        let x = &ExactReal::sqrt_int(5) - &ExactReal::from_int(2);
        let y = &ExactReal::from_int(3) - &ExactReal::sqrt_int(5);
        assert_eq!(&x + &y, ExactReal::one());
        assert!((&x + &y).is_rational());
    }

    #[test]
    fn compare_against_convergent() {
        // 29/70 is a convergent of √2 − 1 from above
        let q = ExactReal::ratio(29, 70);
        assert_eq!(sqrt2m1().compare(&q).unwrap(), Ordering::Less);
        assert_eq!(
            ExactReal::ratio(2, 3)
                .compare(&"0.6666".parse().unwrap())
                .unwrap(),
            Ordering::Greater
        );
        assert_eq!(sqrt2m1().compare(&sqrt2m1()).unwrap(), Ordering::Equal);
    }

    #[test]
    fn mixed_fields_are_rejected() {
        let err = ExactReal::sqrt_int(2).compare(&ExactReal::sqrt_int(3));
        assert_eq!(err, Err(NumError::IncompatibleField(2, 3)));
        assert!(ExactReal::sqrt_int(2)
            .try_add(&ExactReal::sqrt_int(5))
            .is_err());
    }

    #[test]
    fn floor_of_quadratics() {
        assert_eq!(ExactReal::golden().floor(), BigInt::from(0));
        assert_eq!((-ExactReal::golden()).floor(), BigInt::from(-1));
        let x = ExactReal::sqrt_int(2).mul_int(&BigInt::from(1000));
        assert_eq!(x.floor(), BigInt::from(1414));
        assert_eq!((-x).floor(), BigInt::from(-1415));
    }

    #[test]
    fn reciprocal_roundtrip() {
        let x = &ExactReal::sqrt_int(7) + &ExactReal::ratio(3, 4);
        let y = x.recip().unwrap();
        assert_eq!(&x * &y, ExactReal::one());
    }

    #[test]
    fn nearest_int_distance_examples() {
        assert_eq!(
            ExactReal::ratio(3, 10).nearest_int_dist(),
            ExactReal::ratio(3, 10)
        );
        assert_eq!(
            ExactReal::ratio(3, 4).nearest_int_dist(),
            ExactReal::ratio(1, 4)
        );
        // ‖5φ‖: brute force over the candidate integers 2, 3, 4
        let five_phi = ExactReal::golden().mul_int(&BigInt::from(5));
        let best = (2..=4)
            .map(|n| (&five_phi - &ExactReal::from_int(n)).abs())
            .min()
            .unwrap();
        assert_eq!(five_phi.nearest_int_dist(), best);
        assert_eq!(best, &five_phi - &ExactReal::from_int(3));
        assert!((best.to_f64() - 0.0901699).abs() < 1e-6);
    }

    #[test]
    fn display_parses_back() {
        for s in ["-1/2+1/2*sqrt(5)", "sqrt(2)", "-sqrt(3)", "7/3", "1-3/2*sqrt(11)"] {
            let x: ExactReal = s.parse().unwrap();
            assert_eq!(x.to_string(), s);
        }
    }

    #[test]
    fn to_f64_survives_cancellation() {
        // F_40·φ − F_39 = −φ^40 ≈ −4.4e-9
        let x = &ExactReal::golden().mul_int(&BigInt::from(102334155u64))
            - &ExactReal::from_int(63245986);
        let v = x.to_f64();
        assert!((v + 0.618033988749895f64.powi(40)).abs() < 1e-20, "{v}");
    }
}
