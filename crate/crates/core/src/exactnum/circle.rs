use std::fmt;

use super::{ExactReal, NumError};

/// A point of the circle `ℝ/ℤ`, stored as its representative in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CirclePoint(ExactReal);

impl CirclePoint {
    /// Accepts `x` only if `0 ≤ x < 1`.
    pub fn new(x: ExactReal) -> Result<Self, NumError> {
        if x.is_negative() || x.compare(&ExactReal::one())?.is_ge() {
            return Err(NumError::Domain(format!("{x} is outside [0,1)")));
        }
        Ok(CirclePoint(x))
    }

    /// Reduces `x` mod 1.
    pub fn wrap(x: &ExactReal) -> Self {
        CirclePoint(x.fract())
    }

    pub fn zero() -> Self {
        CirclePoint(ExactReal::zero())
    }

    pub fn value(&self) -> &ExactReal {
        &self.0
    }

    pub fn into_inner(self) -> ExactReal {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `x ⊕ y = (x + y) mod 1`.
pub fn circle_add(x: &CirclePoint, y: &CirclePoint) -> Result<CirclePoint, NumError> {
    let s = x.0.try_add(&y.0)?;
    let one = ExactReal::one();
    Ok(CirclePoint(if s >= one { &s - &one } else { s }))
}

/// `x ⊖ y = (x − y) mod 1`.
pub fn circle_sub(x: &CirclePoint, y: &CirclePoint) -> Result<CirclePoint, NumError> {
    let s = x.0.try_sub(&y.0)?;
    Ok(CirclePoint(if s.is_negative() {
        &s + &ExactReal::one()
    } else {
        s
    }))
}

/// `‖x‖`, the distance from `x` to the nearest integer.
pub fn nearest_int_dist(x: &ExactReal) -> ExactReal {
    x.nearest_int_dist()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cp(s: &str) -> CirclePoint {
        CirclePoint::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(circle_add(&cp("0.25"), &cp("0.5")).unwrap(), cp("0.75"));
        assert_eq!(circle_add(&cp("0.75"), &cp("0.75")).unwrap(), cp("0.5"));
        let s = circle_add(&cp("sqrt(5)-2"), &cp("3-sqrt(5)")).unwrap();
        assert_eq!(s, CirclePoint::zero());
        assert!(s.value().is_rational());
        assert_eq!(circle_sub(&cp("0.25"), &cp("0.5")).unwrap(), cp("0.75"));
        assert_eq!(circle_sub(&cp("golden"), &cp("golden")).unwrap(), CirclePoint::zero());
    }

    #[test]
    fn third_minus_sqrt2() {
        let d = circle_sub(&cp("1/3"), &cp("sqrt(2)-1")).unwrap();
        // 1/3 − (√2 − 1) = 4/3 − √2 is negative, so the class mod 1 is 7/3 − √2
        assert_eq!(d.value(), &"7/3-sqrt(2)".parse::<ExactReal>().unwrap());
        // bracket √2 between 1.41421356 and 1.41421357
        let lo = ExactReal::ratio(7, 3) - "1.41421357".parse::<ExactReal>().unwrap();
        let hi = ExactReal::ratio(7, 3) - "1.41421356".parse::<ExactReal>().unwrap();
        assert!((d.to_f64() - 0.9191).abs() < 1e-4);
        assert!(&lo < d.value() && d.value() < &hi);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(CirclePoint::new(ExactReal::one()).is_err());
        assert!(CirclePoint::new(ExactReal::ratio(-1, 5)).is_err());
        assert_eq!(CirclePoint::wrap(&ExactReal::ratio(-1, 5)), cp("4/5"));
    }

    fn arb_point() -> impl Strategy<Value = CirclePoint> {
        (any::<i16>(), any::<i16>(), 1i64..500).prop_map(|(a, b, c)| {
            let x = ExactReal::quadratic(
                num_rational::BigRational::new(a.into(), c.into()),
                num_rational::BigRational::new(b.into(), c.into()),
                3,
            );
            CirclePoint::wrap(&x)
        })
    }

    proptest! {
        #[test]
        fn zero_is_neutral(x in arb_point()) {
            prop_assert_eq!(circle_add(&x, &CirclePoint::zero()).unwrap(), x.clone());
            prop_assert_eq!(circle_sub(&x, &CirclePoint::zero()).unwrap(), x);
        }

        #[test]
        fn sub_then_add_roundtrips(x in arb_point(), y in arb_point()) {
            let d = circle_sub(&x, &y).unwrap();
            prop_assert_eq!(circle_add(&d, &y).unwrap(), x);
        }

        #[test]
        fn nearest_int_reflection(x in arb_point()) {
            let v = x.value();
            let refl = &ExactReal::one() - &v.fract();
            prop_assert_eq!(nearest_int_dist(v), nearest_int_dist(&refl));
        }
    }
}
