//! `ExactReal` against integer oracles on `(a + b√d)/c` with small coefficients.

use std::cmp::Ordering;

use ietlab_core::ExactReal;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

const RADICANDS: [u64; 8] = [2, 3, 5, 6, 7, 10, 13, 17];

fn real(a: i64, b: i64, c: i64, d: u64) -> ExactReal {
    ExactReal::quadratic(BigRational::new(a.into(), c.into()), BigRational::new(b.into(), c.into()), d)
}

fn isqrt(n: i128) -> i128 {
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Sign of `x + y√d` in 128-bit integers.
fn sign(x: i128, y: i128, d: i128) -> Ordering {
    match (x.cmp(&0), y.cmp(&0)) {
        (Ordering::Equal, s) | (s, Ordering::Equal) => s,
        (sx, sy) if sx == sy => sx,
        (sx, _) => {
            // opposite signs: compare x² with y²d
            let c = (x * x).cmp(&(y * y * d));
            if sx == Ordering::Greater { c } else { c.reverse() }
        }
    }
}

fn floor_oracle(a: i64, b: i64, c: i64, d: u64) -> i128 {
    let s = isqrt(b as i128 * b as i128 * d as i128);
    let fl = if b > 0 { s } else { -s - 1 };
    (a as i128 + fl).div_euclid(c as i128)
}

fn coeffs() -> impl Strategy<Value = (i64, i64, i64)> {
    (-1_000_000i64..1_000_000, (-1000i64..1000).prop_filter("irrational", |b| *b != 0), 1i64..1000)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn order_matches_integer_oracle(d in prop::sample::select(&RADICANDS[..]), (a1, b1, c1) in coeffs(), (a2, b2, c2) in coeffs()) {
        let (x, y) = (real(a1, b1, c1, d), real(a2, b2, c2, d));
        let ox = (a1 as i128 * c2 as i128 - a2 as i128 * c1 as i128, b1 as i128 * c2 as i128 - b2 as i128 * c1 as i128);
        prop_assert_eq!(x.cmp(&y), sign(ox.0, ox.1, d as i128));
        prop_assert_eq!((&x - &y).signum(), sign(ox.0, ox.1, d as i128));
    }

    #[test]
    fn floor_matches_integer_oracle(d in prop::sample::select(&RADICANDS[..]), (a, b, c) in coeffs()) {
        let x = real(a, b, c, d);
        prop_assert_eq!(x.floor(), BigInt::from(floor_oracle(a, b, c, d)));
        let f = x.fract();
        prop_assert!(!f.is_negative() && f < ExactReal::one());
    }

    #[test]
    fn field_operations_round_trip(d in prop::sample::select(&RADICANDS[..]), (a1, b1, c1) in coeffs(), (a2, b2, c2) in coeffs()) {
        let (x, y) = (real(a1, b1, c1, d), real(a2, b2, c2, d));
        prop_assert_eq!(&(&x + &y) - &y, x.clone());
        let p = &x * &y;
        prop_assert_eq!(p.try_div(&y).unwrap(), x.clone());
        let rel = (x.to_f64() - (a1 as f64 + b1 as f64 * (d as f64).sqrt()) / c1 as f64).abs();
        prop_assert!(rel <= 1e-9 * (1.0 + x.to_f64().abs()));
        let back: ExactReal = x.to_string().parse().unwrap();
        prop_assert_eq!(back, x);
    }
}

#[test]
fn mixed_fields_are_rejected() {
    let (x, y) = (ExactReal::sqrt_int(2), ExactReal::sqrt_int(3));
    assert!(x.try_add(&y).is_err());
    assert!(x.compare(&y).is_err());
}
