//! Invariants of IETs, induced maps and towers on random maps with lengths in `Q(√2)`.

use ietlab_core::iet::{delta_prime_n, keane_certificate, DeltaPrimeBuilder, FastIet};
use ietlab_core::induce::{find_tower, first_return, iet3_from_rotation, DEFAULT_MAX_STEPS};
use ietlab_core::{ExactReal, Iet};
use num_rational::BigRational;
use proptest::prelude::*;

fn iet_strategy(max_r: usize) -> impl Strategy<Value = Iet> {
    (2..=max_r)
        .prop_flat_map(|r| {
            (
                prop::collection::vec((1i64..20, 0i64..6), r),
                Just((1..=r).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(w, perm)| {
            let w: Vec<ExactReal> = w
                .into_iter()
                .map(|(a, b)| ExactReal::quadratic(BigRational::from_integer(a.into()), BigRational::from_integer(b.into()), 2))
                .collect();
            let total = w.iter().fold(ExactReal::zero(), |acc, x| &acc + x);
            Iet::new(w.iter().map(|x| x.try_div(&total).unwrap()).collect(), perm).unwrap()
        })
}

fn point(k: u32) -> ExactReal {
    ExactReal::ratio(k as i64, 1 << 20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_undoes_the_map(t in iet_strategy(5), ks in prop::collection::vec(0u32..1 << 20, 16)) {
        let inv = t.invert();
        for k in ks {
            let x = point(k);
            let y = t.apply(&x);
            prop_assert!(!y.is_negative() && y < ExactReal::one());
            prop_assert_eq!(inv.apply(&y), x);
        }
        prop_assert!(t.compose(&inv).canonical().is_identity());
    }

    #[test]
    fn powers_agree(t in iet_strategy(4), n in 1u64..12, k in 0u32..1 << 20) {
        let p = t.power(n);
        let it = t.power_iterative(n);
        prop_assert_eq!(p.lengths(), it.lengths());
        let mut x = point(k);
        for _ in 0..n {
            x = t.apply(&x);
        }
        prop_assert_eq!(p.apply(&point(k)), x);
    }

    #[test]
    fn fast_orbit_matches_exact_orbit(t in iet_strategy(5), k in 0u32..1 << 20) {
        let fast = FastIet::new(&t);
        let mut orbit = fast.orbit(&point(k));
        let mut x = point(k);
        for _ in 0..200 {
            orbit.step();
            x = t.apply(&x);
            prop_assert_eq!(orbit.exact(), x.clone());
        }
    }

    #[test]
    fn first_return_tiles_for_certified_maps(t in iet_strategy(4), a in 0i64..8, w in 1i64..8) {
        prop_assume!(keane_certificate(&t, 200).is_certified());
        let (a, b) = (ExactReal::ratio(a, 16), ExactReal::ratio(a + w, 16));
        let fr = first_return(&t, &a, &b, DEFAULT_MAX_STEPS).unwrap();
        prop_assert_eq!(fr.total_measure(), ExactReal::one());
        prop_assert!(fr.induced.r() <= t.r() + 2);
    }

    #[test]
    fn towers_have_disjoint_floors(t in iet_strategy(4)) {
        prop_assume!(keane_certificate(&t, 1000).is_certified());
        let eps = ExactReal::ratio(1, 10);
        let tw = find_tower(&t, &eps).unwrap();
        prop_assert!(tw.floors_disjoint());
        prop_assert!(tw.base_length() < eps);
        prop_assert!(tw.measure().mul_int(&(tw.s as u64).into()) >= ExactReal::one());
    }

    #[test]
    fn delta_prime_is_monotone_and_bounded(t in iet_strategy(4)) {
        let mut b = DeltaPrimeBuilder::new(&t).unwrap();
        let r = t.r() as u64;
        let mut prev = 0;
        for n in 1..=30u64 {
            let card = b.step().unwrap();
            prop_assert!(card >= prev);
            prop_assert!((card as u64) < r * r * n * n * n);
            prev = card;
        }
        prop_assert_eq!(delta_prime_n(&t, 30).unwrap().len(), prev);
    }
}

#[test]
fn induced_three_iet_agrees_with_first_return() {
    let alpha = ExactReal::sqrt_int(2) - ExactReal::one();
    let b = ExactReal::ratio(3, 4);
    let t3 = iet3_from_rotation(&alpha, &b).unwrap();
    let fr = first_return(&Iet::rotation(&alpha).unwrap(), &ExactReal::zero(), &b, DEFAULT_MAX_STEPS).unwrap();
    assert_eq!(t3.lengths(), fr.induced.lengths());
    assert_eq!(t3.r(), 3);
    assert_eq!(t3.lengths().iter().fold(ExactReal::zero(), |acc, x| &acc + x), ExactReal::one());
}
