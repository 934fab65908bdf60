//! Continued fractions, three-distance and Kesten counts against brute force.

use ietlab_core::dioph::{cf_expand, check_convergent_ineq, kesten_window_counts, three_distance_check};
use ietlab_core::ExactReal;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn quadratic() -> impl Strategy<Value = ExactReal> {
    (prop::sample::select(vec![2u64, 3, 5, 6, 7, 10, 11]), -20i64..20, 1i64..6, 1i64..12).prop_map(|(d, a, b, c)| {
        ExactReal::quadratic(BigRational::new(a.into(), c.into()), BigRational::new(b.into(), c.into()), d).fract()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convergents_approximate_from_alternating_sides(alpha in quadratic()) {
        let cf = cf_expand(&alpha, 20).unwrap();
        prop_assert!(check_convergent_ineq(&cf, &alpha).iter().all(|c| c.holds));
        for n in 1..cf.q.len() {
            // p_n q_{n-1} - p_{n-1} q_n = ±1
            let det = &cf.p[n] * &cf.q[n - 1] - &cf.p[n - 1] * &cf.q[n];
            prop_assert!(det == BigInt::from(1) || det == BigInt::from(-1));
        }
    }

    #[test]
    fn three_distance_holds(alpha in quadratic(), m in 1usize..9) {
        prop_assert!(three_distance_check(&alpha, m).unwrap().holds);
    }

    #[test]
    fn kesten_counts_match_a_grid_scan(alpha in quadratic(), u in 0i64..40, w in 1i64..40, m in 2usize..7) {
        let (u, v) = (ExactReal::ratio(u, 80), ExactReal::ratio(u + w, 80));
        let rep = kesten_window_counts(&alpha, &u, &v, m).unwrap();
        prop_assert!(rep.consecutive && rep.within_window && rep.counts.len() <= 4);
        // every count seen on a grid of starting points is among the reported ones
        let a = alpha.to_f64();
        let (uf, vf) = (u.to_f64(), v.to_f64());
        for i in 0..400 {
            let x = (i as f64 + 0.5) / 400.0;
            let ys: Vec<f64> = (0..rep.q).map(|k| (x + k as f64 * a).fract()).collect();
            if ys.iter().any(|y| (y - uf).abs() < 1e-9 || (y - vf).abs() < 1e-9) {
                continue;
            }
            let c = ys.iter().filter(|&&y| y >= uf && y < vf).count() as u64;
            prop_assert!(rep.counts.contains(&c), "count {} not in {:?}", c, rep.counts);
        }
    }
}
