//! Orbit walking with a certified fixed-point filter.
//!
//! The point is tracked as a 96-bit shadow together with a bound on how far
//! the shadow may lag behind the true value. The interval lookup uses the
//! shadow only when the bound separates the point from every breakpoint;
//! otherwise the exact point is rebuilt from the visit counts
//! (`x₀ + Σ Hₖ·hₖ`) and the lookup is done exactly. The visited interval
//! sequence is therefore always the exact one.

use num_bigint::BigInt;

use super::Iet;
use crate::exactnum::fixed::{self, shadow};
use crate::exactnum::ExactReal;

/// An IET with precomputed shadows of its breakpoints and translations.
#[derive(Clone, Debug)]
pub struct FastIet {
    iet: Iet,
    bp: Vec<i128>,
    h: Vec<i128>,
}

impl FastIet {
    pub fn new(iet: &Iet) -> Self {
        let r = iet.r();
        FastIet {
            iet: iet.clone(),
            bp: iet.breakpoints()[1..r].iter().map(shadow).collect(),
            h: iet.translations().iter().map(shadow).collect(),
        }
    }

    pub fn iet(&self) -> &Iet {
        &self.iet
    }

    pub fn orbit(&self, x0: &ExactReal) -> FastOrbit<'_> {
        FastOrbit {
            map: self,
            start: Start::Exact(x0.clone()),
            visits: vec![0; self.iet.r()],
            xf: shadow(x0),
            err: 1,
            n: 0,
            fallbacks: 0,
        }
    }

    /// Orbit of the dyadic point `k / 2^53`, whose shadow is exact.
    pub fn orbit_dyadic(&self, k: u64) -> FastOrbit<'_> {
        FastOrbit {
            map: self,
            start: Start::Dyadic(k),
            visits: vec![0; self.iet.r()],
            xf: fixed::from_dyadic53(k),
            err: 1,
            n: 0,
            fallbacks: 0,
        }
    }
}

#[derive(Clone, Debug)]
enum Start {
    Exact(ExactReal),
    Dyadic(u64),
}

/// A forward orbit `x₀, T(x₀), T²(x₀), …`.
#[derive(Clone, Debug)]
pub struct FastOrbit<'a> {
    map: &'a FastIet,
    start: Start,
    visits: Vec<u64>,
    xf: i128,
    // the true value times 2^96 lies in [xf, xf + err)
    err: i128,
    n: u64,
    fallbacks: u64,
}

impl<'a> FastOrbit<'a> {
    pub fn start(&self) -> ExactReal {
        match &self.start {
            Start::Exact(x) => x.clone(),
            Start::Dyadic(k) => ExactReal::from_rational(num_rational::BigRational::new(
                BigInt::from(*k),
                BigInt::from(1u64) << 53,
            )),
        }
    }

    /// Number of steps taken so far.
    pub fn time(&self) -> u64 {
        self.n
    }

    /// How often the shadow could not decide an interval lookup.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    /// Visits per interval so far.
    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    /// The current point, exactly.
    pub fn exact(&self) -> ExactReal {
        let mut x = self.start();
        for (k, &c) in self.visits.iter().enumerate() {
            if c > 0 {
                x = &x + &self.map.iet.translations()[k].mul_int(&BigInt::from(c));
            }
        }
        x
    }

    /// Shadow bracket: the true value times `2^96` lies in `[lo, hi)`.
    pub fn bracket(&self) -> (i128, i128) {
        (self.xf, self.xf + self.err)
    }

    pub fn approx(&self) -> f64 {
        fixed::to_f64(self.xf)
    }

    /// Index of the interval containing the current point.
    pub fn current_interval(&mut self) -> usize {
        let lo = self.xf;
        let hi = self.xf + self.err;
        // certainly past s_j when lo ≥ ⌊s_j 2^96⌋ + 1; possibly past when hi > ⌊s_j 2^96⌋
        let sure = self.map.bp.partition_point(|&s| s < lo);
        let maybe = self.map.bp.partition_point(|&s| s < hi);
        if sure == maybe {
            return sure;
        }
        self.fallbacks += 1;
        let x = self.exact();
        self.xf = shadow(&x);
        self.err = 1;
        self.map.iet.interval_of(&x)
    }

    /// Advances one step and returns the interval that was left.
    pub fn step(&mut self) -> usize {
        let k = self.current_interval();
        self.xf += self.map.h[k];
        self.err += 1;
        self.visits[k] += 1;
        self.n += 1;
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_exact_iteration() {
        let t: Iet = "iet: lengths=[sqrt(3)/5,1/2,1/2-sqrt(3)/5] perm=[3,1,2]"
            .parse()
            .unwrap();
        let fast = FastIet::new(&t);
        let mut x = ExactReal::ratio(1, 7);
        let mut orbit = fast.orbit(&x);
        for _ in 0..2000 {
            let k = t.interval_of(&x);
            assert_eq!(orbit.step(), k);
            x = t.apply(&x);
        }
        assert_eq!(orbit.exact(), x);
        let (lo, hi) = orbit.bracket();
        let v = x.floor_scaled(fixed::FRAC_BITS);
        assert!(BigInt::from(lo) <= v && v < BigInt::from(hi));
    }

    #[test]
    fn breakpoint_orbits_force_exact_lookups() {
        // starting on a breakpoint of a periodic map returns to it exactly
        let t: Iet = "iet: lengths=[1/3,1/3,1/3] perm=[3,2,1]".parse().unwrap();
        let fast = FastIet::new(&t);
        let mut orbit = fast.orbit(&ExactReal::ratio(1, 3));
        for _ in 0..10 {
            orbit.step();
        }
        assert!(orbit.fallbacks() > 0);
        assert_eq!(orbit.exact(), t.power(10).apply(&ExactReal::ratio(1, 3)));
    }

    #[test]
    fn dyadic_start() {
        let t = Iet::rotation(&ExactReal::golden()).unwrap();
        let fast = FastIet::new(&t);
        let mut o = fast.orbit_dyadic(1 << 52);
        assert_eq!(o.start(), ExactReal::ratio(1, 2));
        o.step();
        assert_eq!(o.exact(), &ExactReal::ratio(1, 2) + &ExactReal::golden() - ExactReal::one());
    }
}
