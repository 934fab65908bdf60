//! Translation sets `Δ(T)` and difference sets `Δ′ₙ(T)`.
//!
//! Every translation of every power of `T` is an integer combination of the
//! lengths, so it can be written `(A + B√d)/D` for a fixed common
//! denominator `D`. Its class mod 1 is then the integer pair
//! `(B, A mod D)`, which is what the sets store.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::Iet;
use crate::error::{LabError, Result};
use crate::exactnum::{CirclePoint, ExactReal};

type Key = (i128, i128);

#[derive(Clone, Debug)]
struct Lattice {
    denom: i128,
    field: Option<u64>,
}

impl Lattice {
    fn of(t: &Iet) -> Result<Self> {
        let mut denom = BigInt::one();
        for l in t.lengths() {
            let (a, b) = l.parts();
            denom = denom.lcm(a.denom()).lcm(b.denom());
        }
        let denom = denom
            .to_i128()
            .filter(|d| *d < (1i128 << 100))
            .ok_or_else(|| LabError::Overflow(format!("common denominator {denom} too large")))?;
        Ok(Lattice {
            denom,
            field: t.field(),
        })
    }

    /// Raw coordinates `(A, B)` of `x = (A + B√d)/D`.
    fn coords(&self, x: &ExactReal) -> Option<(i128, i128)> {
        let d = BigRational::from_integer(BigInt::from(self.denom));
        let (a, b) = x.parts();
        let a = a * &d;
        let b = b * &d;
        if !a.is_integer() || !b.is_integer() {
            return None;
        }
        Some((a.to_integer().to_i128()?, b.to_integer().to_i128()?))
    }

    fn key(&self, (a, b): (i128, i128)) -> Key {
        (b, a.rem_euclid(self.denom))
    }

    fn point(&self, (b, a): Key) -> CirclePoint {
        let d = BigInt::from(self.denom);
        let x = ExactReal::quadratic(
            BigRational::new(BigInt::from(a), d.clone()),
            BigRational::new(BigInt::from(b), d),
            self.field.unwrap_or(0),
        );
        CirclePoint::wrap(&x)
    }

    fn translation_coords(&self, t: &Iet) -> Result<Vec<(i128, i128)>> {
        t.translations()
            .iter()
            .map(|h| {
                self.coords(h)
                    .ok_or_else(|| LabError::Overflow(format!("translation {h} off the length lattice")))
            })
            .collect()
    }
}

/// A finite set of points of the circle, built to horizon `n`.
#[derive(Clone, Debug)]
pub struct DeltaSet {
    lattice: Lattice,
    keys: HashSet<Key>,
    n: u64,
}

impl DeltaSet {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// The points in increasing order.
    pub fn points(&self) -> Vec<CirclePoint> {
        let mut pts: Vec<CirclePoint> = self.keys.iter().map(|&k| self.lattice.point(k)).collect();
        pts.sort();
        pts
    }

    pub fn contains(&self, x: &CirclePoint) -> bool {
        if x.value().field().is_some() && x.value().field() != self.lattice.field {
            return false;
        }
        match self.lattice.coords(x.value()) {
            Some(c) => self.keys.contains(&self.lattice.key(c)),
            None => false,
        }
    }

    /// Exact subset test, valid for sets built from the same map.
    pub fn is_subset(&self, other: &DeltaSet) -> bool {
        self.lattice.denom == other.lattice.denom && self.keys.is_subset(&other.keys)
    }
}

/// `Δ(T) = {T(x) ⊖ x}`, i.e. the translations mod 1.
pub fn delta_set(t: &Iet) -> Result<DeltaSet> {
    let lattice = Lattice::of(t)?;
    let keys = lattice
        .translation_coords(t)?
        .into_iter()
        .map(|c| lattice.key(c))
        .collect();
    Ok(DeltaSet { lattice, keys, n: 1 })
}

/// Incremental construction of `Δ′₁ ⊆ Δ′₂ ⊆ …`, walking `Tᵏ = T ∘ Tᵏ⁻¹`.
pub struct DeltaPrimeBuilder {
    t: Iet,
    lattice: Lattice,
    power: Iet,
    k: u64,
    keys: HashSet<Key>,
    cards: Vec<usize>,
    scratch: Vec<Key>,
}

impl DeltaPrimeBuilder {
    pub fn new(t: &Iet) -> Result<Self> {
        let t = t.canonical();
        let lattice = Lattice::of(&t)?;
        let mut keys = HashSet::new();
        keys.insert((0, 0));
        Ok(DeltaPrimeBuilder {
            t,
            lattice,
            power: Iet::identity(),
            k: 0,
            keys,
            cards: Vec::new(),
            scratch: Vec::new(),
        })
    }

    /// Adds `Δ′(T^{k+1})` and returns the new cardinality.
    pub fn step(&mut self) -> Result<usize> {
        self.power = self.t.compose(&self.power);
        self.k += 1;
        self.scratch.clear();
        for c in self.lattice.translation_coords(&self.power)? {
            self.scratch.push(self.lattice.key(c));
        }
        self.scratch.sort_unstable();
        self.scratch.dedup();
        let den = self.lattice.denom;
        for x in &self.scratch {
            for y in &self.scratch {
                self.keys.insert((x.0 - y.0, (x.1 - y.1).rem_euclid(den)));
            }
        }
        let card = self.keys.len();
        self.cards.push(card);
        Ok(card)
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `card Δ′ₖ` for `k = 1..=self.k()`.
    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    /// Interval count of the current power.
    pub fn power_intervals(&self) -> usize {
        self.power.r()
    }

    pub fn snapshot(&self) -> DeltaSet {
        DeltaSet {
            lattice: self.lattice.clone(),
            keys: self.keys.clone(),
            n: self.k,
        }
    }
}

/// `Δ′ₙ(T) = ⋃_{k ≤ n} {x ⊖ y : x, y ∈ Δ(Tᵏ)}`.
pub fn delta_prime_n(t: &Iet, n: u64) -> Result<DeltaSet> {
    if n == 0 {
        return Err(LabError::Invalid("delta_prime_n needs n >= 1".into()));
    }
    let mut b = DeltaPrimeBuilder::new(t)?;
    for _ in 0..n {
        b.step()?;
    }
    Ok(b.snapshot())
}
