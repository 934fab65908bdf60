//! Finite-depth check of the distinct-orbit condition on discontinuities.

use serde::Serialize;

use super::Iet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum KeaneVerdict {
    /// No `Tᵏ(sᵢ) = sⱼ` for `1 ≤ k ≤ depth`.
    CertifiedMinimalToDepth { depth: u64 },
    /// `T^k(s_i) = s_j` with 1-based interior breakpoint indices.
    Violated { k: u64, i: usize, j: usize },
    /// No collision found, but the lengths are rational so every orbit is
    /// periodic and the map cannot be minimal.
    Inconclusive { depth: u64, reason: String },
}

impl KeaneVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, KeaneVerdict::CertifiedMinimalToDepth { .. })
    }
}

/// Follows the orbits of the interior breakpoints `s₁..s_{r−1}` for `depth`
/// steps and reports the first exact collision with a breakpoint.
///
/// The identity (and any map whose canonical form has `r = 1`) has no
/// discontinuity and is reported as violated at `k = 1` with `i = j = 0`:
/// every point is fixed.
pub fn keane_certificate(t: &Iet, depth: u64) -> KeaneVerdict {
    let t = t.canonical();
    let r = t.r();
    if r == 1 {
        return KeaneVerdict::Violated { k: 1, i: 0, j: 0 };
    }
    let inner = &t.breakpoints()[1..r];
    let mut orbits: Vec<_> = inner.to_vec();
    for k in 1..=depth {
        for (i, x) in orbits.iter_mut().enumerate() {
            *x = t.apply(x);
            if let Ok(j) = inner.binary_search(x) {
                return KeaneVerdict::Violated { k, i: i + 1, j: j + 1 };
            }
        }
    }
    if t.field().is_none() {
        KeaneVerdict::Inconclusive {
            depth,
            reason: "rational lengths: all orbits are periodic".into(),
        }
    } else {
        KeaneVerdict::CertifiedMinimalToDepth { depth }
    }
}
