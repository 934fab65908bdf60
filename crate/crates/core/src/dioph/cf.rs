use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exactnum::ExactReal;

/// `α = [0; a₁, a₂, …]` with convergents `pₖ/qₖ`, `p₀ = 0, q₀ = 1`,
/// `p₁ = 1, q₁ = a₁`, `xₖ = aₖxₖ₋₁ + xₖ₋₂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuedFraction {
    /// the number expanded, when it is known exactly
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<ExactReal>,
    /// `a₁..a_K`
    #[serde(serialize_with = "big_strings")]
    pub a: Vec<BigInt>,
    /// `p₀..p_K`
    #[serde(serialize_with = "big_strings")]
    pub p: Vec<BigInt>,
    /// `q₀..q_K`
    #[serde(serialize_with = "big_strings")]
    pub q: Vec<BigInt>,
    /// `(start, length)` of the detected period of `a`, 0-based into `a`
    pub period: Option<(usize, usize)>,
}

pub(crate) fn big_strings<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

impl ContinuedFraction {
    /// Builds the convergents of `[0; a₁, …]`.
    pub fn from_quotients(a: Vec<BigInt>) -> Result<Self> {
        if a.iter().any(|x| !x.is_positive()) {
            return Err(LabError::Invalid("partial quotients must be positive".into()));
        }
        let (mut p, mut q) = (vec![BigInt::zero()], vec![BigInt::one()]);
        let (mut pm, mut qm) = (BigInt::one(), BigInt::zero());
        for ak in &a {
            let pk = ak * p.last().unwrap() + &pm;
            let qk = ak * q.last().unwrap() + &qm;
            pm = p.last().unwrap().clone();
            qm = q.last().unwrap().clone();
            p.push(pk);
            q.push(qk);
        }
        Ok(ContinuedFraction {
            alpha: None,
            a,
            p,
            q,
            period: None,
        })
    }

    /// Number of partial quotients.
    pub fn depth(&self) -> usize {
        self.a.len()
    }

    /// `p_k / q_k`.
    pub fn convergent(&self, k: usize) -> ExactReal {
        ExactReal::from_rational(BigRational::new(self.p[k].clone(), self.q[k].clone()))
    }

    /// Largest `k` with `q_k ≤ n`.
    pub fn index_below(&self, n: &BigInt) -> Option<usize> {
        self.q.iter().rposition(|q| q <= n)
    }
}

/// Partial quotients of `α ∈ (0,1)` by the Gauss map `x ↦ {1/x}` in exact
/// arithmetic. Quadratic irrationals are eventually periodic; once a state
/// repeats the remaining quotients are copied from the period.
pub fn cf_expand(alpha: &ExactReal, k: usize) -> Result<ContinuedFraction> {
    if !alpha.is_positive() || *alpha >= ExactReal::one() {
        return Err(LabError::Invalid(format!("{alpha} is outside (0,1)")));
    }
    if alpha.is_rational() {
        return Err(LabError::RationalInput(alpha.to_string()));
    }
    let mut seen: HashMap<ExactReal, usize> = HashMap::new();
    let mut a: Vec<BigInt> = Vec::with_capacity(k);
    let mut x = alpha.clone();
    let mut period = None;
    while a.len() < k {
        if let Some(&start) = seen.get(&x) {
            let len = a.len() - start;
            period = Some((start, len));
            while a.len() < k {
                let next = a[start + (a.len() - start) % len].clone();
                a.push(next);
            }
            break;
        }
        seen.insert(x.clone(), a.len());
        let inv = x.recip()?;
        let ak = inv.floor();
        x = &inv - &ExactReal::from_bigint(ak.clone());
        a.push(ak);
    }
    let mut cf = ContinuedFraction::from_quotients(a)?;
    cf.alpha = Some(alpha.clone());
    cf.period = period;
    Ok(cf)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergentCheck {
    pub n: usize,
    pub holds: bool,
}

/// `‖α qₙ‖ < 1/qₙ₊₁` for every `n` with `qₙ₊₁` available, exactly.
pub fn check_convergent_ineq(cf: &ContinuedFraction, alpha: &ExactReal) -> Vec<ConvergentCheck> {
    (0..cf.q.len().saturating_sub(1))
        .map(|n| {
            let lhs = alpha.mul_int(&cf.q[n]).nearest_int_dist();
            let rhs = ExactReal::from_rational(BigRational::new(BigInt::one(), cf.q[n + 1].clone()));
            ConvergentCheck { n, holds: lhs < rhs }
        })
        .collect()
}

/// `ln x` for a positive big integer.
pub(crate) fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_string().parse::<f64>().map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_string().parse::<f64>().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeEstimate {
    pub nu_hat: f64,
    /// `(q_k, −log‖q_kα‖ / log q_k)` for the convergents in the tail window
    pub points: Vec<(String, f64)>,
    pub note: String,
}

/// Minimum of `−log‖nα‖ / log n` over convergent denominators in the tail
/// `(√n_max, n_max]`, where the ratio dips. Without an exact `α` the
/// lower estimate `‖q_kα‖ < 1/q_{k+1}` is used.
pub fn type_estimate(cf: &ContinuedFraction, n_max: &BigInt) -> Result<TypeEstimate> {
    let lo = n_max.sqrt();
    let mut points = Vec::new();
    for k in 0..cf.q.len() {
        let q = &cf.q[k];
        if q <= &lo || q > n_max || q <= &BigInt::one() {
            continue;
        }
        let neg_log = match &cf.alpha {
            Some(a) => -a.mul_int(q).nearest_int_dist().to_f64().ln(),
            None => match cf.q.get(k + 1) {
                Some(next) => big_ln(next),
                None => continue,
            },
        };
        points.push((q.to_string(), neg_log / big_ln(q)));
    }
    if points.is_empty() {
        return Err(LabError::Invalid(format!(
            "no convergent denominator in ({lo}, {n_max}]; expand further"
        )));
    }
    let nu_hat = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(TypeEstimate {
        nu_hat,
        points,
        note: format!("finite-horizon estimate over convergents up to {n_max}"),
    })
}
