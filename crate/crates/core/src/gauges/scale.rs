use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use evalexpr::{build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, Function, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Longest table precomputed for scans; longer horizons evaluate on the fly.
const TABLE_CAP: u64 = 1 << 22;

/// A positive sequence `sₙ → ∞` weighting distances in a gauge.
#[derive(Clone, Debug, PartialEq)]
pub enum ScaleSequence {
    /// `n^α`
    Power { alpha: f64 },
    /// `n^α (ln n)^β`, from `n = 2`
    PowerLog { alpha: f64, beta: f64 },
    /// `s₁, …, s_H` given explicitly
    Table { values: Vec<f64> },
    /// a formula in `n` (functions `ln`, `log`, `exp`, `sqrt`, operator `^`)
    Expr { source: String },
}

/// Growth classes of a scale sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleFlags {
    pub monotone: bool,
    pub steady: bool,
    pub two_jumpy: bool,
    pub bounded_ratio: bool,
    pub nice: bool,
    /// false when the flags come from a finite table rather than a closed form
    pub closed_form: bool,
}

impl ScaleSequence {
    pub fn power(alpha: f64) -> Result<Self> {
        Self::validate(ScaleSequence::Power { alpha })
    }

    pub fn power_log(alpha: f64, beta: f64) -> Result<Self> {
        Self::validate(ScaleSequence::PowerLog { alpha, beta })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        Self::validate(ScaleSequence::Table { values })
    }

    pub fn expr(source: &str) -> Result<Self> {
        Self::validate(ScaleSequence::Expr { source: source.trim().to_string() })
    }

    fn validate(s: Self) -> Result<Self> {
        match &s {
            ScaleSequence::Power { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(LabError::Invalid(format!("power exponent {alpha} must be positive")));
                }
            }
            ScaleSequence::PowerLog { alpha, beta } => {
                let grows = *alpha > 0.0 || (*alpha == 0.0 && *beta > 0.0);
                if !(alpha.is_finite() && beta.is_finite() && grows) {
                    return Err(LabError::Invalid(format!(
                        "n^{alpha} (ln n)^{beta} does not tend to infinity"
                    )));
                }
            }
            ScaleSequence::Table { values } => {
                if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(LabError::Invalid("table values must be finite and positive".into()));
                }
            }
            ScaleSequence::Expr { source } => {
                let f = Formula::compile(source)?;
                f.eval(2)?;
            }
        }
        Ok(s)
    }

    /// First index at which the sequence is defined.
    pub fn first_index(&self) -> u64 {
        match self {
            ScaleSequence::PowerLog { beta, .. } if *beta != 0.0 => 2,
            _ => 1,
        }
    }

    /// Last index for tables, `None` for unbounded sequences.
    pub fn horizon(&self) -> Option<u64> {
        match self {
            ScaleSequence::Table { values } => Some(values.len() as u64),
            _ => None,
        }
    }

    /// `k` when `sₙ = n^k` with a small integer `k`, so that values are exact.
    pub fn exact_power(&self) -> Option<u32> {
        match self {
            ScaleSequence::Power { alpha } if alpha.fract() == 0.0 && *alpha >= 1.0 && *alpha <= 8.0 => {
                Some(*alpha as u32)
            }
            _ => None,
        }
    }

    pub fn value(&self, n: u64) -> Result<f64> {
        if n < self.first_index() {
            return Err(LabError::Invalid(format!("scale sequence starts at n = {}", self.first_index())));
        }
        match self {
            ScaleSequence::Power { alpha } => Ok((n as f64).powf(*alpha)),
            ScaleSequence::PowerLog { alpha, beta } => Ok(power_log(n as f64, *alpha, *beta)),
            ScaleSequence::Table { values } => values
                .get(n as usize - 1)
                .copied()
                .ok_or_else(|| LabError::Invalid(format!("table has no entry for n = {n}"))),
            ScaleSequence::Expr { source } => Formula::compile(source)?.eval(n),
        }
    }

    /// An evaluator for `n ≤ n_max`, precomputing a table where that is
    /// cheaper than evaluating per step.
    pub fn evaluator(&self, n_max: u64) -> Result<ScaleEval> {
        if let Some(h) = self.horizon() {
            if n_max > h {
                return Err(LabError::Invalid(format!("horizon {n_max} exceeds the table length {h}")));
            }
        }
        match self {
            ScaleSequence::Power { alpha } if *alpha == 1.0 => Ok(ScaleEval::Identity),
            ScaleSequence::Table { values } => Ok(ScaleEval::Table(Arc::new(
                std::iter::once(f64::NAN).chain(values.iter().copied()).collect(),
            ))),
            ScaleSequence::Expr { source } => {
                if n_max > TABLE_CAP {
                    return Err(LabError::Invalid(format!(
                        "formula scales are tabulated; horizon {n_max} exceeds {TABLE_CAP}"
                    )));
                }
                let f = Formula::compile(source)?;
                let mut t = vec![f64::NAN; n_max as usize + 1];
                for n in 1..=n_max {
                    let v = f.eval(n)?;
                    if !(v.is_finite() && v > 0.0) {
                        return Err(LabError::Invalid(format!("s_{n} = {v} is not positive")));
                    }
                    t[n as usize] = v;
                }
                Ok(ScaleEval::Table(Arc::new(t)))
            }
            _ if n_max <= TABLE_CAP => {
                let mut t = vec![f64::NAN; n_max as usize + 1];
                for n in self.first_index()..=n_max {
                    t[n as usize] = self.value(n)?;
                }
                Ok(ScaleEval::Table(Arc::new(t)))
            }
            ScaleSequence::Power { alpha } => Ok(ScaleEval::Power(*alpha)),
            ScaleSequence::PowerLog { alpha, beta } => Ok(ScaleEval::PowerLog(*alpha, *beta)),
        }
    }

    /// The five growth flags.
    pub fn classify(&self) -> ScaleFlags {
        classify_scale(self)
    }
}

fn power_log(x: f64, alpha: f64, beta: f64) -> f64 {
    x.powf(alpha) * x.ln().powf(beta)
}

/// Fast per-index evaluation of `sₙ`.
#[derive(Clone, Debug)]
pub enum ScaleEval {
    Identity,
    Power(f64),
    PowerLog(f64, f64),
    Table(Arc<Vec<f64>>),
}

impl ScaleEval {
    #[inline]
    pub fn at(&self, n: u64) -> f64 {
        match self {
            ScaleEval::Identity => n as f64,
            ScaleEval::Power(a) => (n as f64).powf(*a),
            ScaleEval::PowerLog(a, b) => power_log(n as f64, *a, *b),
            ScaleEval::Table(t) => t[n as usize],
        }
    }
}

struct Formula {
    tree: Node,
    ctx: HashMapContext,
}

impl Formula {
    fn compile(source: &str) -> Result<Self> {
        let bad = |e: evalexpr::EvalexprError| LabError::Invalid(format!("formula `{source}`: {e}"));
        let tree = build_operator_tree(source).map_err(bad)?;
        let mut ctx = HashMapContext::new();
        let unary: [(&str, fn(f64) -> f64); 5] = [
            ("ln", f64::ln),
            ("log", f64::ln),
            ("exp", f64::exp),
            ("sqrt", f64::sqrt),
            ("abs", f64::abs),
        ];
        for (name, f) in unary {
            ctx.set_function(
                name.into(),
                Function::new(move |v: &Value| Ok(Value::Float(f(v.as_number()?)))),
            )
            .map_err(bad)?;
        }
        Ok(Formula { tree, ctx })
    }

    fn eval(&self, n: u64) -> Result<f64> {
        let mut ctx = self.ctx.clone();
        ctx.set_value("n".into(), Value::Float(n as f64))
            .map_err(|e| LabError::Invalid(e.to_string()))?;
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| LabError::Invalid(format!("formula at n = {n}: {e}")))
    }
}

/// Monotone, steady, two-jumpy, bounded-ratio and nice, from the closed form
/// when there is one and otherwise from the finite table.
pub fn classify_scale(s: &ScaleSequence) -> ScaleFlags {
    match s {
        ScaleSequence::Power { .. } => ScaleFlags {
            monotone: true,
            steady: true,
            two_jumpy: true,
            bounded_ratio: true,
            nice: true,
            closed_form: true,
        },
        ScaleSequence::PowerLog { alpha, beta } => {
            // d/dx ln s = (α + β/ln x)/x, non-negative on [2, ∞) iff this holds
            let monotone = *beta >= 0.0 || alpha + beta / std::f64::consts::LN_2 >= 0.0;
            let two_jumpy = monotone && *alpha > 0.0;
            ScaleFlags {
                monotone,
                steady: true,
                two_jumpy,
                bounded_ratio: true,
                nice: two_jumpy,
                closed_form: true,
            }
        }
        ScaleSequence::Table { values } => classify_table(values),
        ScaleSequence::Expr { .. } => {
            let vals: Vec<f64> = (1..=4096u64).map_while(|n| s.value(n).ok()).collect();
            classify_table(&vals)
        }
    }
}

/// Least-squares line through `(x, y)`: returns `(intercept, slope)`.
pub(crate) fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Finite-horizon classification. Limits are extrapolated from the dyadic
/// tail: `ln(s₂ₙ/sₙ)` against `1/ln n` (its intercept estimates the liminf),
/// and `ln(sₙ₊₁/sₙ)` against `ln n` (a positive trend means unbounded ratios).
fn classify_table(v: &[f64]) -> ScaleFlags {
    let h = v.len();
    let s = |n: usize| v[n - 1];
    let monotone = v.windows(2).all(|w| w[1] >= w[0]);
    if h < 8 {
        return ScaleFlags {
            monotone,
            steady: false,
            two_jumpy: false,
            bounded_ratio: false,
            nice: false,
            closed_form: false,
        };
    }
    let step = |n: usize| (s(n + 1) / s(n)).ln();
    let steady = (3 * h / 4..h).all(|n| step(n).abs() < 0.05);

    let tail_start = ((h as f64).sqrt() as usize).max(2);
    let mut doubling = Vec::new();
    let mut ratio = Vec::new();
    let mut n = 2usize;
    while 2 * n <= h {
        if n >= tail_start {
            let nf = n as f64;
            doubling.push((1.0 / nf.ln(), (s(2 * n) / s(n)).ln()));
        }
        n *= 2;
    }
    let mut n = 2usize;
    while n < h {
        if n >= tail_start {
            ratio.push(((n as f64).ln(), step(n)));
        }
        n *= 2;
    }
    let liminf_doubling = match doubling.len() {
        0 => 0.0,
        1 => doubling[0].1,
        _ => fit_line(&doubling).0,
    };
    let two_jumpy = monotone && liminf_doubling > 1.05f64.ln();
    let bounded_ratio = match ratio.len() {
        0 | 1 => true,
        _ => fit_line(&ratio).1 <= 0.05,
    };
    ScaleFlags {
        monotone,
        steady,
        two_jumpy,
        bounded_ratio,
        nice: two_jumpy && bounded_ratio,
        closed_form: false,
    }
}

impl fmt::Display for ScaleSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleSequence::Power { alpha } => write!(f, "pow:{alpha}"),
            ScaleSequence::PowerLog { alpha, beta } => write!(f, "powlog:{alpha},{beta}"),
            ScaleSequence::Table { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "table:{}", parts.join(","))
            }
            ScaleSequence::Expr { source } => write!(f, "expr:{source}"),
        }
    }
}

impl FromStr for ScaleSequence {
    type Err = LabError;

    /// `pow:α`, `powlog:α,β`, `table:s₁,s₂,…` or `expr:<formula in n>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| LabError::Invalid(format!("scale `{s}` lacks a `kind:` prefix")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| LabError::Invalid(format!("`{t}` is not a number")))
        };
        match kind.trim() {
            "pow" => ScaleSequence::power(num(rest)?),
            "powlog" => {
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| LabError::Invalid("powlog needs alpha,beta".into()))?;
                ScaleSequence::power_log(num(a)?, num(b)?)
            }
            "table" => ScaleSequence::table(rest.split(',').map(num).collect::<Result<_>>()?),
            "expr" => ScaleSequence::expr(rest),
            other => Err(LabError::Invalid(format!("unknown scale kind `{other}`"))),
        }
    }
}

impl Serialize for ScaleSequence {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScaleSequence {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
