use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ietlab_core::exactnum::ExactReal;
use ietlab_core::gauges::{dyadic_ladder, ScaleSequence};
use ietlab_core::iet::Iet;
use ini::Ini;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}field `{field}`: {msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Field { field: String, line: Option<usize>, msg: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("invalid JSON config: {0}")]
    Json(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

impl ConfigError {
    pub fn field(field: &str, msg: impl fmt::Display) -> Self {
        ConfigError::Field { field: field.to_string(), line: None, msg: msg.to_string() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Gauge,
    Constants,
    Tau,
    Discrepancy,
    Cf,
    Liouville,
    Akc,
    Induce,
    Tower,
    Towerbook,
    Mix3,
    BcMeasure,
    Decisive,
}

impl Experiment {
    pub const ALL: [Experiment; 13] = [
        Experiment::Gauge,
        Experiment::Constants,
        Experiment::Tau,
        Experiment::Discrepancy,
        Experiment::Cf,
        Experiment::Liouville,
        Experiment::Akc,
        Experiment::Induce,
        Experiment::Tower,
        Experiment::Towerbook,
        Experiment::Mix3,
        Experiment::BcMeasure,
        Experiment::Decisive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Gauge => "gauge",
            Experiment::Constants => "constants",
            Experiment::Tau => "tau",
            Experiment::Discrepancy => "discrepancy",
            Experiment::Cf => "cf",
            Experiment::Liouville => "liouville",
            Experiment::Akc => "akc",
            Experiment::Induce => "induce",
            Experiment::Tower => "tower",
            Experiment::Towerbook => "towerbook",
            Experiment::Mix3 => "mix3",
            Experiment::BcMeasure => "bc-measure",
            Experiment::Decisive => "decisive",
        }
    }

    /// Whether the experiment acts on an IET given by `target`.
    pub fn uses_target(self) -> bool {
        matches!(
            self,
            Experiment::Gauge
                | Experiment::Constants
                | Experiment::Tau
                | Experiment::Discrepancy
                | Experiment::Induce
                | Experiment::Tower
                | Experiment::BcMeasure
                | Experiment::Decisive
        )
    }

    /// Whether the experiment uses a horizon ladder.
    pub fn uses_horizons(self) -> bool {
        matches!(self, Experiment::Gauge | Experiment::Constants | Experiment::Decisive)
    }

    /// Whether the experiment writes a CSV table next to its JSON report.
    pub fn writes_csv(self) -> bool {
        matches!(
            self,
            Experiment::Gauge | Experiment::Constants | Experiment::Tau | Experiment::Discrepancy | Experiment::Decisive
        )
    }

    pub fn default_out(self) -> &'static str {
        match self {
            Experiment::Gauge => "trace.csv",
            Experiment::Constants => "constants.json",
            Experiment::Tau => "tau.json",
            Experiment::Discrepancy => "discrepancy.json",
            Experiment::Cf => "cf.json",
            Experiment::Liouville => "liouville.json",
            Experiment::Akc => "akc.json",
            Experiment::Induce => "induce.json",
            Experiment::Tower => "tower.json",
            Experiment::Towerbook => "book.json",
            Experiment::Mix3 => "mix.json",
            Experiment::BcMeasure => "bc.json",
            Experiment::Decisive => "decisive.json",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Experiment::Gauge => "running minima of the connectivity, proximality or recurrence gauge",
            Experiment::Constants => "estimates of the gauge constants over a grid of power scales",
            Experiment::Tau => "cardinalities of the difference sets and the tau-entropy slope",
            Experiment::Discrepancy => "discrepancy of orbit segments, or its growth exponent for several n",
            Experiment::Cf => "continued fraction, convergent inequality, three-distance check, type",
            Experiment::Liouville => "Liouville rotation number built from a scale sequence",
            Experiment::Akc => "certified measure of the sets A_{k,c}",
            Experiment::Induce => "first-return map to a subinterval",
            Experiment::Tower => "Rohlin tower over a short base",
            Experiment::Towerbook => "tower-height bookkeeping and its conditions",
            Experiment::Mix3 => "3-IET falsifier for topological mixing",
            Experiment::BcMeasure => "Monte Carlo measure of pairs that come close at time n",
            Experiment::Decisive => "decisiveness diagnostic of the contact gauge",
        }
    }

    pub fn default_target(self) -> Option<&'static str> {
        self.uses_target().then_some("golden")
    }

    pub fn default_horizons(self) -> Option<&'static str> {
        match self {
            Experiment::Gauge => Some("dyadic:1000000"),
            Experiment::Constants => Some("decade:100000"),
            Experiment::Decisive => Some("10,100,1000,10000,100000"),
            _ => None,
        }
    }

    pub fn schema(self) -> &'static [Param] {
        schema(self)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// Value type of a parameter, checked when a config is resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Count,
    Float,
    Exact,
    /// exact number, empty for "not given"
    OptExact,
    Scale,
    Bool,
    Counts,
    Floats,
    /// list of non-negative integers of any size
    BigCounts,
    Range,
    Choice(&'static [&'static str]),
    Text,
}

#[derive(Clone, Copy, Debug)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

const fn p(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Param {
    Param { key, kind, default, help }
}

const KINDS: &[&str] = &["phi", "psi", "rho"];
const METRICS: &[&str] = &["interval", "circle"];

fn schema(e: Experiment) -> &'static [Param] {
    use Kind::*;
    match e {
        Experiment::Gauge => {
            const S: &[Param] = &[
            p("kind", Choice(KINDS), "rho", "gauge: phi, psi or rho"),
            p("scale", Scale, "pow:1", "scale sequence"),
            p("pairs", Count, "1", "number of sampled points or pairs"),
            p("horizon", Count, "1000000", "largest horizon (used when horizons is not set)"),
            p("metric", Choice(METRICS), "interval", "distance on [0,1)"),
            p("mode", Choice(&["auto", "exact", "float"]), "auto", "orbit arithmetic"),
            p("x", OptExact, "", "start point; overrides sampling for a single sample"),
            p("y", OptExact, "", "second point for phi and psi"),
            p("exact", Bool, "false", "write exact values to the CSV"),
        ];
            S
        }
        Experiment::Constants => {
            const S: &[Param] = &[
            p("samples", Count, "1000", "sampled pairs"),
            p("alphas", Floats, "0.25,0.5,1,2", "power-scale exponents"),
            p("horizon", Count, "100000", "horizon of the estimates"),
            p("metric", Choice(METRICS), "interval", "distance on [0,1)"),
            p("theta_low", Float, "0.001", "'near zero' threshold"),
            p("theta_high", Float, "1000", "'near infinity' threshold"),
            p("delta", Float, "0.05", "tolerated mass outside the extremes"),
            p("hist_kind", Choice(KINDS), "psi", "gauge of the polarization histogram"),
            p("hist_scale", Scale, "pow:1", "scale of the polarization histogram"),
        ];
            S
        }
        Experiment::Tau => {
            const S: &[Param] = &[
            p("n_max", Count, "512", "largest n"),
            p("lo", Count, "64", "lower end of the fitted range"),
            p("hi", Count, "0", "upper end of the fitted range (0 means n_max)"),
        ];
            S
        }
        Experiment::Discrepancy => {
            const S: &[Param] = &[
            p("n", Counts, "1000", "segment lengths; several values give the growth exponent"),
            p("window", Text, "grid:4", "a,b, grid:g, or all (sampled mode only)"),
            p("mode", Choice(&["exact", "sampled"]), "exact", "sup over x or over sampled x"),
            p("samples", Count, "1000", "sampled starting points"),
        ];
            S
        }
        Experiment::Cf => {
            const S: &[Param] = &[
            p("alpha", Exact, "golden", "number in (0,1)"),
            p("depth", Count, "30", "number of convergent denominators q_0..q_{depth-1}"),
            p("n_max", Text, "", "horizon of the type estimate (default q_{depth-1})"),
            p("three_distance_m", Count, "12", "check the three-distance property for m up to this"),
        ];
            S
        }
        Experiment::Liouville => {
            const S: &[Param] = &[
            p("scale", Scale, "pow:2", "scale sequence with s_n/n unbounded"),
            p("k", Count, "5", "number of partial quotients"),
        ];
            S
        }
        Experiment::Akc => {
            const S: &[Param] = &[
            p("alpha", OptExact, "", "rotation number; empty uses the Liouville truncation"),
            p("scale", Scale, "pow:2", "scale sequence"),
            p("k", Counts, "1,2,3", "indices k"),
            p("c", Exact, "1", "constant c"),
            p("liouville_k", Count, "6", "depth of the Liouville truncation"),
            p("budget", Count, "10000000", "largest number of balls"),
        ];
            S
        }
        Experiment::Induce => {
            const S: &[Param] = &[
            p("interval", Text, "0,1/2", "inducing interval a,b"),
            p("max_steps", Count, "1000000", "step budget"),
        ];
            S
        }
        Experiment::Tower => {
            const S: &[Param] = &[p("eps", Exact, "1/100", "upper bound on the inducing length")];
            S
        }
        Experiment::Towerbook => {
            const S: &[Param] = &[
            p("m", BigCounts, "", "m_1..m_K (empty generates a sequence)"),
            p("n", BigCounts, "", "n_1..n_K"),
            p("k", Count, "4", "depth K of a generated sequence"),
            p("m1", BigCounts, "9", "first m of a generated sequence"),
            p("n1", BigCounts, "2", "first n of a generated sequence"),
            p("b", BigCounts, "1,1,1,1", "b_{1,1}..b_{1,4}"),
            p("conv_r", Count, "4", "r in the convergence-lemma bound"),
        ];
            S
        }
        Experiment::Mix3 => {
            const S: &[Param] = &[
            p("alpha", Exact, "golden", "rotation number"),
            p("t", Exact, "3/2-sqrt(5)/2", "inducing on [1-t,1)"),
            p("mrange", Range, "6:14", "convergent indices m_lo:m_hi"),
            p("cells", Count, "20", "number of equal cells"),
        ];
            S
        }
        Experiment::BcMeasure => {
            const S: &[Param] = &[
            p("n", Count, "100", "time n"),
            p("c", Float, "0.6", "exponent c"),
            p("samples", Count, "1000000", "sampled pairs"),
            p("metric", Choice(METRICS), "interval", "distance on [0,1)"),
        ];
            S
        }
        Experiment::Decisive => {
            const S: &[Param] = &[
            p("scale", Scale, "pow:1", "scale sequence"),
            p("samples", Count, "1000", "sampled points"),
            p("points", Text, "orbit", "orbit (of x0 under the target) or const:<y>"),
            p("x0", Exact, "0", "start of the orbit"),
            p("theta_low", Float, "0.001", "'near zero' threshold"),
            p("theta_high", Float, "1000", "'near infinity' threshold"),
            p("delta", Float, "0.05", "tolerated mass outside the extremes"),
        ];
            S
        }
    }
}

/// Named constants accepted wherever an exact number is expected.
pub fn parse_exact(s: &str) -> Result<ExactReal, String> {
    match s.trim() {
        "golden" => Ok(ExactReal::golden()),
        "silver" => Ok("sqrt(2)-1".parse().map_err(|e| format!("{e}"))?),
        other => other.parse::<ExactReal>().map_err(|e| format!("{e}")),
    }
}

/// Parses an IET literal, accepting the named rotations as well.
pub fn parse_target(s: &str) -> Result<Iet, String> {
    let s = s.trim();
    if s == "silver" {
        return Iet::rotation(&parse_exact(s)?).map_err(|e| e.to_string());
    }
    s.parse::<Iet>().map_err(|e| e.to_string())
}

/// Integer counts, allowing `1e6` style.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("expected a non-negative integer, got {s:?}")),
    }
}

pub fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| f(t.trim())).collect()
}

/// `dyadic:N`, `decade:N` or an explicit increasing list `a,b,c`.
pub fn parse_horizons(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let v = if let Some(n) = s.strip_prefix("dyadic:") {
        dyadic_ladder(parse_count(n)?.max(1))
    } else if let Some(n) = s.strip_prefix("decade:") {
        let n = parse_count(n)?.max(1);
        let mut v: Vec<u64> = (0..20).map(|k| 10u64.pow(k)).take_while(|&h| h < n).collect();
        v.push(n);
        v
    } else {
        parse_list(s, parse_count)?
    };
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("horizons must be positive and increasing, got {s:?}"));
    }
    Ok(v)
}

fn check_value(kind: Kind, v: &str) -> Result<(), String> {
    match kind {
        Kind::Count => parse_count(v).map(|_| ()),
        Kind::Float => v.trim().parse::<f64>().map(|_| ()).map_err(|_| format!("expected a number, got {v:?}")),
        Kind::Exact => parse_exact(v).map(|_| ()),
        Kind::OptExact if v.trim().is_empty() => Ok(()),
        Kind::OptExact => parse_exact(v).map(|_| ()),
        Kind::Scale => v.parse::<ScaleSequence>().map(|_| ()).map_err(|e| e.to_string()),
        Kind::Bool => v.trim().parse::<bool>().map(|_| ()).map_err(|_| format!("expected true or false, got {v:?}")),
        Kind::Counts => parse_list(v, parse_count).map(|_| ()),
        Kind::Floats => parse_list(v, |t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}"))).map(|_| ()),
        Kind::BigCounts => parse_list(v, |t| {
            t.parse::<num_bigint::BigUint>().map_err(|_| format!("bad integer {t:?}"))
        })
        .map(|_| ()),
        Kind::Range => parse_range(v).map(|_| ()),
        Kind::Choice(opts) if opts.contains(&v.trim()) => Ok(()),
        Kind::Choice(opts) => Err(format!("expected one of {}, got {v:?}", opts.join(", "))),
        Kind::Text => Ok(()),
    }
}

/// `lo:hi`, inclusive.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let (a, b) = (parse_count(a)? as usize, parse_count(b)? as usize);
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok((a, b))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// main output file; `.csv` or `.json`, the other one is written next to it
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default)]
    pub output: Output,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            target: None,
            seed: default_seed(),
            horizons: None,
            parameters: BTreeMap::new(),
            output: Output::default(),
        }
    }

    /// Sets `key` to `value`; `target`, `seed`, `horizons` and `out` address
    /// the fixed fields, anything else is a parameter.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "target" | "iet" => self.target = Some(value.to_string()),
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| ConfigError::field("seed", format!("expected a 64-bit integer, got {value:?}")))?
            }
            "horizons" => self.horizons = Some(value.to_string()),
            "out" => self.output.out = Some(value.to_string()),
            _ => {
                self.parameters.insert(key, value.to_string());
            }
        }
        Ok(())
    }

    /// Checks every field and fills in the defaults that apply, so the
    /// result records everything a run uses.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let e = self.experiment;
        let mut out = self.clone();
        if e.uses_target() {
            let t = out.target.get_or_insert_with(|| e.default_target().unwrap().to_string());
            parse_target(t).map_err(|m| ConfigError::field("target", m))?;
        } else if out.target.is_some() {
            return Err(ConfigError::field("target", format!("{e} takes no target")));
        }
        let schema = e.schema();
        for key in out.parameters.keys() {
            if !schema.iter().any(|p| p.key == key) {
                let known: Vec<_> = schema.iter().map(|p| p.key).collect();
                return Err(ConfigError::field(key, format!("unknown parameter for {e}; known: {}", known.join(", "))));
            }
        }
        for p in schema {
            let v = out.parameters.entry(p.key.to_string()).or_insert_with(|| p.default.to_string());
            check_value(p.kind, v).map_err(|m| ConfigError::field(p.key, m))?;
        }
        if e.uses_horizons() {
            let h = match (&out.horizons, e) {
                (Some(h), _) => h.clone(),
                (None, Experiment::Gauge) => format!("dyadic:{}", out.parameters["horizon"]),
                (None, _) => e.default_horizons().unwrap().to_string(),
            };
            parse_horizons(&h).map_err(|m| ConfigError::field("horizons", m))?;
            out.horizons = Some(h);
        } else if out.horizons.is_some() {
            return Err(ConfigError::field("horizons", format!("{e} takes no horizons")));
        }
        if out.output.out.is_none() {
            out.output.out = Some(e.default_out().to_string());
        }
        Ok(out)
    }

    pub fn param(&self, key: &str) -> &str {
        self.parameters.get(key).map(String::as_str).unwrap_or("")
    }

    /// `(json, csv)` output paths.
    pub fn paths(&self) -> (PathBuf, Option<PathBuf>) {
        let out = PathBuf::from(self.output.out.clone().unwrap_or_else(|| self.experiment.default_out().into()));
        let is_csv = out.extension().is_some_and(|x| x == "csv");
        let json = if is_csv { out.with_extension("json") } else { out.clone() };
        let csv = self.experiment.writes_csv().then(|| if is_csv { out.clone() } else { out.with_extension("csv") });
        (json, csv)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn from_json(src: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(src).map_err(|e| ConfigError::Json(format!("line {}: {e}", e.line())))
    }

    pub fn to_ini(&self) -> String {
        let mut ini = Ini::new();
        {
            let mut s = ini.with_section(Some("experiment"));
            s.set("name", self.experiment.name());
            if let Some(t) = &self.target {
                s.set("target", t.as_str());
            }
            s.set("seed", self.seed.to_string());
            if let Some(h) = &self.horizons {
                s.set("horizons", h.as_str());
            }
        }
        for (k, v) in &self.parameters {
            ini.with_section(Some("parameters")).set(k.as_str(), v.as_str());
        }
        if let Some(o) = &self.output.out {
            ini.with_section(Some("output")).set("out", o.as_str());
        }
        let mut buf = Vec::new();
        let opt = ini::WriteOption { line_separator: ini::LineSeparator::CR, ..Default::default() };
        ini.write_to_opt(&mut buf, opt).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn from_ini(src: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(src).map_err(|e| ConfigError::Syntax { line: e.line + 1, msg: e.msg.to_string() })?;
        let at = |section: &str, key: &str| line_of(src, section, key);
        let mut known = 0;
        let exp = ini
            .section(Some("experiment"))
            .ok_or(ConfigError::Syntax { line: 1, msg: "missing [experiment] section".into() })?;
        let name = exp
            .get("name")
            .ok_or(ConfigError::Field { field: "name".into(), line: None, msg: "missing in [experiment]".into() })?;
        let mut cfg = ExperimentConfig::new(name.parse()?);
        for (k, v) in exp.iter() {
            match k {
                "name" => {}
                "target" | "seed" | "horizons" => cfg.set(k, v).map_err(|e| with_line(e, at("experiment", k)))?,
                _ => {
                    return Err(ConfigError::Field {
                        field: k.into(),
                        line: at("experiment", k),
                        msg: "unknown key in [experiment]".into(),
                    })
                }
            }
        }
        known += 1;
        if let Some(params) = ini.section(Some("parameters")) {
            for (k, v) in params.iter() {
                cfg.parameters.insert(k.to_string(), v.to_string());
            }
            known += 1;
        }
        if let Some(out) = ini.section(Some("output")) {
            for (k, v) in out.iter() {
                if k != "out" {
                    return Err(ConfigError::Field { field: k.into(), line: at("output", k), msg: "unknown key in [output]".into() });
                }
                cfg.output.out = Some(v.to_string());
            }
            known += 1;
        }
        let sections = ini.sections().filter(|s| s.is_some()).count();
        if sections != known {
            let bad = ini
                .sections()
                .flatten()
                .find(|s| !["experiment", "parameters", "output"].contains(s))
                .unwrap_or("?");
            return Err(ConfigError::Syntax { line: section_line(src, bad).unwrap_or(1), msg: format!("unknown section [{bad}]") });
        }
        Ok(cfg)
    }

    /// Reads a config file; `.json` files are JSON, anything else INI.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let cfg = if path.extension().is_some_and(|x| x == "json") {
            Self::from_json(&src)?
        } else {
            Self::from_ini(&src)?
        };
        cfg.resolve().map_err(|e| match e {
            ConfigError::Field { field, line: None, msg } => {
                let line = line_of(&src, "parameters", &field).or_else(|| line_of(&src, "experiment", &field));
                ConfigError::Field { field, line, msg }
            }
            other => other,
        })
    }
}

fn with_line(e: ConfigError, line: Option<usize>) -> ConfigError {
    match e {
        ConfigError::Field { field, msg, .. } => ConfigError::Field { field, line, msg },
        other => other,
    }
}

fn section_line(src: &str, section: &str) -> Option<usize> {
    src.lines().position(|l| l.trim() == format!("[{section}]")).map(|i| i + 1)
}

/// 1-based line of `key` inside `[section]`, for diagnostics.
fn line_of(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut inside = false;
    for (i, l) in src.lines().enumerate() {
        let t = l.trim();
        if t.starts_with('[') {
            inside = t == format!("[{section}]");
        } else if inside {
            let k = t.split(['=', ':']).next().unwrap_or("").trim();
            if k == key {
                return Some(i + 1);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::new(Experiment::Gauge).resolve().unwrap();
        assert_eq!(c.target.as_deref(), Some("golden"));
        assert_eq!(c.param("kind"), "rho");
        assert_eq!(c.horizons.as_deref(), Some("dyadic:1000000"));
        assert_eq!(c.paths().1.unwrap(), PathBuf::from("trace.csv"));
        assert_eq!(c.paths().0, PathBuf::from("trace.json"));
        assert!(ExperimentConfig::new(Experiment::Cf).resolve().unwrap().target.is_none());
    }

    #[test]
    fn field_errors_name_the_field_and_line() {
        let src = "[experiment]\nname = gauge\n\n[parameters]\nkind = chi\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ini");
        std::fs::write(&path, src).unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err().to_string();
        assert!(err.contains("line 5") && err.contains("kind"), "{err}");
        let src = "[experiment]\nname = gauge\n[parameters]\nbogus = 1\n";
        std::fs::write(&path, src).unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("bogus"), "{err}");
        assert!(matches!(ExperimentConfig::from_ini("[experiment]\nname = nope\n"), Err(ConfigError::UnknownExperiment(_))));
        assert!(matches!(ExperimentConfig::from_ini("[experiment\n"), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn horizon_specs() {
        assert_eq!(parse_horizons("decade:1000").unwrap(), vec![1, 10, 100, 1000]);
        assert_eq!(parse_horizons("dyadic:5").unwrap(), vec![1, 2, 4, 5]);
        assert_eq!(parse_horizons("3,1e2").unwrap(), vec![3, 100]);
        assert!(parse_horizons("5,4").is_err());
        assert_eq!(parse_count("1e6").unwrap(), 1_000_000);
    }
}
