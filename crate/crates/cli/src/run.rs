use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use ietlab_core::dioph::{
    akc_measure, cf_expand, check_convergent_ineq, liouville_from_scale, mixing_falsifier, three_distance_check,
    type_estimate, MAX_Q,
};
use ietlab_core::exactnum::ExactReal;
use ietlab_core::gauges::{
    decisiveness_diagnostic, discrepancy, estimate_constants, gauge_trace_with, loglog_slope, omega_discrepancy,
    polarization_histogram, proximality_bc_measure, sample_pair, tau_entropy, DiscMode, GaugeKind, GaugeTrace, Metric,
    PointSequence, ScaleSequence, Thresholds, TraceMode, TraceOptions, Window,
};
use ietlab_core::iet::{FastIet, Iet};
use ietlab_core::induce::{find_tower, first_return, generate_sequence, tower_book, HeuristicRule};
use ietlab_core::sampling::dyadic_value;
use ietlab_core::LabError;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{parse_count, parse_exact, parse_horizons, parse_list, parse_range, parse_target, ConfigError, ExperimentConfig};
use crate::table::Table;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub wall_ms: u64,
    /// orbit steps, where the experiment has a natural count
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: String,
    pub config: ExperimentConfig,
    pub payload: Value,
    /// property checks; any false one makes the run exit with status 2
    pub checks: BTreeMap<String, bool>,
    pub timing: Timing,
}

impl Report {
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The report without its timing fields, which is what reruns reproduce.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string_pretty(&v).unwrap() + "\n"
    }
}

/// Everything a run produces, before it is written out.
pub struct Outcome {
    pub report: Report,
    pub json_path: PathBuf,
    /// `(path, contents)` of every CSV file
    pub tables: Vec<(PathBuf, String)>,
}

impl Outcome {
    pub fn write(&self) -> Result<(), RunError> {
        let io = |p: &PathBuf, e: std::io::Error| RunError::Io { path: p.display().to_string(), msg: e.to_string() };
        for (p, body) in &self.tables {
            std::fs::write(p, body).map_err(|e| io(p, e))?;
        }
        std::fs::write(&self.json_path, self.report.to_json()).map_err(|e| io(&self.json_path, e))
    }
}

struct Payload {
    value: Value,
    checks: BTreeMap<String, bool>,
    tables: Vec<(Option<&'static str>, Table)>,
    steps: Option<u64>,
}

impl Payload {
    fn new(value: Value) -> Self {
        Payload { value, checks: BTreeMap::new(), tables: Vec::new(), steps: None }
    }

    fn check(mut self, name: &str, ok: bool) -> Self {
        self.checks.insert(name.to_string(), ok);
        self
    }

    /// `suffix` `None` is the main table, otherwise `<stem>_<suffix>.csv`.
    fn table(mut self, suffix: Option<&'static str>, t: Table) -> Self {
        self.tables.push((suffix, t));
        self
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn field<T>(key: &str, r: Result<T, String>) -> Result<T, RunError> {
    r.map_err(|m| ConfigError::field(key, m).into())
}

/// Typed access to a resolved config.
struct Params<'a>(&'a ExperimentConfig);

impl Params<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.param(key)
    }
    fn count(&self, key: &str) -> Result<u64, RunError> {
        field(key, parse_count(self.raw(key)))
    }
    fn float(&self, key: &str) -> Result<f64, RunError> {
        field(key, self.raw(key).trim().parse::<f64>().map_err(|e| e.to_string()))
    }
    fn exact(&self, key: &str) -> Result<ExactReal, RunError> {
        field(key, parse_exact(self.raw(key)))
    }
    fn opt_exact(&self, key: &str) -> Result<Option<ExactReal>, RunError> {
        if self.raw(key).trim().is_empty() {
            Ok(None)
        } else {
            self.exact(key).map(Some)
        }
    }
    fn scale(&self, key: &str) -> Result<ScaleSequence, RunError> {
        Ok(self.raw(key).parse::<ScaleSequence>()?)
    }
    fn metric(&self) -> Result<Metric, RunError> {
        Ok(self.raw("metric").parse::<Metric>()?)
    }
    fn kind(&self, key: &str) -> Result<GaugeKind, RunError> {
        Ok(self.raw(key).parse::<GaugeKind>()?)
    }
    fn counts(&self, key: &str) -> Result<Vec<u64>, RunError> {
        field(key, parse_list(self.raw(key), parse_count))
    }
    fn bigs(&self, key: &str) -> Result<Vec<BigInt>, RunError> {
        field(key, parse_list(self.raw(key), |t| t.parse::<BigInt>().map_err(|e| e.to_string())))
    }
    fn thresholds(&self) -> Result<Thresholds, RunError> {
        Ok(Thresholds {
            theta_low: self.float("theta_low")?,
            theta_high: self.float("theta_high")?,
            delta: self.float("delta")?,
        })
    }
    fn target(&self) -> Result<Iet, RunError> {
        field("target", parse_target(self.0.target.as_deref().unwrap_or("golden")))
    }
    fn horizons(&self) -> Result<Vec<u64>, RunError> {
        field("horizons", parse_horizons(self.0.horizons.as_deref().unwrap_or("")))
    }
}

/// Resolves `cfg`, runs the experiment and collects the outputs without
/// touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    use crate::config::Experiment as E;
    let cfg = cfg.resolve()?;
    let started = Instant::now();
    let p = Params(&cfg);
    let payload = match cfg.experiment {
        E::Gauge => gauge(&cfg, &p)?,
        E::Constants => constants(&cfg, &p)?,
        E::Tau => tau(&p)?,
        E::Discrepancy => disc(&cfg, &p)?,
        E::Cf => cf(&p)?,
        E::Liouville => liouville(&p)?,
        E::Akc => akc(&p)?,
        E::Induce => induce(&p)?,
        E::Tower => tower(&p)?,
        E::Towerbook => towerbook(&p)?,
        E::Mix3 => mix3(&p)?,
        E::BcMeasure => bc(&cfg, &p)?,
        E::Decisive => decisive(&cfg, &p)?,
    };
    let wall_ms = started.elapsed().as_millis() as u64;
    let (json_path, csv_path) = cfg.paths();
    let mut tables = Vec::new();
    for (suffix, t) in payload.tables {
        let main = csv_path.clone().unwrap_or_else(|| json_path.with_extension("csv"));
        let path = match suffix {
            None => main,
            Some(sfx) => {
                let stem = main.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                main.with_file_name(format!("{stem}_{sfx}.csv"))
            }
        };
        tables.push((path, t.to_csv()));
    }
    Ok(Outcome {
        report: Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg,
            payload: payload.value,
            checks: payload.checks,
            timing: Timing { wall_ms, steps: payload.steps },
        },
        json_path,
        tables,
    })
}

fn gauge(cfg: &ExperimentConfig, p: &Params) -> Result<Payload, RunError> {
    let t = p.target()?;
    let kind = p.kind("kind")?;
    let s = p.scale("scale")?;
    let horizons = p.horizons()?;
    let pairs = p.count("pairs")?;
    let opts = TraceOptions { metric: p.metric()?, mode: p.raw("mode").parse::<TraceMode>()? };
    let exact_csv = p.raw("exact") == "true";
    let (x_fix, y_fix) = (p.opt_exact("x")?, p.opt_exact("y")?);
    let n_max = *horizons.last().unwrap();
    let eval = s.evaluator(n_max)?;
    let fast = FastIet::new(&t);
    let traces = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let (xk, yk) = sample_pair(cfg.seed, i);
            let x = x_fix.clone().unwrap_or_else(|| dyadic_value(xk));
            let y = (kind != GaugeKind::Rho).then(|| y_fix.clone().unwrap_or_else(|| dyadic_value(yk)));
            gauge_trace_with(kind, &fast, &s, &eval, &x, y.as_ref(), &horizons, &opts)
        })
        .collect::<Result<Vec<GaugeTrace>, LabError>>()?;

    let mut table = Table::new(&["sample_id", "x", "y", "horizon", "running_min", "argmin"]);
    let num = |v: &ExactReal| if exact_csv { v.to_string() } else { v.to_f64().to_string() };
    for (i, tr) in traces.iter().enumerate() {
        let y = tr.y.as_ref().map(num).unwrap_or_default();
        for (h, &hz) in tr.horizons.iter().enumerate() {
            let rm = match (&tr.running_min_exact, exact_csv) {
                (Some(ex), true) => ex[h].to_string(),
                _ => tr.running_min[h].to_string(),
            };
            table.row(vec![i.to_string(), num(&tr.x), y.clone(), hz.to_string(), rm, tr.argmin[h].to_string()]);
        }
    }
    let min_by_h: Vec<Value> = (0..horizons.len())
        .map(|h| {
            let best = traces
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.running_min[h].total_cmp(&b.1.running_min[h]))
                .unwrap();
            json!({"horizon": horizons[h], "running_min": best.1.running_min[h], "sample_id": best.0, "argmin": best.1.argmin[h]})
        })
        .collect();
    let mut value = json!({
        "kind": kind,
        "scale": s,
        "metric": opts.metric,
        "mode": opts.mode,
        "pairs": pairs,
        "horizons": horizons,
        "exact": traces.iter().all(|t| t.exact),
        "fallbacks": traces.iter().map(|t| t.fallbacks).sum::<u64>(),
        "float_error": traces.iter().map(|t| t.float_error).fold(0.0, f64::max),
        "min_over_samples": min_by_h,
    });
    if pairs <= 16 {
        value["traces"] = to_value(&traces);
    }
    let mut out = Payload::new(value).table(None, table);
    out.steps = Some(pairs * n_max * if kind == GaugeKind::Psi { 2 } else { 1 });
    Ok(out)
}

fn constants(cfg: &ExperimentConfig, p: &Params) -> Result<Payload, RunError> {
    let t = p.target()?;
    let alphas = field("alphas", parse_list(p.raw("alphas"), |s| s.parse::<f64>().map_err(|e| e.to_string())))?;
    let samples = p.count("samples")?;
    let metric = p.metric()?;
    let rep = estimate_constants(&t, cfg.seed, samples, &alphas, p.count("horizon")?, metric, p.thresholds()?)?;
    let horizons = p.horizons()?;
    let hist = polarization_histogram(&t, p.kind("hist_kind")?, &p.scale("hist_scale")?, cfg.seed, samples, &horizons, metric)?;
    let mut est = Table::new(&["kind", "alpha", "below", "above"]);
    for e in &rep.estimates {
        for (i, a) in e.alpha.iter().enumerate() {
            est.row(vec![e.kind.to_string(), a.to_string(), e.below[i].to_string(), e.above[i].to_string()]);
        }
    }
    let mut ht = Table::new(&["horizon", "log10_lo", "log10_hi", "count"]);
    let edges = &hist.log10_edges;
    for (h, counts) in hist.counts.iter().enumerate() {
        for (b, c) in counts.iter().enumerate() {
            let lo = if b == 0 { "-inf".to_string() } else { edges[b - 1].to_string() };
            let hi = if b == edges.len() { "inf".to_string() } else { edges[b].to_string() };
            ht.row(vec![hist.horizons[h].to_string(), lo, hi, c.to_string()]);
        }
    }
    Ok(Payload::new(json!({"constants": rep, "polarization": hist})).table(None, est).table(Some("hist"), ht))
}

fn tau(p: &Params) -> Result<Payload, RunError> {
    let t = p.target()?;
    let n_max = p.count("n_max")?;
    let rep = tau_entropy(&t, n_max)?;
    let lo = p.count("lo")?;
    let hi = match p.count("hi")? {
        0 => n_max,
        h => h,
    };
    let pts: Vec<(u64, f64)> = rep.table.iter().map(|&(n, c)| (n, c as f64)).collect();
    let slope = loglog_slope(&pts, lo, hi);
    let mut table = Table::new(&["n", "card"]);
    for (n, c) in &rep.table {
        table.row(vec![n.to_string(), c.to_string()]);
    }
    Ok(Payload::new(json!({"tau": rep, "fit": {"lo": lo, "hi": hi, "slope": slope}})).table(None, table))
}

fn window(src: &str) -> Result<Window, RunError> {
    let s = src.trim();
    if s == "all" {
        return Ok(Window::All);
    }
    if let Some(g) = s.strip_prefix("grid:") {
        return field("window", g.parse::<u32>().map(Window::Grid).map_err(|e| e.to_string()));
    }
    let (a, b) = field("window", s.split_once(',').ok_or_else(|| format!("expected all, grid:g or a,b, got {s:?}")))?;
    Ok(Window::Interval(field("window", parse_exact(a))?, field("window", parse_exact(b))?))
}

fn disc(cfg: &ExperimentConfig, p: &Params) -> Result<Payload, RunError> {
    let t = p.target()?;
    let ns = p.counts("n")?;
    let samples = p.count("samples")?;
    let mut table = Table::new(&["n", "discrepancy"]);
    if ns.len() > 1 {
        let rep = omega_discrepancy(&t, &ns, samples, cfg.seed)?;
        for (n, d) in &rep.points {
            table.row(vec![n.to_string(), d.to_string()]);
        }
        return Ok(Payload::new(json!({ "omega": rep })).table(None, table));
    }
    let n = *ns.first().ok_or_else(|| ConfigError::field("n", "empty list"))?;
    let mode = match p.raw("mode") {
        "exact" => DiscMode::ExactInX,
        _ => DiscMode::Sampled { samples, seed: cfg.seed },
    };
    let d = discrepancy(&t, n, &window(p.raw("window"))?, mode)?;
    table.row(vec![n.to_string(), d.value.to_string()]);
    Ok(Payload::new(json!({ "discrepancy": d })).table(None, table))
}

fn cf(p: &Params) -> Result<Payload, RunError> {
    let alpha = p.exact("alpha")?;
    let depth = p.count("depth")? as usize;
    if depth < 2 {
        return Err(ConfigError::field("depth", "need at least 2").into());
    }
    let cf = cf_expand(&alpha, depth - 1)?;
    let checks = check_convergent_ineq(&cf, &alpha);
    let n_max: BigInt = match p.raw("n_max").trim() {
        "" => cf.q[depth - 1].clone(),
        s => field("n_max", s.parse::<BigInt>().map_err(|e| e.to_string()))?,
    };
    let ty = type_estimate(&cf, &n_max)?;
    let m_hi = (p.count("three_distance_m")? as usize).min(depth - 1);
    let mut three = Vec::new();
    for m in 1..=m_hi {
        if cf.q[m] > BigInt::from(MAX_Q) {
            break;
        }
        three.push(three_distance_check(&alpha, m)?);
    }
    let ok_ineq = checks.iter().all(|c| c.holds);
    let ok_three = three.iter().all(|v| v.holds);
    Ok(Payload::new(json!({"cf": cf, "convergent_inequality": checks, "three_distance": three, "type": ty}))
        .check("convergent_inequality", ok_ineq)
        .check("three_distance", ok_three))
}

fn liouville(p: &Params) -> Result<Payload, RunError> {
    let l = liouville_from_scale(&p.scale("scale")?, p.count("k")? as usize)?;
    let ok = l.chain_holds.iter().all(|&b| b);
    Ok(Payload::new(json!({"construction": l, "truncation": l.truncation()})).check("chain", ok))
}

fn akc(p: &Params) -> Result<Payload, RunError> {
    let s = p.scale("scale")?;
    let ks = p.counts("k")?;
    let k_max = ks.iter().copied().max().unwrap_or(1) as usize;
    let (alpha, cf, source) = match p.opt_exact("alpha")? {
        Some(a) => {
            let cf = cf_expand(&a, k_max + 1)?;
            (a, cf, "given".to_string())
        }
        None => {
            let l = liouville_from_scale(&s, p.count("liouville_k")? as usize)?;
            (l.truncation(), l.cf.clone(), format!("liouville truncation p_K/q_K, K = {}", l.cf.depth()))
        }
    };
    let c = p.exact("c")?;
    let budget = p.count("budget")?;
    let reps = ks
        .iter()
        .map(|&k| akc_measure(&alpha, &cf, k as usize, &c, &s, budget))
        .collect::<Result<Vec<_>, _>>()?;
    let ok = reps.iter().all(|r| r.within_bound);
    Ok(Payload::new(json!({"alpha": alpha, "alpha_source": source, "reports": reps})).check("within_bound", ok))
}

fn interval(src: &str) -> Result<(ExactReal, ExactReal), RunError> {
    let (a, b) = field("interval", src.split_once(',').ok_or_else(|| format!("expected a,b, got {src:?}")))?;
    Ok((field("interval", parse_exact(a))?, field("interval", parse_exact(b))?))
}

fn induce(p: &Params) -> Result<Payload, RunError> {
    let t = p.target()?;
    let (a, b) = interval(p.raw("interval"))?;
    let fr = first_return(&t, &a, &b, p.count("max_steps")?)?;
    let total = fr.total_measure();
    Ok(Payload::new(json!({
        "interval": fr.interval,
        "columns": fr.columns,
        "induced": fr.induced.to_string(),
        "return_times": fr.return_times,
        "total_measure": total,
    }))
    .check("floors_tile", total == ExactReal::one()))
}

fn tower(p: &Params) -> Result<Payload, RunError> {
    let t = p.target()?;
    let tw = find_tower(&t, &p.exact("eps")?)?;
    let r = t.r() as i64;
    let measure = tw.measure();
    let big_enough = measure.mul_int(&BigInt::from(r)) >= ExactReal::one();
    let tiles = tw.first_return.as_ref().map(|f| f.total_measure() == ExactReal::one()).unwrap_or(false);
    Ok(Payload::new(json!({"tower": tw, "measure": measure, "r": r}))
        .check("floors_disjoint", tw.floors_disjoint())
        .check("measure_at_least_1_over_r", big_enough)
        .check("first_return_tiles", tiles))
}

fn towerbook(p: &Params) -> Result<Payload, RunError> {
    let b = p.bigs("b")?;
    let seed_b: [BigInt; 4] = b.try_into().map_err(|_| ConfigError::field("b", "need exactly four entries"))?;
    let (mut m, mut n) = (p.bigs("m")?, p.bigs("n")?);
    let generated = m.is_empty() && n.is_empty();
    if generated {
        let one = |key: &str| -> Result<BigInt, RunError> {
            p.bigs(key)?.into_iter().next().ok_or_else(|| ConfigError::field(key, "missing").into())
        };
        (m, n) = generate_sequence(p.count("k")? as usize, one("m1")?, one("n1")?, seed_b.clone(), &HeuristicRule);
    }
    let book = tower_book(&m, &n, seed_b, &HeuristicRule, p.count("conv_r")? as u32)?;
    let (h4, h5) = book.series_halving();
    let mut out = Payload::new(json!({"generated": generated, "book": book, "violations": book.flags.violations()}))
        .check("conditions", book.flags.all_hold())
        .check("series_halving", h4 && h5);
    out.steps = None;
    Ok(out)
}

fn mix3(p: &Params) -> Result<Payload, RunError> {
    let (lo, hi) = field("mrange", parse_range(p.raw("mrange")))?;
    let cells = p.count("cells")? as usize;
    let rep = mixing_falsifier(&p.exact("alpha")?, &p.exact("t")?, lo..=hi, cells)?;
    let min_missed = rep.min_missed();
    let span = rep.max_displacement_span();
    Ok(Payload::new(json!({"falsifier": rep, "min_missed": min_missed, "max_displacement_span": span}))
        .check("misses_at_least_six", min_missed >= 6)
        .check("displacement_within_seven", span <= 7))
}

fn bc(cfg: &ExperimentConfig, p: &Params) -> Result<Payload, RunError> {
    let t = p.target()?;
    let n = p.count("n")?;
    let samples = p.count("samples")?;
    let rep = proximality_bc_measure(&t, n, p.float("c")?, samples, cfg.seed, p.metric()?)?;
    let ok = rep.within_3_sigma;
    let mut out = Payload::new(to_value(&rep)).check("within_3_sigma", ok);
    out.steps = Some(2 * n * samples);
    Ok(out)
}

fn decisive(cfg: &ExperimentConfig, p: &Params) -> Result<Payload, RunError> {
    let points = match p.raw("points").trim() {
        "orbit" => PointSequence::Orbit { iet: p.target()?, x0: p.exact("x0")? },
        s => match s.strip_prefix("const:") {
            Some(y) => PointSequence::Constant(field("points", parse_exact(y))?),
            None => return Err(ConfigError::field("points", format!("expected orbit or const:<y>, got {s:?}")).into()),
        },
    };
    let horizons = p.horizons()?;
    let rep = decisiveness_diagnostic(&points, &p.scale("scale")?, p.count("samples")?, cfg.seed, &horizons, p.thresholds()?)?;
    let mut table = Table::new(&["horizon", "below", "middle", "above"]);
    for (i, h) in rep.horizons.iter().enumerate() {
        table.row(vec![h.to_string(), rep.below[i].to_string(), rep.middle[i].to_string(), rep.above[i].to_string()]);
    }
    Ok(Payload::new(to_value(&rep)).table(None, table))
}
