use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ietlab_core::gauges::loglog_slope;

use crate::table::{CsvError, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Trace,
    Histogram,
    Loglog,
}

impl FromStr for PlotKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "trace" => Ok(PlotKind::Trace),
            "histogram" => Ok(PlotKind::Histogram),
            "loglog" => Ok(PlotKind::Loglog),
            _ => Err(format!("unknown plot kind {s:?}; expected trace, histogram or loglog")),
        }
    }
}

/// Horizontal reference line drawn on trace plots unless overridden.
pub const GOLDEN_ASYMPTOTE: f64 = 0.447_213_595_499_957_9;

/// At most this many samples are drawn in a trace plot.
const MAX_SERIES: usize = 32;

const W: f64 = 640.0;
const H: f64 = 400.0;
const L: f64 = 70.0;
const R: f64 = 20.0;
const T: f64 = 30.0;
const B: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    svg: String,
}

impl Frame {
    fn new(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let x = if x.1 > x.0 { x } else { (x.0 - 0.5, x.0 + 0.5) };
        let y = if y.1 > y.0 { y } else { (y.0 - 0.5, y.0 + 0.5) };
        let mut svg = String::new();
        writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#).unwrap();
        writeln!(svg, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title)).unwrap();
        writeln!(svg, r#"<rect x="{L}" y="{T}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, W - L - R, H - T - B).unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (L + W - R) / 2.0, H - 12.0, esc(xlabel)).unwrap();
        writeln!(svg, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#, (T + H - B) / 2.0, (T + H - B) / 2.0, esc(ylabel)).unwrap();
        let mut f = Frame { x, y, svg };
        for i in 0..=4 {
            let fx = x.0 + (x.1 - x.0) * i as f64 / 4.0;
            let fy = y.0 + (y.1 - y.0) * i as f64 / 4.0;
            let (px, py) = (f.px(fx), f.py(fy));
            writeln!(f.svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, H - B + 16.0, tick(fx)).unwrap();
            writeln!(f.svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, L - 4.0, py + 4.0, tick(fy)).unwrap();
        }
        f
    }

    fn px(&self, v: f64) -> f64 {
        L + (v - self.x.0) / (self.x.1 - self.x.0) * (W - L - R)
    }

    fn py(&self, v: f64) -> f64 {
        H - B - (v - self.y.0) / (self.y.1 - self.y.0) * (H - T - B)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dash: bool) {
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i > 0 { " " } else { "" }, self.px(x), self.py(y));
        }
        let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(self.svg, r#"<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>"#).unwrap();
    }

    fn text(&mut self, x: f64, y: f64, s: &str) {
        writeln!(self.svg, r#"<text x="{x:.2}" y="{y:.2}">{}</text>"#, esc(s)).unwrap();
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bad(path: &Path, msg: impl Into<String>) -> CsvError {
    CsvError::BadCsv { path: path.display().to_string(), msg: msg.into() }
}

fn num(path: &Path, s: &str) -> Result<f64, CsvError> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse::<f64>().map_err(|_| bad(path, format!("not a number: {s:?}"))),
    }
}

fn col(t: &Table, path: &Path, name: &str) -> Result<usize, CsvError> {
    t.column(name).ok_or_else(|| bad(path, format!("missing column {name}")))
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

/// Renders the CSV at `path` as an SVG document. Output depends only on the
/// CSV contents and the arguments.
pub fn emit_plot(path: &Path, kind: PlotKind, asymptote: Option<f64>) -> Result<String, CsvError> {
    let t = Table::read(path)?;
    match kind {
        PlotKind::Trace => trace(&t, path, asymptote),
        PlotKind::Histogram => histogram(&t, path),
        PlotKind::Loglog => loglog(&t, path),
    }
}

fn trace(t: &Table, path: &Path, asymptote: Option<f64>) -> Result<String, CsvError> {
    let (cs, ch, cm) = (col(t, path, "sample_id")?, col(t, path, "horizon")?, col(t, path, "running_min")?);
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &t.rows {
        let h = num(path, &r[ch])?;
        let m = r[cm].parse::<f64>().or_else(|_| exact_to_f64(&r[cm])).map_err(|_| bad(path, format!("bad running_min {:?}", r[cm])))?;
        if h <= 0.0 {
            return Err(bad(path, "horizons must be positive"));
        }
        let same = series.last().is_some_and(|(id, _)| *id == r[cs]);
        if same {
            series.last_mut().unwrap().1.push((h.log10(), m));
        } else if series.len() < MAX_SERIES {
            series.push((r[cs].clone(), vec![(h.log10(), m)]));
        }
    }
    let xr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let mut yr = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    if let Some(a) = asymptote {
        yr = (yr.0.min(a), yr.1.max(a));
    }
    let yr = (yr.0.min(0.0), yr.1);
    let mut f = Frame::new("running minimum", "log10 horizon", "running min", xr, yr);
    for (i, (_, pts)) in series.iter().enumerate() {
        let pts: Vec<_> = pts.iter().copied().filter(|p| p.1.is_finite()).collect();
        f.polyline(&pts, COLORS[i % COLORS.len()], false);
    }
    if let Some(a) = asymptote {
        f.polyline(&[(f.x.0, a), (f.x.1, a)], "black", true);
        let label = if (a - GOLDEN_ASYMPTOTE).abs() < 1e-12 {
            format!("1/\u{221a}5 = {a:.7}")
        } else {
            format!("y = {a}")
        };
        let (x, y) = (f.px(f.x.1) - 140.0, f.py(a) - 6.0);
        f.text(x, y, &label);
    }
    Ok(f.finish())
}

/// `p/q` or a quadratic literal, for CSVs written with exact values.
fn exact_to_f64(s: &str) -> Result<f64, ()> {
    s.parse::<ietlab_core::ExactReal>().map(|v| v.to_f64()).map_err(|_| ())
}

fn histogram(t: &Table, path: &Path) -> Result<String, CsvError> {
    let (ch, clo, chi, cc) =
        (col(t, path, "horizon")?, col(t, path, "log10_lo")?, col(t, path, "log10_hi")?, col(t, path, "count")?);
    let last_h = t.rows.iter().map(|r| num(path, &r[ch])).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);
    let mut bins = Vec::new();
    for r in &t.rows {
        if num(path, &r[ch])? == last_h {
            bins.push((num(path, &r[clo])?, num(path, &r[chi])?, num(path, &r[cc])?));
        }
    }
    let max = bins.iter().map(|b| b.2).fold(0.0, f64::max);
    let n = bins.len() as f64;
    let mut f = Frame::new(&format!("polarization at horizon {last_h}"), "log10 running min (bin)", "count", (0.0, n), (0.0, max.max(1.0)));
    let bw = (W - L - R) / n;
    for (i, (lo, hi, c)) in bins.iter().enumerate() {
        let (x0, y0) = (f.px(i as f64), f.py(*c));
        writeln!(f.svg, r#"<rect x="{:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>[{lo}, {hi}): {c}</title></rect>"#, x0 + 1.0, bw - 2.0, f.py(0.0) - y0, COLORS[0]).unwrap();
    }
    Ok(f.finish())
}

fn loglog(t: &Table, path: &Path) -> Result<String, CsvError> {
    if t.header.len() < 2 {
        return Err(bad(path, "need two columns"));
    }
    let mut pts = Vec::new();
    for r in &t.rows {
        let n = r[0].parse::<u64>().map_err(|_| bad(path, format!("first column must be a positive integer, got {:?}", r[0])))?;
        let y = num(path, &r[1])?;
        if n > 0 && y > 0.0 && y.is_finite() {
            pts.push((n, y));
        }
    }
    if pts.len() < 2 {
        return Err(bad(path, "need two positive points for a log-log plot"));
    }
    let slope = loglog_slope(&pts, 0, u64::MAX).ok_or_else(|| bad(path, "degenerate fit"))?;
    let lx: Vec<(f64, f64)> = pts.iter().map(|&(n, y)| ((n as f64).log10(), y.log10())).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().map(|p| p.0).sum::<f64>() / k, lx.iter().map(|p| p.1).sum::<f64>() / k);
    let intercept = my - slope * mx;
    let xr = range(lx.iter().map(|p| p.0));
    let yr = range(lx.iter().map(|p| p.1).chain([intercept + slope * xr.0, intercept + slope * xr.1]));
    let mut f = Frame::new("log-log regression", &format!("log10 {}", t.header[0]), &format!("log10 {}", t.header[1]), xr, yr);
    for &(x, y) in &lx {
        writeln!(f.svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, f.px(x), f.py(y), COLORS[0]).unwrap();
    }
    f.polyline(&[(xr.0, intercept + slope * xr.0), (xr.1, intercept + slope * xr.1)], COLORS[3], true);
    f.text(L + 10.0, T + 18.0, &format!("fitted slope = {slope:.4}"));
    Ok(f.finish())
}
