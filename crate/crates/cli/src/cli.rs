use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::plot::{emit_plot, PlotKind, GOLDEN_ASYMPTOTE};
use crate::run::{execute, RunError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PROPERTY: i32 = 2;

const COMMON: [(&str, &str); 5] = [
    ("target", "IET literal, e.g. `iet: lengths=[1/2,1/4,1/4] perm=[3,2,1]`, `rot: alpha=sqrt(2)-1` or `golden`"),
    ("seed", "64-bit seed [default: 42]"),
    ("horizons", "dyadic:N, decade:N or an increasing list a,b,c"),
    ("out", "output file (.csv or .json; the other is written next to it)"),
    ("save-config", "also write the resolved config here (.json or INI)"),
];

fn experiment_command(e: Experiment) -> Command {
    let mut cmd = Command::new(e.name()).about(e.about());
    for (key, help) in COMMON {
        if key == "target" && !e.uses_target() || key == "horizons" && !e.uses_horizons() {
            continue;
        }
        let mut a = Arg::new(key).long(key).value_name("VALUE").help(help).allow_hyphen_values(true);
        if key == "target" {
            a = a.visible_alias("iet");
        }
        cmd = cmd.arg(a);
    }
    for p in e.schema() {
        let long = p.key.replace('_', "-");
        let help = if p.default.is_empty() { p.help.to_string() } else { format!("{} [default: {}]", p.help, p.default) };
        let mut a = Arg::new(p.key).long(long.clone()).value_name("VALUE").help(help).allow_hyphen_values(true);
        if long != p.key {
            a = a.alias(p.key);
        }
        cmd = cmd.arg(a);
    }
    cmd
}

fn experiments() -> Vec<Command> {
    Experiment::ALL.into_iter().map(experiment_command).collect()
}

pub fn command() -> Command {
    Command::new("ietlab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Exact experiments with interval exchange transformations")
        .after_help("LAB_THREADS caps the number of worker threads.\nExit status: 0 success, 1 usage error, 2 failed property check.")
        .subcommand_required(true)
        .subcommands(experiments())
        .subcommand(
            Command::new("run")
                .about("run an experiment from a config file (INI or JSON) or from flags")
                .arg(Arg::new("config").long("config").value_name("PATH").help("config file; .json is JSON, anything else INI"))
                .arg(
                    Arg::new("set")
                        .long("set")
                        .value_name("KEY=VALUE")
                        .action(ArgAction::Append)
                        .help("override a config entry"),
                )
                .arg(Arg::new("save-config").long("save-config").value_name("PATH").help("write the resolved config here"))
                .subcommands(experiments()),
        )
        .subcommand(
            Command::new("plot")
                .about("render a CSV written by a run as SVG")
                .arg(Arg::new("csv").long("csv").value_name("PATH").required(true))
                .arg(
                    Arg::new("kind")
                        .long("kind")
                        .value_name("KIND")
                        .required(true)
                        .value_parser(["trace", "histogram", "loglog"]),
                )
                .arg(Arg::new("out").long("out").value_name("PATH").help("SVG file [default: the CSV path with .svg]"))
                .arg(
                    Arg::new("asymptote")
                        .long("asymptote")
                        .value_name("VALUE")
                        .allow_hyphen_values(true)
                        .help("reference line for trace plots, or `none` [default: 1/sqrt(5)]"),
                ),
        )
}

fn config_from_flags(e: Experiment, m: &ArgMatches) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::new(e);
    for (key, _) in COMMON {
        if key == "save-config" {
            continue;
        }
        if let Ok(Some(v)) = m.try_get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    for p in e.schema() {
        if let Some(v) = m.get_one::<String>(p.key) {
            cfg.set(p.key, v)?;
        }
    }
    Ok(cfg)
}

fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<(), RunError> {
    let body = if path.extension().is_some_and(|x| x == "json") { cfg.to_json() } else { cfg.to_ini() };
    std::fs::write(path, body).map_err(|e| RunError::Io { path: path.display().to_string(), msg: e.to_string() })
}

fn run_config(cfg: ExperimentConfig, save: Option<&String>) -> Result<i32, RunError> {
    let outcome = execute(&cfg)?;
    if let Some(p) = save {
        save_config(&outcome.report.config, Path::new(p))?;
    }
    outcome.write()?;
    for (p, _) in &outcome.tables {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", outcome.json_path.display());
    let failed = outcome.report.failed_checks();
    for (name, ok) in &outcome.report.checks {
        println!("check {name}: {}", if *ok { "ok" } else { "FAILED" });
    }
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("property check failed: {}", failed.join(", "));
        Ok(EXIT_PROPERTY)
    }
}

fn dispatch(m: &ArgMatches) -> Result<i32, RunError> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    match name {
        "plot" => {
            let csv = PathBuf::from(sub.get_one::<String>("csv").unwrap());
            let kind: PlotKind = sub.get_one::<String>("kind").unwrap().parse().unwrap();
            let asym = match sub.get_one::<String>("asymptote").map(String::as_str) {
                Some("none") => None,
                Some(v) => Some(v.parse::<f64>().map_err(|_| ConfigError::field("asymptote", format!("not a number: {v:?}")))?),
                None => (kind == PlotKind::Trace).then_some(GOLDEN_ASYMPTOTE),
            };
            let svg = emit_plot(&csv, kind, asym).map_err(|e| RunError::Io { path: csv.display().to_string(), msg: e.to_string() })?;
            let out = sub.get_one::<String>("out").map(PathBuf::from).unwrap_or_else(|| csv.with_extension("svg"));
            std::fs::write(&out, svg).map_err(|e| RunError::Io { path: out.display().to_string(), msg: e.to_string() })?;
            println!("wrote {}", out.display());
            Ok(EXIT_OK)
        }
        "run" => {
            let mut cfg = match (sub.get_one::<String>("config"), sub.subcommand()) {
                (Some(path), None) => ExperimentConfig::load(Path::new(path))?,
                (None, Some((exp, flags))) => config_from_flags(exp.parse()?, flags)?,
                (Some(_), Some(_)) => return Err(ConfigError::field("config", "give either --config or an experiment, not both").into()),
                (None, None) => return Err(ConfigError::field("config", "give --config or an experiment").into()),
            };
            for kv in sub.get_many::<String>("set").into_iter().flatten() {
                let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::field("set", format!("expected KEY=VALUE, got {kv:?}")))?;
                cfg.set(k, v)?;
            }
            let save = sub
                .get_one::<String>("save-config")
                .or_else(|| sub.subcommand().and_then(|(_, f)| f.get_one::<String>("save-config")));
            run_config(cfg, save)
        }
        exp => {
            let e: Experiment = exp.parse()?;
            run_config(config_from_flags(e, sub)?, sub.get_one::<String>("save-config"))
        }
    }
}

fn with_threads<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match std::env::var("LAB_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("LAB_THREADS must be a positive integer, got {v:?}"))?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

/// Parses `args`, runs the command and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let m = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match with_threads(|| dispatch(&m)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }

    #[test]
    fn flags_become_parameters() {
        let m = command().try_get_matches_from(["ietlab", "cf", "--alpha", "golden", "--depth", "10"]).unwrap();
        let (_, sub) = m.subcommand().unwrap();
        let cfg = config_from_flags(Experiment::Cf, sub).unwrap();
        assert_eq!(cfg.param("depth"), "10");
        assert_eq!(main_with(["ietlab", "cf", "--bogus", "1"]), EXIT_USAGE);
    }
}
