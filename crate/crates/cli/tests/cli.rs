//! End-to-end runs of the `ietlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ietlab(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ietlab"));
    cmd.current_dir(dir).args(args);
    match threads {
        Some(t) => cmd.env("LAB_THREADS", t),
        None => cmd.env_remove("LAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn without_timing(mut v: serde_json::Value) -> serde_json::Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn gauge_writes_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let out = ietlab(
        dir.path(),
        &["gauge", "--kind", "phi", "--iet", "golden", "--pairs", "3", "--horizon", "5000", "--out", "g.csv"],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "g.csv");
    assert!(csv.starts_with("sample_id,x,y,horizon,running_min,argmin\n"));
    assert!(!csv.contains('\r'));
    // 3 samples on the dyadic ladder 1, 2, 4, …, 4096, 5000
    assert_eq!(csv.lines().count(), 1 + 3 * 14);
    let report = json(dir.path(), "g.json");
    assert_eq!(report["config"]["parameters"]["pairs"], "3");
    assert_eq!(report["config"]["seed"], 42);
    assert!(report["timing"]["wall_ms"].is_u64());
}

#[test]
fn golden_continued_fraction() {
    let dir = TempDir::new().unwrap();
    let out = ietlab(dir.path(), &["run", "cf", "--alpha", "golden", "--depth", "10"], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(dir.path(), "cf.json");
    let q: Vec<String> = serde_json::from_value(v["payload"]["cf"]["q"].clone()).unwrap();
    assert_eq!(q, ["1", "1", "2", "3", "5", "8", "13", "21", "34", "55"]);
    assert_eq!(v["checks"]["convergent_inequality"], true);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(ietlab(p, &["mix3"], None).status.code(), Some(0));
    // the generated tower book violates conditions that cannot hold together
    let book = ietlab(p, &["towerbook"], None);
    assert_eq!(book.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&book.stderr).contains("property check failed"));
    assert_eq!(ietlab(p, &["cf", "--depth", "ten"], None).status.code(), Some(1));
    assert_eq!(ietlab(p, &["nonsense"], None).status.code(), Some(1));
    assert_eq!(ietlab(p, &["--help"], None).status.code(), Some(0));
    assert_eq!(ietlab(p, &["tau"], Some("zero")).status.code(), Some(1));
}

#[test]
fn config_files_and_overrides() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("tau.ini"),
        "[experiment]\nname = tau\ntarget = iet: lengths=[1/3,1/3,1/3] perm=[3,2,1]\n\n[parameters]\nn_max = 64\n\n[output]\nout = t.json\n",
    )
    .unwrap();
    let out = ietlab(p, &["run", "--config", "tau.ini", "--set", "n_max=32", "--save-config", "saved.json"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(p, "t.json");
    assert_eq!(report["config"]["parameters"]["n_max"], "32");
    // the saved config is the resolved one, and running it reproduces the report
    let saved = json(p, "saved.json");
    assert_eq!(saved["parameters"]["lo"], "64");
    let again = ietlab(p, &["run", "--config", "saved.json"], None);
    assert!(again.status.success());
    assert_eq!(without_timing(json(p, "t.json")), without_timing(report));

    std::fs::write(p.join("bad.ini"), "[experiment]\nname = tau\n\n[parameters]\nn_max = lots\n").unwrap();
    let bad = ietlab(p, &["run", "--config", "bad.ini"], None);
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("n_max") && err.contains("line 5"), "{err}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let runs: Vec<(String, serde_json::Value, String)> = ["1", "3"]
        .iter()
        .map(|t| {
            let dir = TempDir::new().unwrap();
            let args = ["constants", "--iet", "silver", "--samples", "40", "--horizon", "20000", "--horizons", "decade:20000", "--out", "c.csv"];
            assert!(ietlab(dir.path(), &args, Some(t)).status.success());
            (read(dir.path(), "c.csv"), without_timing(json(dir.path(), "c.json")), read(dir.path(), "c_hist.csv"))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn plots() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    std::fs::write(p.join("empty.csv"), "").unwrap();
    let out = ietlab(p, &["plot", "--csv", "empty.csv", "--kind", "trace"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad CSV"));

    std::fs::write(p.join("line.csv"), "n,card\n2,8\n4,32\n8,128\n16,512\n").unwrap();
    assert!(ietlab(p, &["plot", "--csv", "line.csv", "--kind", "loglog"], None).status.success());
    assert!(read(p, "line.svg").contains("fitted slope = 2.0000"));

    assert!(ietlab(p, &["gauge", "--kind", "rho", "--iet", "golden", "--x", "0", "--horizon", "1000", "--out", "g.csv"], None)
        .status
        .success());
    assert!(ietlab(p, &["plot", "--csv", "g.csv", "--kind", "trace"], None).status.success());
    assert!(read(p, "g.svg").contains("0.4472136"));
}
