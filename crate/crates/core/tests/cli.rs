use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ffbsd"));
    c.env_remove("FFBSD_CACHE");
    c
}

fn curve_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../curves").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn e1_verifies() {
    let out = run(&["verify", curve_file("e1.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["schema"], "ffbsd-report");
    assert_eq!(r["version"], 1);
    assert_eq!(r["l_function"]["degree"], 0);
    assert_eq!(r["l_function"]["coefficients"], serde_json::json!([1]));
    assert_eq!(r["bsd"]["sha_analytic"]["value"], serde_json::json!({"num": 1, "den": 1}));
    assert!(stderr(&out).contains("cross-checks: all passed"));
}

#[test]
fn e2_with_generator_and_known_sha() {
    let out = run(&["verify", curve_file("e2.json").to_str().unwrap(), "--known-sha", "1", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["bsd"]["known_sha_check"], true);
    assert_eq!(r["bsd"]["regulator"], serde_json::json!({"num": 1, "den": 2}));
    let b = run(&["verify", curve_file("e2.json").to_str().unwrap(), "--normalization", "B"]);
    assert_eq!(report(&b)["bsd"]["sha_analytic"]["value"], serde_json::json!({"num": 1, "den": 2}));
}

#[test]
fn small_characteristic_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p3.json", r#"{"q": 3, "a": [1], "b": [0, 1]}"#);
    let out = run(&["verify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("residue characteristic < 5 unsupported"));
    assert_eq!(report(&out)["status"], "rejected");
}

#[test]
fn off_curve_generator_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "off.json",
        r#"{"q": 5, "a": [1], "b": [0, 1], "mw": {"generators": [{"x": [1], "y": [1]}]}}"#,
    );
    let out = run(&["verify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("point not on curve"));
}

#[test]
fn constant_curve_and_bad_usage_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"q": 5, "a": [1], "b": [1]}"#);
    assert_eq!(run(&["verify", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
    let e1 = curve_file("e1.json");
    assert_eq!(run(&["local", e1.to_str().unwrap(), "t^2"]).status.code(), Some(2));
    assert_eq!(run(&["verify", e1.to_str().unwrap(), "--max-n", "0", "--normalization", "C"]).status.code(), Some(2));
}

#[test]
fn local_examples() {
    let e1 = curve_file("e1.json");
    let e3 = curve_file("e3.json");
    let text = |out: Output| {
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8(out.stdout).unwrap()
    };
    let t = text(run(&["local", e1.to_str().unwrap(), "t"]));
    assert!(t.contains("kodaira: I0\n") && t.contains("P_v(X): 1 - 2X + 5X^2"), "{t}");
    let inf = text(run(&["local", e1.to_str().unwrap(), "inf"]));
    assert!(inf.contains("kodaira: II*\n") && inf.contains("c_v: 1\n") && inf.contains("f_v: 2\n"), "{inf}");
    let iii = text(run(&["local", e3.to_str().unwrap(), "t"]));
    assert!(iii.contains("kodaira: III\n") && iii.contains("c_v: 2\n"), "{iii}");
}

#[test]
fn reports_are_byte_stable_across_cache_states() {
    let cache = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.json", r#"{"q": 5, "a": [3, 3, 1], "b": [1, 2, 1]}"#);
    let args = |extra: &[&str]| {
        let mut v = vec!["verify", p.to_str().unwrap()];
        v.extend_from_slice(extra);
        v.iter().map(|s| s.to_string()).collect::<Vec<_>>()
    };
    let go = |a: Vec<String>| bin().args(&a).env("FFBSD_CACHE", cache.path()).output().unwrap();
    let first = go(args(&[]));
    let second = go(args(&[]));
    let uncached = go(args(&["--no-cache", "--threads", "1"]));
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert!(stderr(&first).contains(" 0 hits"));
    assert!(!stderr(&second).contains(" 0 hits") && stderr(&second).contains(" 0 misses"));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, uncached.stdout);
    let out = dir.path().join("report.json");
    let to_file = go(args(&["--out", out.to_str().unwrap()]));
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), first.stdout);
}

#[test]
fn poisoned_cache_is_detected_under_validation() {
    let cache = tempfile::tempdir().unwrap();
    let e2 = curve_file("e2.json");
    let cache_arg = cache.path().to_str().unwrap();
    let clean = run(&["verify", e2.to_str().unwrap(), "--cache-dir", cache_arg]);
    assert_eq!(clean.status.code(), Some(0));
    let entry = std::fs::read_dir(cache.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with("-n1.json"))
        .unwrap();
    // rewrite A_1 and one fiber consistently, with a matching checksum
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&entry).unwrap()).unwrap();
    let trace = v["fibers"][0][2].as_i64().unwrap();
    v["fibers"][0][2] = (trace + 2).into();
    v["a_n"] = (v["a_n"].as_i64().unwrap() + 2 * v["fibers"][0][1].as_i64().unwrap()).into();
    let fibers: Vec<(i64, u32, i64)> = serde_json::from_value(v["fibers"].clone()).unwrap();
    let hash = v["curve_hash"].as_str().unwrap().to_string();
    let ts = ffbsd::lseries::TraceSum::from_fibers(
        1,
        fibers
            .iter()
            .map(|&(f, weight, trace)| ffbsd::lseries::FiberTrace {
                fiber: if f < 0 { ffbsd::lseries::Fiber::Infinity } else { ffbsd::lseries::Fiber::Finite(f as u32) },
                weight,
                trace,
            })
            .collect(),
    );
    let forged = ffbsd::cli::cache::CountCacheEntry::from_trace(&hash, &ts).unwrap();
    std::fs::write(&entry, serde_json::to_string(&forged).unwrap()).unwrap();

    let unchecked = run(&["verify", e2.to_str().unwrap(), "--cache-dir", cache_arg]);
    assert_ne!(unchecked.status.code(), Some(0), "a forged A_1 must break a cross-check");
    let validated = run(&["verify", e2.to_str().unwrap(), "--cache-dir", cache_arg, "--validate-cache"]);
    assert_eq!(validated.status.code(), Some(0), "{}", stderr(&validated));
    assert!(stderr(&validated).contains("cache mismatch: A_1"), "{}", stderr(&validated));
    assert_eq!(validated.stdout, clean.stdout);
}

#[test]
fn extra_trace_sums_match_l() {
    let out = run(&["verify", curve_file("e2.json").to_str().unwrap(), "--max-n", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = report(&out)["extra_trace_sums"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 3);
    // L = 1 - 5T = exp(-sum 5^n T^n / n)
    assert_eq!(rows[2]["counted"], -625);
    assert!(rows.iter().all(|r| r["pass"] == true));
}
