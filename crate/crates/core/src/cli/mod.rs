//! Command-line front end: `ffbsd verify <curve.json>` and
//! `ffbsd local <curve.json> <place>`.
//!
//! Exit codes: 0 when every cross-check passes, 2 for bad input or a curve
//! outside the supported class, 3 when an internal cross-check fails.

pub mod cache;
pub mod input;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::json;

use crate::bsd::BsdOptions;
use crate::error::{Error, Result};
use crate::funcfield::parse_place;
use crate::localred::{all_local_data, check_local_identity, conductor_degree_of, local_data};
use crate::lseries::{traces_from_l, FiberModel};
use crate::par::{self, Exec};
use crate::pipeline::{analyze, Direct, TraceSource};

use cache::{curve_hash, CacheStats, TraceCache, CACHE_ENV};
use input::{parse_normalization, CurveSpecFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ffbsd", version, about = "Exact BSD verification for elliptic curves over F_q(t)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write a JSON report.
    Verify(VerifyArgs),
    /// Local data and the point-count identity at one place.
    Local(LocalArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Curve file (JSON).
    path: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest n for trace sums; must be at least deg L. Values above deg L
    /// add checks of A_n against L.
    #[arg(long)]
    max_n: Option<usize>,
    /// Ignore the cache directory.
    #[arg(long)]
    no_cache: bool,
    /// Recompute a sample of fibers of every cache hit.
    #[arg(long)]
    validate_cache: bool,
    /// Worker threads for fiber counting (1 runs sequentially).
    #[arg(long)]
    threads: Option<usize>,
    /// Height normalization: A (R = det) or B (R = 2^r det).
    #[arg(long, value_parser = parse_normalization_arg)]
    normalization: Option<crate::bsd::HeightNormalization>,
    /// Literature value of Sha to check against.
    #[arg(long)]
    known_sha: Option<u64>,
    /// Cache directory (default: $FFBSD_CACHE; no caching when unset).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LocalArgs {
    /// Curve file (JSON).
    path: PathBuf,
    /// A monic irreducible polynomial in t, or "inf".
    place: String,
}

fn parse_normalization_arg(s: &str) -> std::result::Result<crate::bsd::HeightNormalization, String> {
    parse_normalization(s).map_err(|e| e.to_string())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_internal() {
        EXIT_CHECK
    } else {
        EXIT_INPUT
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Verify(a) => verify(&a, stdout, stderr),
        Command::Local(a) => local(&a, stdout, stderr),
    }
}

struct Outcome {
    report: serde_json::Value,
    failures: Vec<String>,
    summary: String,
    stats: Option<CacheStats>,
}

fn verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (code, report) = match verify_inner(args) {
        Ok(o) => {
            let _ = write!(stderr, "{}", o.summary);
            if let Some(s) = &o.stats {
                let _ = writeln!(
                    stderr,
                    "cache: {} hits, {} misses, {} corrupt, {} fibers validated, {} mismatches",
                    s.hits,
                    s.misses,
                    s.corrupt,
                    s.validated_fibers,
                    s.mismatches.len()
                );
                for m in &s.mismatches {
                    let _ = writeln!(stderr, "cache mismatch: {m}");
                }
            }
            for f in &o.failures {
                let _ = writeln!(stderr, "FAILED: {f}");
            }
            let code = if o.failures.is_empty() { EXIT_OK } else { EXIT_CHECK };
            (code, o.report)
        }
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(stderr, "error: {e}");
            let status = if code == EXIT_CHECK { "internal-error" } else { "rejected" };
            (code, report::error_json(status, &e.to_string()))
        }
    };
    let text = report::render(&report);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => {
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    code
}

fn verify_inner(args: &VerifyArgs) -> Result<Outcome> {
    let spec = CurveSpecFile::load(&args.path)?;
    let input = spec.build()?;
    let curve = &input.curve;
    let opts = BsdOptions {
        normalization: args.normalization.or(input.normalization).unwrap_or_default(),
        known_sha: args.known_sha.or(input.known_sha),
        ..BsdOptions::default()
    };
    let local = all_local_data(curve)?;
    let degree = conductor_degree_of(&local)? as usize - 4;
    let max_n = args.max_n.unwrap_or(degree);
    if max_n < degree {
        return Err(Error::Invalid(format!(
            "--max-n {max_n} is below the degree {degree} of L"
        )));
    }
    if args.threads == Some(0) {
        return Err(Error::Invalid("--threads must be positive".into()));
    }
    let exec = if args.threads == Some(1) { Exec::Sequential } else { Exec::Parallel };
    let cache_dir = if args.no_cache {
        None
    } else {
        args.cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).filter(|s| !s.is_empty()).map(PathBuf::from))
    };
    let mut source = match &cache_dir {
        Some(dir) => Source::Cache(TraceCache::new(dir, args.validate_cache, exec)?),
        None => Source::Direct(Direct(exec)),
    };
    let work = |source: &mut Source| -> Result<_> {
        let an = analyze(curve, &input.mw, &opts, source)?;
        let model = FiberModel::new(curve, &an.local)?;
        let extra = (degree + 1..=max_n)
            .map(|n| source.trace(&model, n))
            .collect::<Result<Vec<_>>>()?;
        Ok((an, extra))
    };
    let (an, extra) = match args.threads {
        Some(t) if t > 1 => par::with_threads(t, || work(&mut source))??,
        _ => work(&mut source)?,
    };
    let hash = curve_hash(curve);
    let mut report = report::analysis_json(&an, input.name.as_deref(), &hash);
    let mut failures = an.failures();
    if !extra.is_empty() {
        let predicted = traces_from_l(&an.l.series.coeffs, max_n);
        let rows: Vec<_> = extra
            .iter()
            .map(|t| {
                let expected = &predicted[t.n - 1];
                let pass = BigInt::from(t.a_n) == *expected;
                if !pass {
                    failures.push(format!("A_{} disagrees with L", t.n));
                }
                json!({
                    "n": t.n,
                    "counted": report::int(&BigInt::from(t.a_n)),
                    "from_l": report::int(expected),
                    "pass": pass,
                })
            })
            .collect();
        report["extra_trace_sums"] = json!(rows);
        report["checks"]["failures"] = json!(failures);
        if !failures.is_empty() {
            report["status"] = json!("cross-check-failure");
        }
    }
    let summary = summarize(&an, input.name.as_deref(), &failures);
    let stats = match source {
        Source::Cache(c) => Some(c.stats),
        Source::Direct(_) => None,
    };
    Ok(Outcome {
        report,
        failures,
        summary,
        stats,
    })
}

enum Source {
    Direct(Direct),
    Cache(TraceCache),
}

impl TraceSource for Source {
    fn trace(&mut self, model: &FiberModel, n: usize) -> Result<crate::lseries::TraceSum> {
        match self {
            Source::Direct(d) => d.trace(model, n),
            Source::Cache(c) => c.trace(model, n),
        }
    }
}

fn summarize(an: &crate::pipeline::Analysis, name: Option<&str>, failures: &[String]) -> String {
    let l = &an.l.series;
    let r = &an.report;
    let mut s = String::new();
    let title = name.map(|n| format!("{n}: ")).unwrap_or_default();
    s += &format!("{title}{}\n", an.curve);
    let types: Vec<String> = an
        .local
        .iter()
        .map(|d| format!("{} at {}", d.kodaira, d.place))
        .collect();
    s += &format!("  bad fibers: {}\n", types.join(", "));
    s += &format!(
        "  deg n = {}, L(T) of degree {}, r_an = {}, M(1/q) = {}\n",
        an.invariants.conductor_degree, l.degree, l.r_an, l.leading
    );
    s += &format!(
        "  c(A) = {}, chi(Lie) = {}, torsion = {} (bound {}), rank supplied = {}\n",
        an.invariants.tamagawa, an.invariants.chi_lie, r.torsion.order, r.torsion.bound, r.r_alg
    );
    match r.sha_analytic.value() {
        Some(v) => {
            s += &format!(
                "  Sha (normalization {}) = {v}{}{}\n",
                r.normalization.name(),
                if r.flags.sha_integral { "" } else { " [not integral]" },
                if r.flags.sha_square || !r.flags.sha_integral { "" } else { " [not a square]" },
            )
        }
        None => s += &format!("  Sha {}\n", match &r.sha_analytic {
            crate::bsd::ShaValue::Undetermined(w) => w.as_str(),
            _ => "",
        }),
    }
    if let Some(k) = r.known_sha_check {
        s += &format!("  known Sha check: {}\n", if k { "consistent" } else { "INCONSISTENT" });
    }
    s += &format!(
        "  cross-checks: {}\n",
        if failures.is_empty() { "all passed".to_string() } else { format!("{} failed", failures.len()) }
    );
    s
}

fn local(args: &LocalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match local_inner(args) {
        Ok((text, pass)) => {
            let _ = stdout.write_all(text.as_bytes());
            if pass {
                EXIT_OK
            } else {
                EXIT_CHECK
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn local_inner(args: &LocalArgs) -> Result<(String, bool)> {
    let input = CurveSpecFile::load(&args.path)?.build()?;
    let place = parse_place(input.curve.field(), &args.place)
        .map_err(|e| {
            let why = match e {
                Error::Invalid(m) => m,
                other => other.to_string(),
            };
            Error::Invalid(format!("bad place {:?} ({why}); expected a monic irreducible polynomial in t or \"inf\"", args.place))
        })?;
    let d = local_data(&input.curve, &place)?;
    let chk = check_local_identity(&d)?;
    let factor = d.euler_factor()?;
    let poly: Vec<String> = factor
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, c)| match i {
            0 => format!("{c}"),
            1 => format!("{c}X"),
            _ => format!("{c}X^{i}"),
        })
        .collect();
    let mut s = String::new();
    s += &format!("place: {} (degree {})\n", d.place, d.degree());
    s += &format!("kodaira: {}\n", d.kodaira);
    if let Some(split) = d.mult_split {
        s += &format!("multiplicative: {}\n", if split { "split" } else { "non-split" });
    }
    s += &format!("f_v: {}\nc_v: {}\n", d.f_v, d.c_v);
    s += &format!("v(Delta_min): {}\nv(omega): {}\n", d.v_delta_min, d.v_omega);
    s += &format!("P_v(X): {}\n", poly.join(" + ").replace("+ -", "- "));
    s += &format!("P_v(1/N(v)): {}\n#A0(k(v))/N(v): {}\n", chk.lhs, chk.rhs);
    s += &format!("identity: {}\n", if chk.pass { "holds" } else { "FAILS" });
    Ok((s, chk.pass))
}
