//! On-disk cache of trace sums, one JSON file per `(curve hash, n)`.
//!
//! Entries carry every per-orbit trace and a SHA-256 checksum over them.
//! Unreadable or inconsistent entries are discarded with a warning. In
//! validate mode a seeded sample of about 1% of the fibers (at least 8, or
//! all of them when fewer) is recomputed and compared.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, SystemTime};

use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::lseries::{recompute_fiber, trace_sum, Fiber, FiberModel, FiberTrace, TraceSum};
use crate::par::Exec;
use crate::pipeline::TraceSource;

pub const CACHE_ENV: &str = "FFBSD_CACHE";
const FORMAT: u32 = 1;
const LOCK_NAME: &str = ".lock";
const STALE_LOCK: Duration = Duration::from_secs(120);

/// Content hash of a curve: SHA-256 over its field and coefficient indices.
pub fn curve_hash(curve: &Curve) -> String {
    let fq = curve.field();
    let idx = |p: &crate::funcfield::Poly| {
        p.coeffs().iter().map(|c| c.index().to_string()).collect::<Vec<_>>().join(",")
    };
    let canonical = format!(
        "ffbsd-curve-v1;p={};e={};modulus={:?};a=[{}];b=[{}]",
        fq.p(),
        fq.e(),
        fq.spec().base_modulus,
        idx(curve.a()),
        idx(curve.b())
    );
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountCacheEntry {
    pub format: u32,
    pub curve_hash: String,
    pub n: usize,
    pub a_n: i64,
    /// `(fiber, orbit size, trace)`; the fiber is a table index or `-1` for
    /// infinity.
    pub fibers: Vec<(i64, u32, i64)>,
    pub checksum: String,
}

fn fiber_code(f: Fiber) -> i64 {
    match f {
        Fiber::Finite(x) => x as i64,
        Fiber::Infinity => -1,
    }
}

fn fiber_from_code(c: i64) -> Result<Fiber> {
    match c {
        -1 => Ok(Fiber::Infinity),
        x if (0..=u32::MAX as i64).contains(&x) => Ok(Fiber::Finite(x as u32)),
        _ => Err(Error::Invalid(format!("bad fiber code {c}"))),
    }
}

fn checksum(hash: &str, n: usize, fibers: &[(i64, u32, i64)]) -> String {
    let mut h = Sha256::new();
    h.update(format!("{hash};{n};").as_bytes());
    for (f, w, t) in fibers {
        h.update(format!("{f}:{w}:{t};").as_bytes());
    }
    hex::encode(h.finalize())
}

impl CountCacheEntry {
    pub fn from_trace(hash: &str, ts: &TraceSum) -> Result<CountCacheEntry> {
        let fibers: Vec<_> = ts
            .fibers
            .iter()
            .map(|f| (fiber_code(f.fiber), f.weight, f.trace))
            .collect();
        let a_n = i64::try_from(ts.a_n).map_err(|_| Error::Invalid("A_n exceeds i64".into()))?;
        Ok(CountCacheEntry {
            format: FORMAT,
            curve_hash: hash.to_string(),
            n: ts.n,
            a_n,
            checksum: checksum(hash, ts.n, &fibers),
            fibers,
        })
    }

    /// Structural checks; `Err` describes the corruption.
    pub fn check(&self, hash: &str, n: usize) -> std::result::Result<TraceSum, String> {
        if self.format != FORMAT {
            return Err(format!("format {} (expected {FORMAT})", self.format));
        }
        if self.curve_hash != hash || self.n != n {
            return Err("entry is for a different curve or degree".into());
        }
        if checksum(hash, n, &self.fibers) != self.checksum {
            return Err("checksum mismatch".into());
        }
        let fibers = self
            .fibers
            .iter()
            .map(|&(f, weight, trace)| {
                fiber_from_code(f).map(|fiber| FiberTrace {
                    fiber,
                    weight,
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let ts = TraceSum::from_fibers(n, fibers);
        if ts.a_n != self.a_n as i128 {
            return Err(format!("stored A_{n} = {} but fibers sum to {}", self.a_n, ts.a_n));
        }
        Ok(ts)
    }
}

/// Outcome counters, for the summary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    pub corrupt: usize,
    pub validated_fibers: usize,
    pub mismatches: Vec<String>,
}

/// A [`TraceSource`] backed by a cache directory.
pub struct TraceCache {
    dir: PathBuf,
    validate: bool,
    exec: Exec,
    pub stats: CacheStats,
}

impl TraceCache {
    pub fn new(dir: impl Into<PathBuf>, validate: bool, exec: Exec) -> Result<TraceCache> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| Error::Invalid(format!("cache directory {}: {e}", dir.display())))?;
        Ok(TraceCache {
            dir,
            validate,
            exec,
            stats: CacheStats::default(),
        })
    }

    pub fn entry_path(&self, hash: &str, n: usize) -> PathBuf {
        self.dir.join(format!("{hash}-n{n}.json"))
    }

    fn load(&mut self, path: &Path, hash: &str, n: usize) -> Option<TraceSum> {
        let text = fs::read_to_string(path).ok()?;
        let parsed = serde_json::from_str::<CountCacheEntry>(&text)
            .map_err(|e| e.to_string())
            .and_then(|entry| entry.check(hash, n));
        match parsed {
            Ok(ts) => Some(ts),
            Err(why) => {
                warn!("discarding corrupt cache entry {}: {why}", path.display());
                self.stats.corrupt += 1;
                None
            }
        }
    }

    /// Recomputes a seeded sample of fibers; returns the first mismatch.
    fn validate_entry(&mut self, model: &FiberModel, hash: &str, ts: &TraceSum) -> Result<Option<String>> {
        let len = ts.fibers.len();
        let amount = len.div_ceil(100).max(8).min(len);
        let seed = u64::from_str_radix(&hash[..16], 16).unwrap_or(0) ^ ts.n as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picks = sample(&mut rng, len, amount).into_vec();
        picks.sort_unstable();
        for i in picks {
            let f = ts.fibers[i];
            self.stats.validated_fibers += 1;
            let fresh = recompute_fiber(model, ts.n, f.fiber)?;
            if fresh != f.trace {
                return Ok(Some(format!(
                    "A_{}: fiber {:?} cached trace {} but recomputed {fresh}",
                    ts.n, f.fiber, f.trace
                )));
            }
        }
        Ok(None)
    }

    fn store(&self, path: &Path, entry: &CountCacheEntry) -> Result<()> {
        let io = |e: std::io::Error| Error::Invalid(format!("cache write {}: {e}", path.display()));
        let _lock = DirLock::acquire(&self.dir)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let text = serde_json::to_string(entry).map_err(|e| Error::Invalid(e.to_string()))?;
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(text.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)?;
        Ok(())
    }
}

impl TraceSource for TraceCache {
    fn trace(&mut self, model: &FiberModel, n: usize) -> Result<TraceSum> {
        let hash = curve_hash(model.curve());
        let path = self.entry_path(&hash, n);
        if let Some(ts) = self.load(&path, &hash, n) {
            if !self.validate {
                self.stats.hits += 1;
                return Ok(ts);
            }
            match self.validate_entry(model, &hash, &ts)? {
                None => {
                    self.stats.hits += 1;
                    return Ok(ts);
                }
                Some(why) => {
                    warn!("cache validation mismatch, recomputing: {why}");
                    self.stats.mismatches.push(why);
                }
            }
        }
        self.stats.misses += 1;
        let ts = trace_sum(model, n, self.exec)?;
        self.store(&path, &CountCacheEntry::from_trace(&hash, &ts)?)?;
        Ok(ts)
    }
}

/// Exclusive writer lock: a lock file created with `create_new`.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<DirLock> {
        let path = dir.join(LOCK_NAME);
        for _ in 0..600 {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(DirLock(path));
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    let stale = fs::metadata(&path)
                        .and_then(|m| m.modified())
                        .ok()
                        .and_then(|t| SystemTime::now().duration_since(t).ok())
                        .is_some_and(|age| age > STALE_LOCK);
                    if stale {
                        warn!("removing stale cache lock {}", path.display());
                        let _ = fs::remove_file(&path);
                    } else {
                        thread::sleep(Duration::from_millis(50));
                    }
                }
                Err(e) => return Err(Error::Invalid(format!("cache lock {}: {e}", path.display()))),
            }
        }
        Err(Error::Invalid(format!("timed out waiting for {}", path.display())))
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}
