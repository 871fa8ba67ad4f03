//! Throughput sweeps: message count, message length, and worker count.
//!
//! Every sweep starts by running the known-answer suite and refuses to time
//! anything if it fails. Each point is the median over `repetitions` samples
//! taken after `warmup` discarded runs; a sample repeats the workload until at
//! least [`MIN_SAMPLE`] of wall time has elapsed, then divides.

use std::fmt;
use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aes_cbc::{encrypt_cbc_scalar, pad_zero, Aes128Cbc, IvSet, MessageBatch};
use crate::error::{Error, Result};
use crate::key_schedule::gen_keys;
use crate::sbox::SBoxPair;
use crate::selftest;

pub const MIN_SAMPLE: Duration = Duration::from_millis(10);
const MAX_INNER: u32 = 1 << 20;

pub const CSV_HEADER: &str =
    "kind,implementation,n_messages,message_len_bytes,workers,total_bytes,median_seconds,rate_bytes_per_second";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Count,
    Length,
    Workers,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Count => "count",
            SweepKind::Length => "length",
            SweepKind::Workers => "workers",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Implementation {
    Vectorized,
    ScalarBaseline,
}

impl fmt::Display for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Implementation::Vectorized => "vectorized",
            Implementation::ScalarBaseline => "scalar-baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// Message length for count and worker sweeps.
    pub message_len: usize,
    /// Batch size for length and worker sweeps.
    pub n_messages: usize,
    /// Message counts, lengths, or worker counts, depending on `kind`.
    pub points: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    /// Workers used by count and length sweeps.
    pub workers: usize,
    /// Also time the scalar per-block baseline at every point.
    pub include_scalar: bool,
    pub seed: u64,
}

impl SweepConfig {
    pub fn count(counts: Vec<usize>) -> Self {
        SweepConfig {
            kind: SweepKind::Count,
            message_len: 16,
            n_messages: 0,
            points: counts,
            repetitions: 5,
            warmup: 1,
            workers: 1,
            include_scalar: false,
            seed: 0,
        }
    }

    pub fn length(lengths: Vec<usize>) -> Self {
        SweepConfig {
            kind: SweepKind::Length,
            n_messages: 128,
            points: lengths,
            ..SweepConfig::count(Vec::new())
        }
    }

    pub fn workers(worker_counts: Vec<usize>) -> Self {
        SweepConfig {
            kind: SweepKind::Workers,
            n_messages: 100_000,
            points: worker_counts,
            ..SweepConfig::count(Vec::new())
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSweep(msg));
        if self.repetitions < 3 {
            return bad(format!("repetitions must be at least 3, got {}", self.repetitions));
        }
        if self.points.is_empty() {
            return bad("no sweep points".into());
        }
        if self.points.contains(&0) {
            return bad("sweep points must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        match self.kind {
            SweepKind::Count | SweepKind::Workers if self.message_len == 0 => bad("message length must be positive".into()),
            SweepKind::Length | SweepKind::Workers if self.n_messages == 0 => bad("message count must be positive".into()),
            SweepKind::Count | SweepKind::Workers if !self.points.windows(2).all(|w| w[0] < w[1]) => {
                bad("points must be strictly ascending".into())
            }
            SweepKind::Workers if self.points[0] != 1 => bad("worker sweep must start at 1".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub kind: SweepKind,
    pub implementation: Implementation,
    pub n_messages: usize,
    pub message_len_bytes: usize,
    pub workers: usize,
    pub total_bytes: u64,
    pub median_seconds: f64,
    pub rate_bytes_per_second: f64,
    /// Set when even the largest repetition count stayed under [`MIN_SAMPLE`].
    pub timer_flagged: bool,
}

/// Random plaintexts plus a fixed key and IV, all from one seed.
pub struct Workload {
    pub key: [u8; 16],
    pub ivs: IvSet,
    pub batch: MessageBatch,
}

impl Workload {
    pub fn generate(n_messages: usize, message_len: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key: [u8; 16] = rng.gen();
        let iv: [u8; 16] = rng.gen();
        let mut data = vec![0u8; n_messages * message_len];
        rng.fill_bytes(&mut data);
        let messages: Vec<&[u8]> = data.chunks(message_len).collect();
        Ok(Workload {
            key,
            ivs: IvSet::Shared(iv),
            batch: pad_zero(&messages)?,
        })
    }

    pub fn total_bytes(&self) -> u64 {
        self.batch.original_lens().iter().map(|&l| l as u64).sum()
    }

    /// One vectorized encryption call, key setup included.
    pub fn encrypt_vectorized(&self, workers: usize) -> Result<Vec<u8>> {
        let cipher = Aes128Cbc::new(&self.key)?;
        if workers == 1 {
            cipher.encrypt_batch(&self.ivs, &self.batch)
        } else {
            cipher.encrypt_batch_parallel(&self.ivs, &self.batch, workers)
        }
    }

    /// The per-message, per-block reference loop, key setup included.
    pub fn encrypt_scalar(&self) -> Result<Vec<u8>> {
        let pair = SBoxPair::global();
        let ks = gen_keys(&self.key, &pair.forward)?;
        let mut out = Vec::with_capacity(self.batch.data().len());
        for i in 0..self.batch.n_messages() {
            out.extend(encrypt_cbc_scalar(&ks, pair, self.ivs.row(i), self.batch.row(i))?);
        }
        Ok(out)
    }
}

/// Median seconds per call of `f`, and whether the timer was too coarse.
pub fn measure<F: FnMut()>(warmup: usize, repetitions: usize, mut f: F) -> (f64, bool) {
    for _ in 0..warmup {
        f();
    }
    let mut inner = 1u32;
    let flagged = loop {
        let start = Instant::now();
        for _ in 0..inner {
            f();
        }
        let elapsed = start.elapsed();
        if elapsed >= MIN_SAMPLE {
            break false;
        }
        if inner >= MAX_INNER {
            break true;
        }
        // Aim a bit past the threshold so the next probe usually lands.
        let scale = (MIN_SAMPLE.as_secs_f64() * 1.5 / elapsed.as_secs_f64().max(1e-9)).ceil();
        inner = (inner as f64 * scale.clamp(2.0, 1024.0)).min(MAX_INNER as f64) as u32;
    };
    let mut samples: Vec<f64> = (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..inner {
                f();
            }
            start.elapsed().as_secs_f64() / inner as f64
        })
        .collect();
    (median(&mut samples), flagged)
}

pub fn median(samples: &mut [f64]) -> f64 {
    assert!(!samples.is_empty(), "median of no samples");
    samples.sort_by(|a, b| a.total_cmp(b));
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}

fn ensure_known_answers() -> Result<()> {
    let checks = selftest::run();
    match checks.iter().find(|c| !c.passed) {
        None => Ok(()),
        Some(c) => Err(Error::SelfTestFailed(c.to_string())),
    }
}

fn time_point(
    cfg: &SweepConfig,
    n_messages: usize,
    message_len: usize,
    workers: usize,
    implementation: Implementation,
) -> Result<BenchRecord> {
    let work = Workload::generate(n_messages, message_len, cfg.seed)?;
    // Surface setup errors once, outside the timed loop.
    match implementation {
        Implementation::Vectorized => work.encrypt_vectorized(workers)?,
        Implementation::ScalarBaseline => work.encrypt_scalar()?,
    };
    let (median_seconds, timer_flagged) = match implementation {
        Implementation::Vectorized => measure(cfg.warmup, cfg.repetitions, || {
            black_box(work.encrypt_vectorized(workers).expect("validated above"));
        }),
        Implementation::ScalarBaseline => measure(cfg.warmup, cfg.repetitions, || {
            black_box(work.encrypt_scalar().expect("validated above"));
        }),
    };
    let total_bytes = work.total_bytes();
    Ok(BenchRecord {
        kind: cfg.kind,
        implementation,
        n_messages,
        message_len_bytes: message_len,
        workers,
        total_bytes,
        median_seconds,
        rate_bytes_per_second: total_bytes as f64 / median_seconds,
        timer_flagged,
    })
}

fn implementations(cfg: &SweepConfig) -> Vec<Implementation> {
    let mut v = vec![Implementation::Vectorized];
    if cfg.include_scalar {
        v.push(Implementation::ScalarBaseline);
    }
    v
}

fn expect_kind(cfg: &SweepConfig, kind: SweepKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::InvalidSweep(format!("expected a {kind} sweep, got {}", cfg.kind)));
    }
    cfg.validate()?;
    ensure_known_answers()
}

/// Fixed message length, varying number of messages.
pub fn run_count_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    expect_kind(cfg, SweepKind::Count)?;
    let mut out = Vec::new();
    for &n in &cfg.points {
        for imp in implementations(cfg) {
            out.push(time_point(cfg, n, cfg.message_len, cfg.workers, imp)?);
        }
    }
    Ok(out)
}

/// Fixed number of messages, varying message length.
pub fn run_length_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    expect_kind(cfg, SweepKind::Length)?;
    let mut out = Vec::new();
    for &len in &cfg.points {
        for imp in implementations(cfg) {
            out.push(time_point(cfg, cfg.n_messages, len, cfg.workers, imp)?);
        }
    }
    Ok(out)
}

/// Fixed batch, varying worker count. Vectorized path only.
pub fn run_worker_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    expect_kind(cfg, SweepKind::Workers)?;
    cfg.points
        .iter()
        .map(|&w| time_point(cfg, cfg.n_messages, cfg.message_len, w, Implementation::Vectorized))
        .collect()
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    match cfg.kind {
        SweepKind::Count => run_count_sweep(cfg),
        SweepKind::Length => run_length_sweep(cfg),
        SweepKind::Workers => run_worker_sweep(cfg),
    }
}

/// `rate(W) / rate(1)` for each worker-sweep record.
pub fn speedups(records: &[BenchRecord]) -> Vec<(usize, f64)> {
    let Some(base) = records.iter().find(|r| r.workers == 1) else {
        return Vec::new();
    };
    records
        .iter()
        .map(|r| (r.workers, r.rate_bytes_per_second / base.rate_bytes_per_second))
        .collect()
}

pub fn emit_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        // f64 Display is the shortest round-tripping decimal, never exponent form.
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.kind,
            r.implementation,
            r.n_messages,
            r.message_len_bytes,
            r.workers,
            r.total_bytes,
            r.median_seconds,
            r.rate_bytes_per_second
        );
    }
    out
}

/// CSV preceded by a `# seed=...` metadata line.
pub fn emit_csv_with_seed(records: &[BenchRecord], seed: u64) -> String {
    format!("# seed={seed}\n{}", emit_csv(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(total: u64, secs: f64) -> BenchRecord {
        BenchRecord {
            kind: SweepKind::Count,
            implementation: Implementation::Vectorized,
            n_messages: 1,
            message_len_bytes: 16,
            workers: 1,
            total_bytes: total,
            median_seconds: secs,
            rate_bytes_per_second: total as f64 / secs,
            timer_flagged: false,
        }
    }

    fn quick(mut cfg: SweepConfig) -> SweepConfig {
        cfg.repetitions = 3;
        cfg.warmup = 0;
        cfg
    }

    #[test]
    fn csv_empty_is_header_only() {
        assert_eq!(emit_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_one_row_in_order() {
        let csv = emit_csv(&[record(1600, 0.25)]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "count,vectorized,1,16,1,1600,0.25,6400");
        assert!(csv.ends_with('\n'));
        let seeded = emit_csv_with_seed(&[], 42);
        assert!(seeded.starts_with("# seed=42\n"));
    }

    #[test]
    fn csv_rate_round_trips() {
        for (total, secs) in [(16u64, 3.3e-7), (1_600_000, 0.0123456789), (7, 1.0 / 3.0), (123, 2.5e-12)] {
            let r = record(total, secs);
            let csv = emit_csv(std::slice::from_ref(&r));
            let row = csv.lines().nth(1).unwrap();
            let f: Vec<&str> = row.split(',').collect();
            assert!(!f[6].contains('e') && !f[7].contains('e'), "no exponent form: {row}");
            let rate: f64 = f[7].parse().unwrap();
            let median: f64 = f[6].parse().unwrap();
            let recomputed = f[5].parse::<u64>().unwrap() as f64 / median;
            assert_eq!(rate, r.rate_bytes_per_second);
            assert!((rate - recomputed).abs() <= rate * f64::EPSILON);
        }
    }

    #[test]
    fn median_of_samples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::count(vec![1, 10]);
        assert!(c.validate().is_ok());
        c.repetitions = 2;
        assert!(c.validate().is_err());
        assert!(SweepConfig::count(vec![10, 1]).validate().is_err());
        assert!(SweepConfig::count(vec![0, 1]).validate().is_err());
        assert!(SweepConfig::count(vec![]).validate().is_err());
        assert!(SweepConfig::workers(vec![2, 4]).validate().is_err());
        assert!(SweepConfig::workers(vec![1, 2, 4]).validate().is_ok());
        assert!(run_length_sweep(&SweepConfig::count(vec![1])).is_err());
    }

    #[test]
    fn count_sweep_bookkeeping() {
        let mut cfg = quick(SweepConfig::count(vec![1, 10]));
        cfg.include_scalar = true;
        let recs = run_count_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 4);
        assert_eq!(recs[0].total_bytes, 16);
        assert_eq!(recs[0].implementation, Implementation::Vectorized);
        assert_eq!(recs[1].implementation, Implementation::ScalarBaseline);
        assert_eq!(recs[2].total_bytes, 160);
        for r in &recs {
            assert_eq!(r.rate_bytes_per_second, r.total_bytes as f64 / r.median_seconds);
            assert!(r.median_seconds > 0.0);
        }
    }

    #[test]
    fn length_and_worker_sweeps() {
        let mut cfg = quick(SweepConfig::length(vec![16, 64]));
        cfg.n_messages = 8;
        let recs = run_length_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].total_bytes, 8 * 64);

        let mut cfg = quick(SweepConfig::workers(vec![1, 2]));
        cfg.n_messages = 64;
        let recs = run_worker_sweep(&cfg).unwrap();
        let s = speedups(&recs);
        assert_eq!(s[0], (1, 1.0));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn scalar_and_vectorized_workloads_agree() {
        let w = Workload::generate(50, 40, 9).unwrap();
        assert_eq!(w.encrypt_scalar().unwrap(), w.encrypt_vectorized(1).unwrap());
        assert_eq!(w.encrypt_vectorized(3).unwrap(), w.encrypt_vectorized(1).unwrap());
        assert_eq!(w.total_bytes(), 2000);
    }
}
