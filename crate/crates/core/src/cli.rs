//! `gaes` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 self-test
//! failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::OsRng;
use rand::RngCore;

use crate::aes_cbc::{pad_zero, Aes128Cbc, IvSet, MixMatrices};
use crate::bench::{self, SweepConfig, SweepKind};
use crate::container::CipherContainer;
use crate::error::Error;
use crate::gf256::GfMatrix;
use crate::key_schedule::round_constants;
use crate::parallel::{detected_workers, resolve_workers};
use crate::sbox::{hex_grid, SBoxPair};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gaes", version, about = "Algebraic AES-128-CBC for batches of short messages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encrypt newline-delimited records (or one raw blob) into a GAES container.
    Encrypt(EncryptArgs),
    /// Decrypt a GAES container back to records.
    Decrypt(DecryptArgs),
    /// Print a generated table as a hex grid.
    Tables(TablesArgs),
    /// Run the known-answer suite.
    Selftest,
    /// Run a throughput sweep and write CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct EncryptArgs {
    /// 128-bit key as 32 hex digits.
    #[arg(long)]
    pub key: String,
    /// Shared IV as 32 hex digits. Generated from OS randomness when omitted.
    #[arg(long, conflicts_with = "per_message_iv")]
    pub iv: Option<String>,
    /// Generate a fresh random IV for every record.
    #[arg(long)]
    pub per_message_iv: bool,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Treat the whole input file as one message.
    #[arg(long)]
    pub raw: bool,
    /// Worker threads (default: GAES_WORKERS, then core count).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecryptArgs {
    #[arg(long)]
    pub key: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Write records back to back without newline terminators.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Sbox,
    SboxInv,
    Rcon,
    Mix,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long, value_enum)]
    pub which: Which,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Count,
    Length,
    Workers,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "count")]
    pub sweep: SweepArg,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Workers for count and length sweeps (default 1); upper bound of a worker
    /// sweep (default: GAES_WORKERS, then core count).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 0x5EED)]
    pub seed: u64,
    /// Comma-separated sweep points, overriding the defaults.
    #[arg(long, value_delimiter = ',')]
    pub points: Option<Vec<usize>>,
    /// Batch size for length and worker sweeps.
    #[arg(long)]
    pub messages: Option<usize>,
    /// Message length for count and worker sweeps.
    #[arg(long, default_value_t = 16)]
    pub message_len: usize,
    /// Also time the scalar per-block baseline.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    SelfTest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::SelfTest(_) => EXIT_SELFTEST,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::SelfTest(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::KeyLength(_) | Error::ZeroWorkers | Error::InvalidWorkers(_) | Error::InvalidSweep(_) => {
                CliError::Usage(e.to_string())
            }
            Error::SelfTestFailed(_) => CliError::SelfTest(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Encrypt(a) => cmd_encrypt(&a, out),
        Command::Decrypt(a) => cmd_decrypt(&a),
        Command::Tables(a) => cmd_tables(&a, out),
        Command::Selftest => cmd_selftest(out),
        Command::Bench(a) => cmd_bench(&a, out, err),
    }
}

/// Exactly 32 hex digits, either case.
pub fn parse_hex16(what: &str, s: &str) -> CliResult<[u8; 16]> {
    let s = s.trim();
    if s.len() != 32 {
        return Err(CliError::Usage(format!("{what} must be 32 hex digits, got {}", s.len())));
    }
    let mut buf = [0u8; 16];
    hex::decode_to_slice(s, &mut buf).map_err(|e| CliError::Usage(format!("{what}: {e}")))?;
    Ok(buf)
}

/// Newline-delimited records; a single trailing newline ends the last record.
pub fn split_records(bytes: &[u8]) -> CliResult<Vec<&[u8]>> {
    if bytes.is_empty() {
        return Err(CliError::Data("input is empty".into()));
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let records: Vec<&[u8]> = body.split(|&b| b == b'\n').collect();
    if let Some(i) = records.iter().position(|r| r.is_empty()) {
        return Err(CliError::Data(format!("record {} is empty", i + 1)));
    }
    Ok(records)
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Writes `bytes` to `path`, removing the file again if the write fails.
fn write_output(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| {
        let _ = fs::remove_file(path);
        CliError::Data(format!("cannot write {}: {e}", path.display()))
    })
}

fn random_iv() -> [u8; 16] {
    let mut iv = [0u8; 16];
    OsRng.fill_bytes(&mut iv);
    iv
}

pub fn cmd_encrypt(a: &EncryptArgs, out: &mut dyn Write) -> CliResult {
    let key = parse_hex16("key", &a.key)?;
    let shared_iv = a.iv.as_deref().map(|s| parse_hex16("iv", s)).transpose()?;
    let workers = resolve_workers(a.workers)?;
    let input = read_input(&a.input)?;
    let records = if a.raw {
        if input.is_empty() {
            return Err(CliError::Data("input is empty".into()));
        }
        vec![input.as_slice()]
    } else {
        split_records(&input)?
    };
    let batch = pad_zero(&records)?;
    let ivs = match (shared_iv, a.per_message_iv) {
        (Some(iv), _) => IvSet::Shared(iv),
        (None, true) => IvSet::PerMessage((0..batch.n_messages()).map(|_| random_iv()).collect()),
        (None, false) => IvSet::Shared(random_iv()),
    };
    let ct = Aes128Cbc::new(&key)?.encrypt_batch_parallel(&ivs, &batch, workers)?;
    let container = CipherContainer::new(ivs, batch.padded_len(), batch.original_lens().to_vec(), ct)
        .map_err(Error::from)?;
    let bytes = container.to_bytes();
    write_output(&a.output, &bytes)?;
    let _ = writeln!(
        out,
        "N={} M={} bytes={}",
        container.n_messages(),
        container.padded_len(),
        bytes.len()
    );
    Ok(())
}

pub fn cmd_decrypt(a: &DecryptArgs) -> CliResult {
    let key = parse_hex16("key", &a.key)?;
    let workers = resolve_workers(a.workers)?;
    let bytes = read_input(&a.input)?;
    let container = CipherContainer::from_bytes(&bytes).map_err(Error::from)?;
    let mut plain = Vec::new();
    if container.n_messages() > 0 {
        let m = container.padded_len();
        let grid = Aes128Cbc::new(&key)?.decrypt_batch_parallel(container.ivs(), container.payload(), m, workers)?;
        for (row, &len) in grid.chunks(m).zip(container.lengths()) {
            plain.extend_from_slice(&row[..len]);
            if !a.raw {
                plain.push(b'\n');
            }
        }
    }
    write_output(&a.output, &plain)
}

fn matrix_grid(m: &GfMatrix) -> String {
    let mut s = String::new();
    for r in 0..m.rows() {
        let cells: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s
}

pub fn render_table(which: Which) -> String {
    let pair = SBoxPair::global();
    match which {
        Which::Sbox => hex_grid(&pair.forward),
        Which::SboxInv => hex_grid(&pair.inverse),
        Which::Rcon => {
            let cells: Vec<String> = round_constants().iter().map(|b| format!("{b:02x}")).collect();
            format!("{}\n", cells.join(" "))
        }
        Which::Mix => {
            let mix = MixMatrices::global();
            format!("{}\n{}", matrix_grid(&mix.forward), matrix_grid(&mix.inverse))
        }
    }
}

pub fn cmd_tables(a: &TablesArgs, out: &mut dyn Write) -> CliResult {
    write!(out, "{}", render_table(a.which)).map_err(|e| CliError::Data(e.to_string()))
}

pub fn cmd_selftest(out: &mut dyn Write) -> CliResult {
    let checks = selftest::run();
    for c in &checks {
        let _ = writeln!(out, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        let _ = writeln!(out, "{} checks passed", checks.len());
        Ok(())
    } else {
        Err(CliError::SelfTest(format!("{failed} of {} checks failed", checks.len())))
    }
}

/// 1, 2, 4, ... up to `max`, always ending at `max`.
fn doubling_to(max: usize) -> Vec<usize> {
    let mut v: Vec<usize> = std::iter::successors(Some(1usize), |&w| Some(w * 2))
        .take_while(|&w| w < max)
        .collect();
    v.push(max);
    v
}

pub fn bench_config(a: &BenchArgs) -> CliResult<SweepConfig> {
    let mut cfg = match a.sweep {
        SweepArg::Count => SweepConfig::count(vec![1, 10, 100, 1_000, 10_000, 100_000]),
        SweepArg::Length => SweepConfig::length(vec![16, 64, 256, 1024, 4096]),
        SweepArg::Workers => {
            let max = match a.workers {
                Some(w) => w,
                None => resolve_workers(None).unwrap_or_else(|_| detected_workers()),
            };
            SweepConfig::workers(doubling_to(max.max(1)))
        }
    };
    if cfg.kind != SweepKind::Workers {
        cfg.workers = a.workers.unwrap_or(1);
    }
    if let Some(points) = &a.points {
        cfg.points = points.clone();
    }
    if let Some(n) = a.messages {
        cfg.n_messages = n;
    }
    cfg.message_len = a.message_len;
    cfg.repetitions = a.reps;
    cfg.warmup = a.warmup;
    cfg.seed = a.seed;
    cfg.include_scalar = a.baseline;
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let cfg = bench_config(a)?;
    let records = bench::run_sweep(&cfg)?;
    if cfg.kind == SweepKind::Workers {
        for (w, s) in bench::speedups(&records) {
            let _ = writeln!(err, "workers={w} speedup={s:.2}");
        }
    }
    for r in records.iter().filter(|r| r.timer_flagged) {
        let _ = writeln!(err, "warning: timer too coarse at n_messages={} len={}", r.n_messages, r.message_len_bytes);
    }
    let csv = bench::emit_csv_with_seed(&records, cfg.seed);
    match &a.out {
        Some(path) => write_output(path, csv.as_bytes()),
        None => write!(out, "{csv}").map_err(|e| CliError::Data(e.to_string())),
    }
}
