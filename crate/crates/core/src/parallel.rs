//! Row-parallel batch encryption.
//!
//! Messages are independent under CBC, so a batch is cut into contiguous,
//! balanced row ranges and each range runs on its own scoped thread with the
//! full chain for its rows. Output bytes never depend on the worker count.

use std::ops::Range;
use std::thread;

use crate::aes_cbc::{check_grid, Aes128Cbc, IvSet, MessageBatch};
use crate::error::{Error, Result};

/// Environment variable consulted when no worker count is given explicitly.
pub const WORKERS_ENV: &str = "GAES_WORKERS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPlan {
    pub workers: usize,
    pub chunks: Vec<Range<usize>>,
}

/// Balanced contiguous split of `0..n_messages`, at most one chunk per row.
pub fn plan(n_messages: usize, workers: usize) -> Result<ParallelPlan> {
    if workers == 0 {
        return Err(Error::ZeroWorkers);
    }
    let w = workers.min(n_messages);
    let mut chunks = Vec::with_capacity(w);
    if let Some(base) = n_messages.checked_div(w) {
        let extra = n_messages % w;
        let mut start = 0;
        for i in 0..w {
            let len = base + usize::from(i < extra);
            chunks.push(start..start + len);
            start += len;
        }
    }
    Ok(ParallelPlan {
        workers: w.max(1),
        chunks,
    })
}

/// Available hardware parallelism, or 1 if it cannot be determined.
pub fn detected_workers() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Resolves the worker count: explicit value, then `GAES_WORKERS`, then core count.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    let w = match explicit {
        Some(w) => w,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidWorkers(format!("{WORKERS_ENV}={v:?}")))?,
            Err(_) => detected_workers(),
        },
    };
    if w == 0 {
        return Err(Error::ZeroWorkers);
    }
    Ok(w)
}

type RowJob<'a> = dyn Fn(&IvSet, usize, &[u8], &mut [u8]) + Sync + 'a;

fn run_chunks(plan: &ParallelPlan, m: usize, ivs: &IvSet, input: &[u8], out: &mut [u8], job: &RowJob<'_>) -> Result<()> {
    if plan.chunks.len() <= 1 {
        job(ivs, 0, input, out);
        return Ok(());
    }
    thread::scope(|scope| {
        let mut rest = &mut out[..];
        let mut handles = Vec::with_capacity(plan.chunks.len());
        for range in &plan.chunks {
            let (mine, tail) = rest.split_at_mut(range.len() * m);
            rest = tail;
            let src = &input[range.start * m..range.end * m];
            let first = range.start;
            handles.push(scope.spawn(move || job(ivs, first, src, mine)));
        }
        // Join every worker before reporting, so no thread outlives the call.
        let results: Vec<_> = handles.into_iter().map(|h| h.join()).collect();
        if results.iter().any(|r| r.is_err()) {
            Err(Error::WorkerPanicked)
        } else {
            Ok(())
        }
    })
}

pub fn encrypt_batch_parallel(key: &[u8], ivs: &IvSet, batch: &MessageBatch, workers: usize) -> Result<Vec<u8>> {
    let cipher = Aes128Cbc::new(key)?;
    cipher.encrypt_batch_parallel(ivs, batch, workers)
}

pub fn decrypt_batch_parallel(key: &[u8], ivs: &IvSet, ct: &[u8], padded_len: usize, workers: usize) -> Result<Vec<u8>> {
    let cipher = Aes128Cbc::new(key)?;
    cipher.decrypt_batch_parallel(ivs, ct, padded_len, workers)
}

impl Aes128Cbc {
    pub fn encrypt_batch_parallel(&self, ivs: &IvSet, batch: &MessageBatch, workers: usize) -> Result<Vec<u8>> {
        ivs.check(batch.n_messages())?;
        let m = batch.padded_len();
        let plan = plan(batch.n_messages(), workers)?;
        let mut out = vec![0u8; batch.data().len()];
        run_chunks(&plan, m, ivs, batch.data(), &mut out, &|ivs, first, src, dst| {
            self.encrypt_rows(ivs, first, src, dst, m)
        })?;
        Ok(out)
    }

    pub fn decrypt_batch_parallel(&self, ivs: &IvSet, ct: &[u8], padded_len: usize, workers: usize) -> Result<Vec<u8>> {
        let n = check_grid(ct, padded_len)?;
        ivs.check(n)?;
        let plan = plan(n, workers)?;
        let mut out = vec![0u8; ct.len()];
        run_chunks(&plan, padded_len, ivs, ct, &mut out, &|ivs, first, src, dst| {
            self.decrypt_rows(ivs, first, src, dst, padded_len)
        })?;
        Ok(out)
    }
}
