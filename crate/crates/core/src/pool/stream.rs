use std::collections::{HashSet, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, Sender};
use num_bigint::BigUint;
use num_rational::BigRational;

use super::snapshot::{self, SnapshotHeader, SnapshotKind};
use super::{check_budget, parallel_encrypt};
use crate::error::{Error, Result};
use crate::he::{Ciphertext, PublicKey};
use crate::rng::{HeRng, RngMode};

const INIT_SALT: u64 = 0x51;
const PRODUCER_SALT: u64 = 0x52;
const FALLBACK_SALT: u64 = 0x53;

/// Layout and threading of a [`StreamCoeffPool`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamPoolParams {
    /// Queues exist for every coefficient in `0..=coefficient_max`.
    pub coefficient_max: u32,
    /// Ring capacity `L` of each queue.
    pub queue_len: usize,
    /// Threads for the offline fill.
    pub workers: usize,
    /// Background refill threads.
    pub producers: usize,
    /// Start with refills suspended.
    pub start_paused: bool,
}

impl StreamPoolParams {
    pub fn new(coefficient_max: u32, queue_len: usize, workers: usize) -> Self {
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        StreamPoolParams {
            coefficient_max,
            queue_len,
            workers,
            producers: cores.saturating_sub(1).max(1),
            start_paused: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.coefficient_max < 1 || self.queue_len < 1 || self.workers < 1 || self.producers < 1 {
            return Err(Error::InvalidParams(format!(
                "stream pool needs C >= 1, L >= 1, workers >= 1, producers >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

struct Shared {
    pk: PublicKey,
    queues: Vec<Mutex<VecDeque<Ciphertext>>>,
    capacity: usize,
    stalls: AtomicU64,
    refills: AtomicU64,
    max_occupancy: AtomicUsize,
    paused: Mutex<bool>,
    resumed: Condvar,
    shutdown: AtomicBool,
    audit: Mutex<Option<HashSet<u64>>>,
    reused: AtomicU64,
}

impl Shared {
    fn queue(&self, k: usize) -> MutexGuard<'_, VecDeque<Ciphertext>> {
        self.queues[k].lock().unwrap_or_else(|e| e.into_inner())
    }

    fn note_consumed(&self, ct: &Ciphertext) {
        let mut audit = self.audit.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(seen) = audit.as_mut() {
            if !seen.insert(ct.fingerprint()) {
                self.reused.fetch_add(1, Ordering::Relaxed);
            }
        }
    }

    /// Block while refills are suspended. Returns false on shutdown.
    fn wait_resumed(&self) -> bool {
        let mut paused = self.paused.lock().unwrap_or_else(|e| e.into_inner());
        while *paused && !self.shutdown.load(Ordering::Acquire) {
            paused = self.resumed.wait(paused).unwrap_or_else(|e| e.into_inner());
        }
        !self.shutdown.load(Ordering::Acquire)
    }
}

/// Per-coefficient single-use queues of fresh encryptions.
///
/// Queue `k` holds encryptions of `k` only. [`take`](Self::take) pops the
/// head and asks the background producer for a replacement; an empty queue
/// falls back to encrypting on the spot and counts a stall. Entries are
/// never handed out twice.
///
/// One consumer at a time is intended; the producer threads run alongside.
pub struct StreamCoeffPool {
    shared: Arc<Shared>,
    params: StreamPoolParams,
    requests: Option<Sender<u32>>,
    producers: Vec<JoinHandle<()>>,
    fallback_rng: Mutex<HeRng>,
}

pub fn init_stream_pool(pk: &PublicKey, params: &StreamPoolParams, mode: RngMode) -> Result<StreamCoeffPool> {
    params.validate()?;
    let what = format!("a coefficient pool with C = {}", params.coefficient_max);
    check_budget(pk, &BigUint::from(params.coefficient_max), &what)?;
    let (c, l) = (params.coefficient_max as usize, params.queue_len);
    let values: Vec<BigRational> =
        (0..=c).flat_map(|k| std::iter::repeat_n(BigRational::from_integer(k.into()), l)).collect();
    let cts = parallel_encrypt(pk, &values, params.workers, mode.derive(INIT_SALT))?;
    let mut it = cts.into_iter();
    let queues = (0..=c).map(|_| it.by_ref().take(l).collect()).collect();
    Ok(StreamCoeffPool::start(pk, params, queues, mode))
}

impl StreamCoeffPool {
    fn start(pk: &PublicKey, params: &StreamPoolParams, queues: Vec<VecDeque<Ciphertext>>, mode: RngMode) -> Self {
        let c = params.coefficient_max as usize;
        let occupancy = queues.iter().map(VecDeque::len).max().unwrap_or(0);
        let shared = Arc::new(Shared {
            pk: pk.clone(),
            queues: queues.into_iter().map(Mutex::new).collect(),
            capacity: params.queue_len,
            stalls: AtomicU64::new(0),
            refills: AtomicU64::new(0),
            max_occupancy: AtomicUsize::new(occupancy),
            paused: Mutex::new(params.start_paused),
            resumed: Condvar::new(),
            shutdown: AtomicBool::new(false),
            audit: Mutex::new(None),
            reused: AtomicU64::new(0),
        });
        let (tx, rx) = bounded::<u32>((c + 1) * params.queue_len);
        let producer_mode = mode.derive(PRODUCER_SALT);
        let producers = (0..params.producers)
            .map(|t| {
                let shared = Arc::clone(&shared);
                let rx = rx.clone();
                let rng = producer_mode.stream(t as u64);
                std::thread::Builder::new()
                    .name(format!("pool-refill-{t}"))
                    .spawn(move || refill_loop(&shared, &rx, rng))
                    .expect("spawn refill thread")
            })
            .collect();
        StreamCoeffPool {
            shared,
            params: params.clone(),
            requests: Some(tx),
            producers,
            fallback_rng: Mutex::new(mode.derive(FALLBACK_SALT).rng()),
        }
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.shared.pk
    }

    pub fn coefficient_max(&self) -> u32 {
        self.params.coefficient_max
    }

    pub fn queue_len(&self) -> usize {
        self.params.queue_len
    }

    pub fn params(&self) -> &StreamPoolParams {
        &self.params
    }

    /// Pop a fresh encryption of `k`.
    pub fn take(&self, k: u32) -> Result<Ciphertext> {
        self.check(i64::from(k))?;
        let popped = self.shared.queue(k as usize).pop_front();
        let ct = match popped {
            Some(ct) => {
                if let Some(tx) = &self.requests {
                    // Outstanding requests plus occupancy never exceed L per
                    // queue, so the channel cannot be full here.
                    let _ = tx.try_send(k);
                }
                ct
            }
            None => {
                self.shared.stalls.fetch_add(1, Ordering::Relaxed);
                let mut rng = self.fallback_rng.lock().unwrap_or_else(|e| e.into_inner());
                self.shared.pk.enc(&BigRational::from_integer(k.into()), &mut *rng)?
            }
        };
        self.shared.note_consumed(&ct);
        Ok(ct)
    }

    /// Like [`take`](Self::take) for `|k|`, negated when `k < 0`.
    pub fn take_signed(&self, k: i64) -> Result<Ciphertext> {
        self.check(k)?;
        let ct = self.take(k.unsigned_abs() as u32)?;
        if k < 0 {
            self.shared.pk.negate(&ct)
        } else {
            Ok(ct)
        }
    }

    fn check(&self, k: i64) -> Result<()> {
        let max = self.params.coefficient_max;
        if k.unsigned_abs() > u64::from(max) {
            return Err(Error::CoefficientOutOfRange { coefficient: k, max });
        }
        Ok(())
    }

    pub fn stall_count(&self) -> u64 {
        self.shared.stalls.load(Ordering::Relaxed)
    }

    /// Entries produced by the background refill so far.
    pub fn refill_count(&self) -> u64 {
        self.shared.refills.load(Ordering::Relaxed)
    }

    pub fn occupancy(&self, k: u32) -> Result<usize> {
        self.check(i64::from(k))?;
        Ok(self.shared.queue(k as usize).len())
    }

    pub fn total_occupancy(&self) -> usize {
        (0..self.shared.queues.len()).map(|k| self.shared.queue(k).len()).sum()
    }

    /// Largest queue length ever observed.
    pub fn max_occupancy(&self) -> usize {
        self.shared.max_occupancy.load(Ordering::Relaxed)
    }

    /// Suspend background refills. Requests keep queueing.
    pub fn pause(&self) {
        *self.shared.paused.lock().unwrap_or_else(|e| e.into_inner()) = true;
    }

    pub fn resume(&self) {
        *self.shared.paused.lock().unwrap_or_else(|e| e.into_inner()) = false;
        self.shared.resumed.notify_all();
    }

    /// Record a fingerprint of every consumed entry from now on.
    pub fn enable_audit(&self) {
        let mut audit = self.shared.audit.lock().unwrap_or_else(|e| e.into_inner());
        audit.get_or_insert_with(HashSet::new);
    }

    /// Entries handed out more than once since auditing began.
    pub fn audit_duplicates(&self) -> u64 {
        self.shared.reused.load(Ordering::Relaxed)
    }

    pub fn audited_count(&self) -> usize {
        let audit = self.shared.audit.lock().unwrap_or_else(|e| e.into_inner());
        audit.as_ref().map_or(0, HashSet::len)
    }

    /// Wait until every queue is full again. Returns false on timeout.
    pub fn wait_until_full(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let target = self.shared.queues.len() * self.params.queue_len;
        loop {
            if self.total_occupancy() >= target {
                return true;
            }
            if Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(1));
        }
    }

    /// Copies of the queued entries, queue by queue. For inspection only:
    /// the copies must not be used as fresh encryptions.
    pub fn entries(&self) -> Vec<Vec<Ciphertext>> {
        (0..self.shared.queues.len()).map(|k| self.shared.queue(k).iter().cloned().collect()).collect()
    }

    /// Snapshot of the current queue contents. Intended for a full,
    /// quiescent pool; entries restored from it must not also be used here.
    pub fn to_snapshot(&self) -> Vec<u8> {
        let guards: Vec<_> = (0..self.shared.queues.len()).map(|k| self.shared.queue(k)).collect();
        let header = self.header();
        let mut cts = Vec::new();
        for g in &guards {
            cts.extend(g.iter());
        }
        // Queues are stored back to back, followed by their lengths.
        let lens: Vec<u8> = guards.iter().flat_map(|g| (g.len() as u32).to_be_bytes()).collect();
        let mut out = snapshot::write(&header, cts.into_iter());
        out.extend_from_slice(&lens);
        out
    }

    /// Rebuild a pool from [`to_snapshot`](Self::to_snapshot) output.
    pub fn from_snapshot(pk: &PublicKey, params: &StreamPoolParams, mode: RngMode, bytes: &[u8]) -> Result<Self> {
        params.validate()?;
        let queues = params.coefficient_max as usize + 1;
        let tail = queues * 4;
        if bytes.len() < tail {
            return Err(Error::Serialization("truncated snapshot".into()));
        }
        let (body, lens) = bytes.split_at(bytes.len() - tail);
        let header = SnapshotHeader::new(SnapshotKind::Stream, pk, params.coefficient_max, params.queue_len as u64);
        let cts = snapshot::read(&header, body)?;
        let lens: Vec<usize> =
            lens.chunks_exact(4).map(|c| u32::from_be_bytes(c.try_into().unwrap()) as usize).collect();
        if lens.iter().sum::<usize>() != cts.len() || lens.iter().any(|&l| l > params.queue_len) {
            return Err(Error::Serialization("snapshot queue lengths are inconsistent".into()));
        }
        let mut it = cts.into_iter();
        let queues = lens.iter().map(|&l| it.by_ref().take(l).collect()).collect();
        let pool = Self::start(pk, params, queues, mode);
        // Top up anything the snapshot was missing.
        for k in 0..=params.coefficient_max {
            let missing = params.queue_len - pool.shared.queue(k as usize).len();
            for _ in 0..missing {
                if let Some(tx) = &pool.requests {
                    let _ = tx.try_send(k);
                }
            }
        }
        Ok(pool)
    }

    fn header(&self) -> SnapshotHeader {
        SnapshotHeader::new(
            SnapshotKind::Stream,
            &self.shared.pk,
            self.params.coefficient_max,
            self.params.queue_len as u64,
        )
    }
}

impl Drop for StreamCoeffPool {
    fn drop(&mut self) {
        self.shared.shutdown.store(true, Ordering::Release);
        self.requests.take();
        self.shared.resumed.notify_all();
        for h in self.producers.drain(..) {
            let _ = h.join();
        }
    }
}

impl std::fmt::Debug for StreamCoeffPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StreamCoeffPool")
            .field("params", &self.params)
            .field("occupancy", &self.total_occupancy())
            .field("stalls", &self.stall_count())
            .finish()
    }
}

fn refill_loop(shared: &Shared, rx: &Receiver<u32>, mut rng: HeRng) {
    while let Ok(k) = rx.recv() {
        if !shared.wait_resumed() {
            return;
        }
        let Ok(ct) = shared.pk.enc(&BigRational::from_integer(k.into()), &mut rng) else {
            continue;
        };
        let mut q = shared.queue(k as usize);
        if q.len() < shared.capacity {
            q.push_back(ct);
            shared.max_occupancy.fetch_max(q.len(), Ordering::Relaxed);
            shared.refills.fetch_add(1, Ordering::Relaxed);
        }
    }
}
