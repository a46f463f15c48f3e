//! Communicator abstraction: a serial communicator and an in-process
//! simulated multi-rank communicator.
//!
//! The simulated communicator runs every rank as its own thread inside one
//! process (see [`run_on_ranks`]). Ranks interact only through explicit
//! messages over per-pair ordered channels, so programs written against it
//! behave like message-passing programs without an external launcher.
//!
//! Collectives are blocking rendezvous points and must be called by every
//! rank of the communicator, in the same order. Reductions combine
//! contributions in fixed rank order on rank 0 and broadcast the result, so
//! repeated runs at a fixed rank count are bitwise reproducible and every
//! rank receives bitwise-identical results.

use crate::error::{Error, Result};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::time::Duration;

/// How long a blocked receive waits before giving up. A rank waiting this
/// long means the ranks have diverged (mismatched collective calls).
const RECV_TIMEOUT: Duration = Duration::from_secs(120);

/// Elementwise reduction applied by [`Comm::reduce_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Max,
    Min,
}

/// Scalar types that can travel through collectives.
pub trait CommScalar: Copy + PartialOrd + Send + Sync + 'static {
    const BYTES: usize;
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn write_to(self, out: &mut Vec<u8>);
    fn read_from(bytes: &[u8]) -> Self;
}

macro_rules! impl_comm_scalar {
    ($t:ty, $zero:expr) => {
        impl CommScalar for $t {
            const BYTES: usize = std::mem::size_of::<$t>();

            fn zero() -> Self {
                $zero
            }

            fn add(self, other: Self) -> Self {
                self + other
            }

            fn write_to(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn read_from(bytes: &[u8]) -> Self {
                <$t>::from_le_bytes(bytes.try_into().expect("scalar frame length"))
            }
        }
    };
}

impl_comm_scalar!(i32, 0);
impl_comm_scalar!(i64, 0);
impl_comm_scalar!(f64, 0.0);

fn reduce_pair<T: CommScalar>(op: ReduceOp, a: T, b: T) -> T {
    match op {
        ReduceOp::Sum => a.add(b),
        ReduceOp::Max => {
            if b > a {
                b
            } else {
                a
            }
        }
        ReduceOp::Min => {
            if b < a {
                b
            } else {
                a
            }
        }
    }
}

/// Per-rank endpoint of the simulated communicator.
struct SimRank {
    rank: i32,
    size: i32,
    /// senders[d] transmits to rank d; the matching receiver is
    /// `receivers[this rank]` on rank d, so order is preserved per pair.
    senders: Vec<Sender<Vec<u8>>>,
    /// receivers[s] yields messages sent by rank s.
    receivers: Vec<Mutex<Receiver<Vec<u8>>>>,
    /// Cross-rank messages sent by this rank (self-delivery not counted).
    sends: AtomicU64,
}

enum CommInner {
    Serial,
    Sim(Arc<SimRank>),
}

/// Handle to one rank's view of a communicator.
///
/// Cloning is cheap; clones refer to the same rank endpoint.
#[derive(Clone)]
pub struct Comm {
    inner: Arc<CommInner>,
}

impl std::fmt::Debug for Comm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &*self.inner {
            CommInner::Serial => write!(f, "Comm::Serial"),
            CommInner::Sim(r) => write!(f, "Comm::Sim(rank {} of {})", r.rank, r.size),
        }
    }
}

impl Comm {
    /// Single-rank communicator.
    pub fn serial() -> Comm {
        Comm {
            inner: Arc::new(CommInner::Serial),
        }
    }

    pub fn rank(&self) -> i32 {
        match &*self.inner {
            CommInner::Serial => 0,
            CommInner::Sim(r) => r.rank,
        }
    }

    pub fn size(&self) -> i32 {
        match &*self.inner {
            CommInner::Serial => 1,
            CommInner::Sim(r) => r.size,
        }
    }

    pub fn is_serial(&self) -> bool {
        matches!(&*self.inner, CommInner::Serial)
    }

    /// Number of cross-rank point-to-point messages this rank has sent.
    /// Serial communicators always report 0.
    pub fn point_to_point_sends(&self) -> u64 {
        match &*self.inner {
            CommInner::Serial => 0,
            CommInner::Sim(r) => r.sends.load(Ordering::Relaxed),
        }
    }

    pub(crate) fn send_bytes(&self, dst: i32, bytes: Vec<u8>) -> Result<()> {
        match &*self.inner {
            CommInner::Serial => {
                debug_assert_eq!(dst, 0);
                Err(Error::Contract(
                    "serial communicator has no point-to-point transport".into(),
                ))
            }
            CommInner::Sim(r) => {
                if dst < 0 || dst >= r.size {
                    return Err(Error::Contract(format!(
                        "destination rank {dst} out of range (size {})",
                        r.size
                    )));
                }
                if dst != r.rank {
                    r.sends.fetch_add(1, Ordering::Relaxed);
                }
                r.senders[dst as usize]
                    .send(bytes)
                    .map_err(|_| Error::Contract(format!("rank {dst} is gone")))
            }
        }
    }

    pub(crate) fn recv_bytes(&self, src: i32) -> Result<Vec<u8>> {
        match &*self.inner {
            CommInner::Serial => Err(Error::Contract(
                "serial communicator has no point-to-point transport".into(),
            )),
            CommInner::Sim(r) => {
                if src < 0 || src >= r.size {
                    return Err(Error::Contract(format!(
                        "source rank {src} out of range (size {})",
                        r.size
                    )));
                }
                let rx = r.receivers[src as usize]
                    .lock()
                    .map_err(|_| Error::Contract("receiver poisoned".into()))?;
                rx.recv_timeout(RECV_TIMEOUT).map_err(|e| match e {
                    RecvTimeoutError::Timeout => Error::Contract(format!(
                        "receive from rank {src} timed out; ranks have likely diverged"
                    )),
                    RecvTimeoutError::Disconnected => {
                        Error::Contract(format!("rank {src} is gone"))
                    }
                })
            }
        }
    }

    /// Replicates `root`'s array on every rank.
    ///
    /// All ranks must pass arrays of equal length; non-root contents are
    /// ignored.
    pub fn broadcast<T: CommScalar>(&self, values: &[T], root: i32) -> Result<Vec<T>> {
        if root < 0 || root >= self.size() {
            return Err(Error::Contract(format!(
                "broadcast root {root} out of range (size {})",
                self.size()
            )));
        }
        match &*self.inner {
            CommInner::Serial => Ok(values.to_vec()),
            CommInner::Sim(r) => {
                if r.rank == root {
                    let frame = encode_frame(values);
                    for dst in 0..r.size {
                        if dst != root {
                            self.send_bytes(dst, frame.clone())?;
                        }
                    }
                    Ok(values.to_vec())
                } else {
                    let frame = self.recv_bytes(root)?;
                    let got: Vec<T> = decode_frame(&frame);
                    if got.len() != values.len() {
                        return Err(Error::Contract(format!(
                            "broadcast length mismatch: root sent {}, this rank expected {}",
                            got.len(),
                            values.len()
                        )));
                    }
                    Ok(got)
                }
            }
        }
    }

    /// Concatenation of every rank's array, in rank order, delivered to all
    /// ranks. All ranks must contribute the same count.
    pub fn gather_all<T: CommScalar>(&self, local: &[T]) -> Result<Vec<T>> {
        match &*self.inner {
            CommInner::Serial => Ok(local.to_vec()),
            CommInner::Sim(_) => {
                let gathered = self.gather_to_root(local)?;
                let frame = if self.rank() == 0 {
                    let mut status = check_equal_lengths(&gathered, local.len());
                    if let Ok(all) = &mut status {
                        let flat: Vec<T> = all.iter().flatten().copied().collect();
                        Some(encode_frame(&flat))
                    } else {
                        None
                    }
                } else {
                    None
                };
                self.root_verdict(frame, "gather_all: per-rank counts differ")
            }
        }
    }

    /// Elementwise reduction over ranks; identical result on every rank.
    pub fn reduce_all<T: CommScalar>(&self, op: ReduceOp, values: &[T]) -> Result<Vec<T>> {
        match &*self.inner {
            CommInner::Serial => Ok(values.to_vec()),
            CommInner::Sim(_) => {
                let gathered = self.gather_to_root(values)?;
                let frame = if self.rank() == 0 {
                    match check_equal_lengths(&gathered, values.len()) {
                        Ok(all) => {
                            // Fold in rank order for reproducibility.
                            let mut acc = all[0].clone();
                            for contribution in &all[1..] {
                                for (a, &c) in acc.iter_mut().zip(contribution.iter()) {
                                    *a = reduce_pair(op, *a, c);
                                }
                            }
                            Some(encode_frame(&acc))
                        }
                        Err(_) => None,
                    }
                } else {
                    None
                };
                self.root_verdict(frame, "reduce_all: per-rank counts differ")
            }
        }
    }

    /// Inclusive elementwise prefix sum over ranks: rank r receives the sum
    /// of contributions from ranks 0..=r.
    pub fn scan_sum<T: CommScalar>(&self, values: &[T]) -> Result<Vec<T>> {
        match &*self.inner {
            CommInner::Serial => Ok(values.to_vec()),
            CommInner::Sim(r) => {
                let gathered = self.gather_to_root(values)?;
                if r.rank == 0 {
                    match check_equal_lengths(&gathered, values.len()) {
                        Ok(all) => {
                            let mut acc = all[0].clone();
                            // Rank 0 keeps the first prefix; send the rest out.
                            let mine = acc.clone();
                            for (dst, contribution) in all.iter().enumerate().skip(1) {
                                for (a, &c) in acc.iter_mut().zip(contribution.iter()) {
                                    *a = a.add(c);
                                }
                                let mut frame = vec![1u8];
                                frame.extend_from_slice(&encode_frame(&acc));
                                self.send_bytes(dst as i32, frame)?;
                            }
                            Ok(mine)
                        }
                        Err(_) => {
                            for dst in 1..r.size {
                                self.send_bytes(dst, vec![0u8])?;
                            }
                            Err(Error::Contract("scan_sum: per-rank counts differ".into()))
                        }
                    }
                } else {
                    let frame = self.recv_bytes(0)?;
                    if frame[0] == 0 {
                        return Err(Error::Contract("scan_sum: per-rank counts differ".into()));
                    }
                    Ok(decode_frame(&frame[1..]))
                }
            }
        }
    }

    /// Blocks until every rank reaches the barrier.
    pub fn barrier(&self) -> Result<()> {
        self.gather_all::<i32>(&[]).map(|_| ())
    }

    /// Every rank sends its array to rank 0; rank 0 returns all arrays in
    /// rank order, other ranks return an empty list.
    fn gather_to_root<T: CommScalar>(&self, values: &[T]) -> Result<Vec<Vec<T>>> {
        let (rank, size) = (self.rank(), self.size());
        if rank == 0 {
            let mut all = Vec::with_capacity(size as usize);
            all.push(values.to_vec());
            for src in 1..size {
                let frame = self.recv_bytes(src)?;
                all.push(decode_frame(&frame));
            }
            Ok(all)
        } else {
            self.send_bytes(0, encode_frame(values))?;
            Ok(Vec::new())
        }
    }

    /// Rank 0 distributes either a success frame (`Some`) or an error
    /// verdict (`None`) to every rank; all ranks agree on the outcome.
    fn root_verdict<T: CommScalar>(&self, frame: Option<Vec<u8>>, msg: &str) -> Result<Vec<T>> {
        let size = self.size();
        if self.rank() == 0 {
            match frame {
                Some(payload) => {
                    let mut out = vec![1u8];
                    out.extend_from_slice(&payload);
                    for dst in 1..size {
                        self.send_bytes(dst, out.clone())?;
                    }
                    Ok(decode_frame(&payload))
                }
                None => {
                    for dst in 1..size {
                        self.send_bytes(dst, vec![0u8])?;
                    }
                    Err(Error::Contract(msg.into()))
                }
            }
        } else {
            let got = self.recv_bytes(0)?;
            if got[0] == 0 {
                return Err(Error::Contract(msg.into()));
            }
            Ok(decode_frame(&got[1..]))
        }
    }

    /// Collective agreement on locally detected errors: returns the local
    /// error if any rank reported one, so all ranks abort together instead
    /// of leaving peers blocked in a later collective.
    pub(crate) fn agree_on_error(&self, local: Option<Error>) -> Result<()> {
        let flag = [if local.is_some() { 1i32 } else { 0i32 }];
        let any = self.reduce_all(ReduceOp::Max, &flag)?;
        match (any[0], local) {
            (0, _) => Ok(()),
            (_, Some(err)) => Err(err),
            (_, None) => Err(Error::Contract(
                "a peer rank failed the same collective call".into(),
            )),
        }
    }
}

fn encode_frame<T: CommScalar>(values: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + values.len() * T::BYTES);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        v.write_to(&mut out);
    }
    out
}

fn decode_frame<T: CommScalar>(bytes: &[u8]) -> Vec<T> {
    let len = u64::from_le_bytes(bytes[..8].try_into().expect("frame header")) as usize;
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let at = 8 + i * T::BYTES;
        out.push(T::read_from(&bytes[at..at + T::BYTES]));
    }
    out
}

fn check_equal_lengths<T: CommScalar>(
    gathered: &[Vec<T>],
    expected: usize,
) -> std::result::Result<Vec<Vec<T>>, ()> {
    if gathered.iter().all(|v| v.len() == expected) {
        Ok(gathered.to_vec())
    } else {
        Err(())
    }
}

/// Runs the same entry point once per rank on a simulated communicator and
/// returns each rank's result in rank order.
///
/// With `num_ranks == 1` the entry point runs on the calling thread with a
/// serial communicator. A panic on any rank propagates to the caller.
pub fn run_on_ranks<T, F>(num_ranks: i32, program: F) -> Vec<T>
where
    T: Send,
    F: Fn(Comm) -> T + Send + Sync,
{
    assert!(num_ranks >= 1, "rank count must be at least 1");
    if num_ranks == 1 {
        return vec![program(Comm::serial())];
    }
    let size = num_ranks as usize;
    // One ordered channel per (source, destination) pair: rank s keeps
    // txs[s][d], rank d keeps the matching receiver at rxs[d][s].
    let mut txs: Vec<Vec<Sender<Vec<u8>>>> = Vec::with_capacity(size);
    let mut rxs: Vec<Vec<Receiver<Vec<u8>>>> = (0..size).map(|_| Vec::new()).collect();
    for _src in 0..size {
        let mut tx_row = Vec::with_capacity(size);
        for rx_row in rxs.iter_mut() {
            let (tx, rx) = mpsc::channel();
            tx_row.push(tx);
            rx_row.push(rx);
        }
        txs.push(tx_row);
    }
    let mut comms = Vec::with_capacity(size);
    for (r, (tx_row, rx_row)) in txs.into_iter().zip(rxs).enumerate() {
        let receivers = rx_row.into_iter().map(Mutex::new).collect();
        comms.push(Comm {
            inner: Arc::new(CommInner::Sim(Arc::new(SimRank {
                rank: r as i32,
                size: num_ranks,
                senders: tx_row,
                receivers,
                sends: AtomicU64::new(0),
            }))),
        });
    }

    let program = &program;
    std::thread::scope(|scope| {
        let handles: Vec<_> = comms
            .into_iter()
            .map(|comm| scope.spawn(move || program(comm)))
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(r, h)| match h.join() {
                Ok(v) => v,
                Err(payload) => {
                    let msg = payload
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "unknown panic".into());
                    panic!("rank {r} panicked: {msg}")
                }
            })
            .collect()
    })
}
