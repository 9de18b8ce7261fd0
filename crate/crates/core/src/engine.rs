//! Deterministic discrete-event core: a clock, a cancellable priority event
//! queue, and named random substreams.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

/// Simulation clock for one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub now: f64,
    pub episode_index: u32,
    pub episode_length: f64,
}

/// Opaque handle returned by [`EventQueue::schedule`], used for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Scheduled<E> {
    at: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // BinaryHeap is a max-heap: invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Priority queue of timed events. Ties at equal time dispatch in insertion order.
pub struct EventQueue<E> {
    heap: BinaryHeap<Scheduled<E>>,
    clock: SimClock,
    next_seq: u64,
    cancelled: HashSet<u64>,
    dispatched: u64,
}

impl<E> EventQueue<E> {
    pub fn new(episode_index: u32, episode_length: f64) -> Self {
        Self {
            heap: BinaryHeap::new(),
            clock: SimClock {
                now: 0.0,
                episode_index,
                episode_length,
            },
            next_seq: 0,
            cancelled: HashSet::new(),
            dispatched: 0,
        }
    }

    pub fn now(&self) -> f64 {
        self.clock.now
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    /// Number of events popped so far (cancelled ones excluded).
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn schedule(&mut self, event: E, at: f64) -> Result<EventHandle, SimError> {
        if !(at >= self.clock.now) {
            return Err(SimError::ScheduleInPast {
                at,
                now: self.clock.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled { at, seq, event });
        Ok(EventHandle(seq))
    }

    /// Cancels a pending event. Returns false if it was already dispatched or cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq {
            return false;
        }
        if !self.heap.iter().any(|s| s.seq == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0)
    }

    /// Cancels without checking whether the event is still pending. O(1).
    ///
    /// Callers must only pass handles they know to be undispatched.
    pub fn cancel_pending(&mut self, handle: EventHandle) {
        self.cancelled.insert(handle.0);
    }

    /// Pops the next event whose time is `<= horizon`, advancing the clock.
    pub fn pop_until(&mut self, horizon: f64) -> Option<(f64, E)> {
        loop {
            let top = self.heap.peek()?;
            if top.at > horizon {
                return None;
            }
            let Scheduled { at, seq, event } = self.heap.pop()?;
            if self.cancelled.remove(&seq) {
                continue;
            }
            debug_assert!(at >= self.clock.now);
            self.clock.now = at;
            self.dispatched += 1;
            return Some((at, event));
        }
    }

    /// Moves the clock forward without dispatching (used to close an episode).
    pub fn advance_to(&mut self, t: f64) {
        if t > self.clock.now {
            self.clock.now = t;
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A named, reproducible random stream. Identical `(label, seed)` pairs yield
/// identical sequences in any process.
#[derive(Debug, Clone)]
pub struct RngStream {
    label: String,
    seed: u64,
    counter: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(label: &str, seed: u64) -> Self {
        let key = mix64(seed ^ mix64(fnv1a(label.as_bytes())));
        Self {
            label: label.to_owned(),
            seed,
            counter: 0,
            inner: ChaCha8Rng::seed_from_u64(key),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32/64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.counter += 1;
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.counter += 1;
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.counter += 1;
        self.inner.try_fill_bytes(dest)
    }
}

/// Registry of labelled substreams derived from one master seed.
#[derive(Debug, Clone)]
pub struct RngStreams {
    seed: u64,
    streams: HashMap<String, RngStream>,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            streams: HashMap::new(),
        }
    }

    /// Seed for episode `index` of a run with `master_seed`.
    pub fn episode_seed(master_seed: u64, index: u32) -> u64 {
        mix64(master_seed ^ mix64(u64::from(index) + 1))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Returns the stream for `label`, creating it on first use. Later calls
    /// continue where the previous caller stopped.
    pub fn stream(&mut self, label: &str) -> &mut RngStream {
        let seed = self.seed;
        self.streams
            .entry(label.to_owned())
            .or_insert_with(|| RngStream::new(label, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn dispatches_at_scheduled_time() {
        let mut q = EventQueue::new(0, 10.0);
        q.schedule("a", 1.0).unwrap();
        q.pop_until(10.0).unwrap();
        q.schedule("e", 5.0).unwrap();
        assert_eq!(q.pop_until(10.0), Some((5.0, "e")));
        assert_eq!(q.now(), 5.0);
    }

    #[test]
    fn rejects_past_schedule() {
        let mut q = EventQueue::new(0, 10.0);
        q.schedule((), 1.0).unwrap();
        q.pop_until(10.0);
        let err = q.schedule((), 0.9).unwrap_err();
        assert!(matches!(err, SimError::ScheduleInPast { .. }));
    }

    #[test]
    fn ties_follow_insertion_order() {
        let mut q = EventQueue::new(0, 10.0);
        for i in 0..5 {
            q.schedule(i, 5.0).unwrap();
        }
        let order: Vec<_> = std::iter::from_fn(|| q.pop_until(10.0).map(|e| e.1)).collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn cancelled_events_are_skipped() {
        let mut q = EventQueue::new(0, 10.0);
        let h = q.schedule("x", 2.0).unwrap();
        q.schedule("y", 3.0).unwrap();
        assert!(q.cancel(h));
        assert!(!q.cancel(h));
        assert_eq!(q.pop_until(10.0), Some((3.0, "y")));
        assert_eq!(q.dispatched(), 1);
    }

    #[test]
    fn horizon_stops_dispatch() {
        let mut q = EventQueue::new(0, 10.0);
        q.schedule("late", 11.0).unwrap();
        assert!(q.pop_until(10.0).is_none());
        assert_eq!(q.pending(), 1);
    }

    #[test]
    fn streams_are_reproducible_and_label_separated() {
        let mut a = RngStream::new("mobility", 7);
        let mut b = RngStream::new("mobility", 7);
        let mut c = RngStream::new("traffic", 7);
        let xa: Vec<u64> = (0..8).map(|_| a.gen()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.gen()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.gen()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_eq!(a.counter(), 8);
    }

    #[test]
    fn first_draw_golden_value() {
        // Frozen from a reference run; guards against accidental changes to
        // the seeding scheme, which would silently invalidate stored results.
        let mut s = RngStream::new("mobility", 7);
        assert_eq!(s.next_u64(), GOLDEN_MOBILITY_7);
    }

    const GOLDEN_MOBILITY_7: u64 = 7_739_834_334_475_513_274;

    #[test]
    fn registry_continues_stream_state() {
        let mut reg = RngStreams::new(42);
        let first = reg.stream("agent").next_u64();
        let second = reg.stream("agent").next_u64();
        let mut fresh = RngStream::new("agent", 42);
        assert_eq!(fresh.next_u64(), first);
        assert_eq!(fresh.next_u64(), second);
    }
}
