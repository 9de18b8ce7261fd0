//! Application-layer traffic: service categories, constant-bit-rate packet
//! generation, and the waiting-time transmission gate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Service category. The discriminant is the state-space index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CategoryTag {
    VO = 0,
    VI = 1,
    BE = 2,
    HD = 3,
}

impl CategoryTag {
    pub const ALL: [CategoryTag; 4] = [CategoryTag::VO, CategoryTag::VI, CategoryTag::BE, CategoryTag::HD];
    /// Panel/report order.
    pub const REPORT_ORDER: [CategoryTag; 4] =
        [CategoryTag::VO, CategoryTag::VI, CategoryTag::HD, CategoryTag::BE];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryTag::VO => "VO",
            CategoryTag::VI => "VI",
            CategoryTag::BE => "BE",
            CategoryTag::HD => "HD",
        }
    }
}

impl fmt::Display for CategoryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoryTag {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "VO" => Ok(CategoryTag::VO),
            "VI" => Ok(CategoryTag::VI),
            "BE" => Ok(CategoryTag::BE),
            "HD" => Ok(CategoryTag::HD),
            other => Err(SimError::Config(format!("unknown category `{other}`"))),
        }
    }
}

/// Per-category traffic model, QoS thresholds and reward shaping magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub tag: CategoryTag,
    /// bits/s
    pub source_rate: f64,
    /// bits
    pub packet_size: u32,
    /// seconds
    pub max_latency: f64,
    /// bits/s
    pub min_rate: f64,
    /// seconds
    pub max_wait: f64,
    pub penalty_latency: f64,
    pub penalty_rate: f64,
    pub bonus_latency: f64,
    pub bonus_rate: f64,
}

impl Category {
    pub fn default_for(tag: CategoryTag) -> Self {
        let (source_rate, packet_size, max_latency, min_rate, max_wait, penalty) = match tag {
            CategoryTag::VO => (100e3, 1_600, 0.150, 100e3, 0.92, -2.0),
            CategoryTag::VI => (5e6, 8_000, 0.100, 1.25e6, 2.0, -2.0),
            CategoryTag::HD => (4e6, 8_000, 0.100, 1.25e6, 2.0, -2.0),
            CategoryTag::BE => (28e6, 8_000, 1.000, 1.0e6, 8.0, -10.0),
        };
        Self {
            tag,
            source_rate,
            packet_size,
            max_latency,
            min_rate,
            max_wait,
            penalty_latency: penalty,
            penalty_rate: penalty,
            bonus_latency: 2.0,
            bonus_rate: 2.0,
        }
    }

    /// Seconds between consecutive packets of a CBR source.
    pub fn packet_interval(&self) -> f64 {
        f64::from(self.packet_size) / self.source_rate
    }
}

/// The four categories, indexed by [`CategoryTag::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryTable(pub [Category; 4]);

impl Default for CategoryTable {
    fn default() -> Self {
        Self(CategoryTag::ALL.map(Category::default_for))
    }
}

impl CategoryTable {
    pub fn get(&self, tag: CategoryTag) -> &Category {
        &self.0[tag.index()]
    }

    pub fn get_mut(&mut self, tag: CategoryTag) -> &mut Category {
        &mut self.0[tag.index()]
    }
}

/// Uniform draw over the four categories.
pub fn assign_category<R: Rng + ?Sized>(rng: &mut R) -> CategoryTag {
    CategoryTag::ALL[rng.gen_range(0..4)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub vehicle_id: u32,
    pub category: CategoryTag,
    pub size: u32,
    pub generated_at: f64,
    pub received_at: Option<f64>,
}

impl Packet {
    pub fn latency(&self) -> Option<f64> {
        self.received_at.map(|r| r - self.generated_at)
    }
}

/// Globally unique packet id from the vehicle id and per-vehicle sequence.
pub fn packet_id(vehicle_id: u32, seq: u64) -> u64 {
    (u64::from(vehicle_id) << 32) | (seq & 0xffff_ffff)
}

/// Constant-bit-rate generator. Fractional packets carry over between calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbrGenerator {
    rate: f64,
    packet_size: u32,
    carry_bits: f64,
}

impl CbrGenerator {
    pub fn new(category: &Category) -> Self {
        Self {
            rate: category.source_rate,
            packet_size: category.packet_size,
            carry_bits: 0.0,
        }
    }

    /// Number of whole packets completed during the next `interval` seconds.
    pub fn generate(&mut self, interval: f64) -> u64 {
        let size = f64::from(self.packet_size);
        let bits = self.carry_bits + self.rate * interval;
        let packets = (bits / size + 1e-9).floor();
        self.carry_bits = (bits - packets * size).max(0.0);
        packets as u64
    }

    pub fn carry_bits(&self) -> f64 {
        self.carry_bits
    }
}

/// Closed-form CBR schedule anchored at a start time: packet `k` (0-based) is
/// complete at `start + (k + 1) * size / rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbrSchedule {
    pub start: f64,
    pub interval: f64,
}

impl CbrSchedule {
    pub fn new(start: f64, category: &Category) -> Self {
        Self {
            start,
            interval: category.packet_interval(),
        }
    }

    /// Packets completed by time `t`.
    pub fn generated_by(&self, t: f64) -> u64 {
        if t <= self.start {
            return 0;
        }
        ((t - self.start) / self.interval + 1e-9).floor() as u64
    }

    pub fn generated_at(&self, seq: u64) -> f64 {
        self.start + (seq + 1) as f64 * self.interval
    }
}

/// Application-layer gate on a vehicle's uplink (`x = 0` while closed).
///
/// The buffer holds a contiguous run of packet sequence numbers
/// `[buffer_start, buffer_end)`; packets are FIFO and only leave when open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionGate {
    pub vehicle_id: u32,
    pub waiting_until: f64,
    pub buffer_start: u64,
    pub buffer_end: u64,
}

impl TransmissionGate {
    pub fn new(vehicle_id: u32) -> Self {
        Self {
            vehicle_id,
            waiting_until: f64::NEG_INFINITY,
            buffer_start: 0,
            buffer_end: 0,
        }
    }

    pub fn is_open(&self, now: f64) -> bool {
        now >= self.waiting_until
    }

    /// `x_{v,t}`.
    pub fn x(&self, now: f64) -> u8 {
        u8::from(self.is_open(now))
    }

    pub fn buffered(&self) -> u64 {
        self.buffer_end - self.buffer_start
    }

    /// Closes the gate for `w` seconds starting at `now`.
    pub fn apply_waiting_time(mut self, w: f64, now: f64, category: &Category) -> Result<Self> {
        if !(w >= 0.0) || w > category.max_wait + 1e-12 {
            return Err(SimError::WaitTooLong {
                w,
                max: category.max_wait,
                category: category.tag.as_str(),
            });
        }
        self.waiting_until = now + w;
        Ok(self)
    }

    /// Appends a run of newly generated packets. Sequence numbers are
    /// contiguous per vehicle, so the buffer is always one range.
    pub fn push(&mut self, seqs: std::ops::Range<u64>) {
        if seqs.is_empty() {
            return;
        }
        if self.buffered() == 0 {
            self.buffer_start = seqs.start;
        }
        debug_assert_eq!(self.buffer_end.max(self.buffer_start), seqs.start);
        self.buffer_end = seqs.end;
    }

    /// Empties the buffer, returning the drained sequence range. Only valid
    /// while open.
    pub fn drain(&mut self, now: f64) -> Option<std::ops::Range<u64>> {
        if !self.is_open(now) {
            return None;
        }
        let r = self.buffer_start..self.buffer_end;
        self.buffer_start = self.buffer_end;
        Some(r)
    }
}
