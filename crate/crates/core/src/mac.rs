//! Shared-channel contention: a slotted CSMA/CA model with per-access-category
//! AIFS and binary exponential backoff, plus the baseline QoS configurations.
//!
//! All stations in coverage hear each other. Time is continuous, but backoff
//! countdown runs on a slot grid anchored at the end of the last busy period,
//! so simultaneous expiries land on the same slot and collide.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::traffic::{CategoryTag, Packet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "no-qos")]
    NoQos,
    #[serde(rename = "edca")]
    Edca,
    #[serde(rename = "edca-hd")]
    EdcaHd,
    #[serde(rename = "agent")]
    AgentOverNoQos,
    #[serde(rename = "agent-edca")]
    AgentOverEdca,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::NoQos,
        Mode::Edca,
        Mode::EdcaHd,
        Mode::AgentOverNoQos,
        Mode::AgentOverEdca,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NoQos => "no-qos",
            Mode::Edca => "edca",
            Mode::EdcaHd => "edca-hd",
            Mode::AgentOverNoQos => "agent",
            Mode::AgentOverEdca => "agent-edca",
        }
    }

    pub fn uses_agent(self) -> bool {
        matches!(self, Mode::AgentOverNoQos | Mode::AgentOverEdca)
    }

    /// The MAC configuration underneath this mode.
    pub fn mac_mode(self) -> Mode {
        match self {
            Mode::AgentOverNoQos => Mode::NoQos,
            Mode::AgentOverEdca => Mode::Edca,
            m => m,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-qos" | "noqos" => Ok(Mode::NoQos),
            "edca" => Ok(Mode::Edca),
            "edca-hd" => Ok(Mode::EdcaHd),
            "agent" | "agent-no-qos" => Ok(Mode::AgentOverNoQos),
            "agent-edca" => Ok(Mode::AgentOverEdca),
            other => Err(SimError::Config(format!(
                "unknown mode `{other}` (expected no-qos, edca, edca-hd, agent, agent-edca)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthPreset {
    /// 802.11p, 5.9 GHz, 10 MHz channel.
    P5_9Ghz10Mhz,
    /// 802.11ac-like rates. Only slot time and PHY rate change.
    Ac,
}

impl BandwidthPreset {
    pub fn slot_time(self) -> f64 {
        match self {
            BandwidthPreset::P5_9Ghz10Mhz => 13e-6,
            BandwidthPreset::Ac => 9e-6,
        }
    }

    pub fn phy_rate(self) -> f64 {
        match self {
            BandwidthPreset::P5_9Ghz10Mhz => 6e6,
            BandwidthPreset::Ac => 54e6,
        }
    }
}

impl FromStr for BandwidthPreset {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" | "p-5.9ghz-10mhz" => Ok(BandwidthPreset::P5_9Ghz10Mhz),
            "ac" | "ac-preset" => Ok(BandwidthPreset::Ac),
            other => Err(SimError::Config(format!("unknown channel preset `{other}`"))),
        }
    }
}

/// Contention parameters of one access category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCategory {
    pub name: String,
    pub aifsn: u32,
    pub cw_min: u32,
    pub cw_max: u32,
}

impl AccessCategory {
    pub fn new(name: &str, aifsn: u32, cw_min: u32, cw_max: u32) -> Self {
        Self {
            name: name.to_owned(),
            aifsn,
            cw_min,
            cw_max,
        }
    }

    /// Contention window after one more collision: `2(cw+1) - 1`, capped.
    pub fn grow(&self, cw: u32) -> u32 {
        (cw.saturating_add(1).saturating_mul(2) - 1).min(self.cw_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub mode: Mode,
    pub slot_time: f64,
    pub phy_rate: f64,
    pub bandwidth_preset: BandwidthPreset,
    pub access_categories: Vec<AccessCategory>,
    pub retry_limit: u32,
    /// Per-station MAC queue capacity in frames (drop-tail).
    pub queue_capacity: usize,
}

pub const DEFAULT_RETRY_LIMIT: u32 = 7;
pub const DEFAULT_QUEUE_CAPACITY: usize = 8;

/// Installs the access-category set for `mode`. Agent modes reuse the MAC of
/// the baseline they run over.
pub fn configure_mode(mode: Mode, preset: BandwidthPreset) -> ChannelConfig {
    let access_categories = match mode.mac_mode() {
        Mode::NoQos => vec![AccessCategory::new("DCF", 2, 15, 1023)],
        Mode::EdcaHd => vec![
            AccessCategory::new("VO", 2, 3, 7),
            AccessCategory::new("VI", 3, 3, 7),
            AccessCategory::new("HD", 4, 7, 15),
            AccessCategory::new("BE", 6, 15, 1023),
            AccessCategory::new("BK", 9, 15, 1023),
        ],
        _ => vec![
            AccessCategory::new("VO", 2, 3, 7),
            AccessCategory::new("VI", 3, 3, 7),
            AccessCategory::new("BE", 6, 15, 1023),
            AccessCategory::new("BK", 9, 15, 1023),
        ],
    };
    ChannelConfig {
        mode,
        slot_time: preset.slot_time(),
        phy_rate: preset.phy_rate(),
        bandwidth_preset: preset,
        access_categories,
        retry_limit: DEFAULT_RETRY_LIMIT,
        queue_capacity: DEFAULT_QUEUE_CAPACITY,
    }
}

impl ChannelConfig {
    /// Index of the access category that carries `category` traffic.
    pub fn ac_for(&self, category: CategoryTag) -> usize {
        let name = match (self.mode.mac_mode(), category) {
            (Mode::NoQos, _) => return 0,
            (Mode::EdcaHd, CategoryTag::HD) => "HD",
            (_, CategoryTag::HD) => "BE",
            (_, c) => c.as_str(),
        };
        self.access_categories
            .iter()
            .position(|ac| ac.name == name)
            .unwrap_or(0)
    }

    pub fn airtime(&self, bits: u32) -> f64 {
        f64::from(bits) / self.phy_rate
    }

    pub fn validate(&self) -> Result<()> {
        if self.access_categories.is_empty() {
            return Err(SimError::Config("no access categories".into()));
        }
        for ac in &self.access_categories {
            if ac.cw_min > ac.cw_max {
                return Err(SimError::Config(format!("{}: cw_min > cw_max", ac.name)));
            }
        }
        if !(self.slot_time > 0.0 && self.phy_rate > 0.0) {
            return Err(SimError::Config("slot_time and phy_rate must be positive".into()));
        }
        if self.queue_capacity == 0 {
            return Err(SimError::Config("queue_capacity must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacFrame {
    pub packet: Packet,
    pub retries: u32,
    pub collisions: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacEventKind {
    TxStart,
    TxSuccess,
    Collision,
    Drop,
}

impl MacEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MacEventKind::TxStart => "tx_start",
            MacEventKind::TxSuccess => "tx_success",
            MacEventKind::Collision => "collision",
            MacEventKind::Drop => "drop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacEvent {
    pub t: f64,
    pub kind: MacEventKind,
    pub vehicle_id: u32,
    pub ac: usize,
    pub packet_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceptionRecord {
    pub packet: Packet,
    pub t_received: f64,
    pub retries: u32,
    pub collided_count: u32,
}

/// Outcome of one channel step.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct StepOutcome {
    pub received: Vec<ReceptionRecord>,
    /// Frames abandoned after exceeding the retry limit.
    pub dropped: Vec<MacFrame>,
    pub events: Vec<MacEvent>,
    /// Stations whose queue became empty during this step.
    pub emptied: Vec<u32>,
}

#[derive(Debug, Clone)]
struct Station {
    ac: usize,
    queue: VecDeque<MacFrame>,
    cw: u32,
    backoff: u32,
    /// Grid slot at which this station's AIFS countdown began.
    start_slot: u64,
}

impl Station {
    fn tx_slot(&self, aifsn: u32) -> u64 {
        self.start_slot + u64::from(aifsn) + u64::from(self.backoff)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelStats {
    pub successes: u64,
    pub collisions: u64,
    pub retry_drops: u64,
    pub busy_time: f64,
}

/// One shared channel instance.
#[derive(Debug, Clone)]
pub struct Channel {
    config: ChannelConfig,
    stations: BTreeMap<u32, Station>,
    /// Start of the current idle slot grid.
    origin: f64,
    busy_until: Option<f64>,
    in_flight: Vec<u32>,
    collided: bool,
    stats: ChannelStats,
}

impl Channel {
    pub fn new(config: ChannelConfig) -> Self {
        Self {
            config,
            stations: BTreeMap::new(),
            origin: 0.0,
            busy_until: None,
            in_flight: Vec::new(),
            collided: false,
            stats: ChannelStats::default(),
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn stats(&self) -> &ChannelStats {
        &self.stats
    }

    pub fn queue_len(&self, vehicle_id: u32) -> usize {
        self.stations.get(&vehicle_id).map_or(0, |s| s.queue.len())
    }

    pub fn queue_space(&self, vehicle_id: u32) -> usize {
        self.config.queue_capacity - self.queue_len(vehicle_id)
    }

    pub fn contenders(&self) -> usize {
        self.stations.values().filter(|s| !s.queue.is_empty()).count()
    }

    fn has_contenders(&self) -> bool {
        self.stations.values().any(|s| !s.queue.is_empty())
    }

    fn slot_of(&self, t: f64) -> u64 {
        let x = (t - self.origin) / self.config.slot_time;
        (x - 1e-9).ceil().max(0.0) as u64
    }

    /// Queues a frame for `packet.vehicle_id`. Returns the packet back if the
    /// station's queue is full.
    pub fn enqueue<R: Rng + ?Sized>(
        &mut self,
        now: f64,
        packet: Packet,
        rng: &mut R,
    ) -> std::result::Result<(), Packet> {
        let ac_idx = self.config.ac_for(packet.category);
        let cw_min = self.config.access_categories[ac_idx].cw_min;
        if self.busy_until.is_none() && !self.has_contenders() {
            // Idle medium with nobody counting: the slot grid starts here.
            self.origin = now;
        }
        let start_slot = if self.busy_until.is_some() { 0 } else { self.slot_of(now) };
        let capacity = self.config.queue_capacity;
        let station = self.stations.entry(packet.vehicle_id).or_insert_with(|| Station {
            ac: ac_idx,
            queue: VecDeque::new(),
            cw: cw_min,
            backoff: 0,
            start_slot: 0,
        });
        if station.queue.len() >= capacity {
            return Err(packet);
        }
        if station.queue.is_empty() && !self.in_flight.contains(&packet.vehicle_id) {
            station.backoff = rng.gen_range(0..=station.cw);
            station.start_slot = start_slot;
        }
        station.queue.push_back(MacFrame {
            packet,
            retries: 0,
            collisions: 0,
        });
        Ok(())
    }

    /// Time of the next channel state change, if any.
    pub fn next_event_time(&self) -> Option<f64> {
        if let Some(t) = self.busy_until {
            return Some(t);
        }
        self.next_tx_slot()
            .map(|k| self.origin + k as f64 * self.config.slot_time)
    }

    fn next_tx_slot(&self) -> Option<u64> {
        self.stations
            .values()
            .filter(|s| !s.queue.is_empty())
            .map(|s| s.tx_slot(self.config.access_categories[s.ac].aifsn))
            .min()
    }

    /// Processes the channel event due at `now` (as returned by
    /// [`next_event_time`](Self::next_event_time)).
    pub fn contend_step<R: Rng + ?Sized>(&mut self, now: f64, rng: &mut R) -> StepOutcome {
        let mut out = StepOutcome::default();
        match self.busy_until {
            Some(end) if now >= end - 1e-12 => self.finish_transmission(end, rng, &mut out),
            Some(_) => {}
            None => self.start_transmission(now, &mut out),
        }
        out
    }

    fn start_transmission(&mut self, now: f64, out: &mut StepOutcome) {
        let Some(k) = self.next_tx_slot() else {
            return;
        };
        let acs = &self.config.access_categories;
        let mut winners = Vec::new();
        let mut max_bits = 0u32;
        for (&vid, st) in self.stations.iter_mut() {
            if st.queue.is_empty() {
                continue;
            }
            let aifsn = acs[st.ac].aifsn;
            if st.tx_slot(aifsn) == k {
                winners.push(vid);
                let head = st.queue.front().expect("non-empty");
                max_bits = max_bits.max(head.packet.size);
                out.events.push(MacEvent {
                    t: now,
                    kind: MacEventKind::TxStart,
                    vehicle_id: vid,
                    ac: st.ac,
                    packet_id: head.packet.id,
                });
            } else {
                let elapsed = k.saturating_sub(st.start_slot);
                let consumed = elapsed.saturating_sub(u64::from(aifsn));
                st.backoff -= consumed.min(u64::from(st.backoff)) as u32;
            }
        }
        let airtime = self.config.airtime(max_bits);
        self.collided = winners.len() > 1;
        self.in_flight = winners;
        self.busy_until = Some(now + airtime);
        self.stats.busy_time += airtime;
    }

    fn finish_transmission<R: Rng + ?Sized>(&mut self, end: f64, rng: &mut R, out: &mut StepOutcome) {
        let in_flight = std::mem::take(&mut self.in_flight);
        let collided = self.collided;
        if collided {
            self.stats.collisions += 1;
        }
        for vid in in_flight {
            let Some(st) = self.stations.get_mut(&vid) else {
                continue;
            };
            let ac = &self.config.access_categories[st.ac];
            if collided {
                let frame = st.queue.front_mut().expect("in-flight frame");
                frame.retries += 1;
                frame.collisions += 1;
                out.events.push(MacEvent {
                    t: end,
                    kind: MacEventKind::Collision,
                    vehicle_id: vid,
                    ac: st.ac,
                    packet_id: frame.packet.id,
                });
                if frame.retries > self.config.retry_limit {
                    let frame = st.queue.pop_front().expect("in-flight frame");
                    out.events.push(MacEvent {
                        t: end,
                        kind: MacEventKind::Drop,
                        vehicle_id: vid,
                        ac: st.ac,
                        packet_id: frame.packet.id,
                    });
                    out.dropped.push(frame);
                    self.stats.retry_drops += 1;
                    st.cw = ac.cw_min;
                } else {
                    st.cw = ac.grow(st.cw);
                }
            } else {
                let frame = st.queue.pop_front().expect("in-flight frame");
                let mut packet = frame.packet;
                packet.received_at = Some(end);
                out.events.push(MacEvent {
                    t: end,
                    kind: MacEventKind::TxSuccess,
                    vehicle_id: vid,
                    ac: st.ac,
                    packet_id: packet.id,
                });
                out.received.push(ReceptionRecord {
                    packet,
                    t_received: end,
                    retries: frame.retries,
                    collided_count: frame.collisions,
                });
                self.stats.successes += 1;
                st.cw = ac.cw_min;
            }
            if st.queue.is_empty() {
                out.emptied.push(vid);
            } else {
                st.backoff = rng.gen_range(0..=st.cw);
            }
        }
        self.busy_until = None;
        self.origin = end;
        for st in self.stations.values_mut() {
            st.start_slot = 0;
        }
        self.stations.retain(|_, s| !s.queue.is_empty());
    }

    /// Removes a station, returning every frame it still held (including one
    /// currently on the air, which will not be delivered).
    pub fn remove_station(&mut self, vehicle_id: u32) -> Vec<MacFrame> {
        self.in_flight.retain(|&v| v != vehicle_id);
        self.stations
            .remove(&vehicle_id)
            .map(|s| s.queue.into_iter().collect())
            .unwrap_or_default()
    }

    /// Stations transmitting in the current busy period.
    pub fn in_flight(&self) -> &[u32] {
        &self.in_flight
    }

    pub fn is_busy(&self) -> bool {
        self.busy_until.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RngStream;
    use rand::rngs::mock::StepRng;

    fn packet(vid: u32, id: u64, category: CategoryTag, size: u32, t: f64) -> Packet {
        Packet {
            id,
            vehicle_id: vid,
            category,
            size,
            generated_at: t,
            received_at: None,
        }
    }

    fn run_until_idle<R: Rng>(ch: &mut Channel, rng: &mut R) -> Vec<ReceptionRecord> {
        let mut got = Vec::new();
        while let Some(t) = ch.next_event_time() {
            got.extend(ch.contend_step(t, rng).received);
        }
        got
    }

    #[test]
    fn mode_ac_counts() {
        let p = BandwidthPreset::P5_9Ghz10Mhz;
        assert_eq!(configure_mode("edca".parse().unwrap(), p).access_categories.len(), 4);
        assert_eq!(configure_mode("edca-hd".parse().unwrap(), p).access_categories.len(), 5);
        assert_eq!(configure_mode("no-qos".parse().unwrap(), p).access_categories.len(), 1);
        assert!("edcf".parse::<Mode>().is_err());
    }

    #[test]
    fn category_to_queue_mapping() {
        let p = BandwidthPreset::P5_9Ghz10Mhz;
        let edca = configure_mode(Mode::Edca, p);
        assert_eq!(edca.access_categories[edca.ac_for(CategoryTag::HD)].name, "BE");
        let edca_hd = configure_mode(Mode::EdcaHd, p);
        assert_eq!(edca_hd.access_categories[edca_hd.ac_for(CategoryTag::HD)].name, "HD");
        let none = configure_mode(Mode::NoQos, p);
        for c in CategoryTag::ALL {
            assert_eq!(none.ac_for(c), 0);
        }
        let agent = configure_mode(Mode::AgentOverEdca, p);
        assert_eq!(agent.access_categories.len(), 4);
    }

    #[test]
    fn single_station_closed_form() {
        let cfg = configure_mode(Mode::Edca, BandwidthPreset::P5_9Ghz10Mhz);
        let mut ch = Channel::new(cfg.clone());
        // StepRng yielding zero always draws backoff 0.
        let mut rng = StepRng::new(0, 0);
        ch.enqueue(2.0, packet(1, 1, CategoryTag::VI, 8_000, 2.0), &mut rng).unwrap();
        let got = run_until_idle(&mut ch, &mut rng);
        assert_eq!(got.len(), 1);
        let expected = 2.0 + 3.0 * 13e-6 + 8_000.0 / 6e6;
        assert!((got[0].t_received - expected).abs() < 1e-12);
    }

    #[test]
    fn single_station_mean_latency_matches_closed_form() {
        // One VO frame at a time on an empty channel: E[latency] =
        // AIFS + E[U{0..=3}] slots + airtime.
        let cfg = configure_mode(Mode::Edca, BandwidthPreset::P5_9Ghz10Mhz);
        let mut rng = RngStream::new("mac", 5);
        let n = 20_000;
        let mut total = 0.0;
        for i in 0..n {
            let mut ch = Channel::new(cfg.clone());
            ch.enqueue(0.0, packet(1, i, CategoryTag::VO, 1_600, 0.0), &mut rng).unwrap();
            total += run_until_idle(&mut ch, &mut rng)[0].t_received;
        }
        let slot = 13e-6;
        let expected = 2.0 * slot + 1.5 * slot + 1_600.0 / 6e6;
        // sd of the backoff term is ~1.12 slots; 5 sigma on the mean
        let tol = 5.0 * 1.12 * slot / (n as f64).sqrt();
        assert!((total / n as f64 - expected).abs() < tol);
    }

    #[test]
    fn identical_draws_collide_and_double_cw() {
        let cfg = configure_mode(Mode::NoQos, BandwidthPreset::P5_9Ghz10Mhz);
        let mut ch = Channel::new(cfg);
        let mut rng = StepRng::new(0, 0);
        ch.enqueue(0.0, packet(1, 1, CategoryTag::HD, 8_000, 0.0), &mut rng).unwrap();
        ch.enqueue(0.0, packet(2, 2, CategoryTag::HD, 8_000, 0.0), &mut rng).unwrap();
        let t = ch.next_event_time().unwrap();
        let start = ch.contend_step(t, &mut rng);
        assert_eq!(start.events.len(), 2);
        let t = ch.next_event_time().unwrap();
        let end = ch.contend_step(t, &mut rng);
        assert!(end.received.is_empty());
        assert_eq!(
            end.events.iter().filter(|e| e.kind == MacEventKind::Collision).count(),
            2
        );
        assert!(ch.stations.values().all(|s| s.cw == 31));
    }

    #[test]
    fn retry_limit_drops_frame() {
        let cfg = configure_mode(Mode::NoQos, BandwidthPreset::P5_9Ghz10Mhz);
        let limit = cfg.retry_limit;
        let mut ch = Channel::new(cfg);
        let mut rng = StepRng::new(0, 0);
        ch.enqueue(0.0, packet(1, 1, CategoryTag::BE, 8_000, 0.0), &mut rng).unwrap();
        ch.enqueue(0.0, packet(2, 2, CategoryTag::BE, 8_000, 0.0), &mut rng).unwrap();
        let mut dropped = 0;
        let mut collisions = 0;
        while let Some(t) = ch.next_event_time() {
            let o = ch.contend_step(t, &mut rng);
            dropped += o.dropped.len();
            collisions += o.events.iter().filter(|e| e.kind == MacEventKind::Collision).count();
        }
        assert_eq!(dropped, 2);
        assert_eq!(collisions as u32, 2 * (limit + 1));
        assert_eq!(ch.stats().retry_drops, 2);
    }

    #[test]
    fn drop_tail_on_full_queue() {
        let mut cfg = configure_mode(Mode::NoQos, BandwidthPreset::P5_9Ghz10Mhz);
        cfg.queue_capacity = 2;
        let mut ch = Channel::new(cfg);
        let mut rng = StepRng::new(0, 0);
        for i in 0..2 {
            ch.enqueue(0.0, packet(1, i, CategoryTag::BE, 8_000, 0.0), &mut rng).unwrap();
        }
        assert!(ch.enqueue(0.0, packet(1, 9, CategoryTag::BE, 8_000, 0.0), &mut rng).is_err());
    }

    #[test]
    fn one_success_per_busy_period() {
        let cfg = configure_mode(Mode::Edca, BandwidthPreset::P5_9Ghz10Mhz);
        let mut ch = Channel::new(cfg);
        let mut rng = RngStream::new("mac", 1);
        for v in 0..10u32 {
            for i in 0..20u64 {
                let c = CategoryTag::ALL[(v % 4) as usize];
                let _ = ch.enqueue(0.0, packet(v, u64::from(v) * 100 + i, c, 8_000, 0.0), &mut rng);
            }
        }
        let mut last_end = 0.0;
        while let Some(t) = ch.next_event_time() {
            assert!(t >= last_end);
            let o = ch.contend_step(t, &mut rng);
            assert!(o.received.len() <= 1);
            last_end = t;
        }
        assert!(ch.stats().busy_time <= last_end);
    }

    #[test]
    fn removed_station_frames_returned() {
        let cfg = configure_mode(Mode::NoQos, BandwidthPreset::P5_9Ghz10Mhz);
        let mut ch = Channel::new(cfg);
        let mut rng = StepRng::new(0, 0);
        for i in 0..3 {
            ch.enqueue(0.0, packet(4, i, CategoryTag::VO, 1_600, 0.0), &mut rng).unwrap();
        }
        let t = ch.next_event_time().unwrap();
        ch.contend_step(t, &mut rng);
        assert_eq!(ch.remove_station(4).len(), 3);
        let t = ch.next_event_time().unwrap();
        assert!(ch.contend_step(t, &mut rng).received.is_empty());
        assert!(ch.next_event_time().is_none());
    }

    #[test]
    fn cw_growth_is_capped() {
        let ac = AccessCategory::new("HD", 4, 7, 15);
        assert_eq!(ac.grow(7), 15);
        assert_eq!(ac.grow(15), 15);
        let dcf = AccessCategory::new("DCF", 2, 15, 1023);
        assert_eq!(dcf.grow(511), 1023);
    }
}
