//! Scenario orchestration: wires mobility, traffic, the channel and the agent
//! onto the event queue and runs episodes.
//!
//! Packets are generated lazily. Each vehicle is a CBR source whose packet
//! `k` completes at a closed-form time, and the simulator only materializes
//! packets when they move between the application buffer, the MAC queue and
//! the log. A vehicle's MAC queue can only shrink when one of its frames
//! finishes on the air, so it is enough to catch a vehicle up right before
//! that happens (and at the exact arrival time when its queue is empty).

use std::collections::BTreeMap;
use std::ops::Range;

use crate::agent::{compute_reward, ActiveUserRegistry, Agent, Observer, QTable};
use crate::config::ScenarioConfig;
use crate::engine::{EventHandle, EventQueue, RngStreams};
use crate::error::{Result, SimError};
use crate::logs::{DecisionRecord, PacketRecord, RunSink, TrajectorySample};
use crate::mac::{Channel, ChannelConfig, MacFrame, ReceptionRecord};
use crate::metrics::{summarize, KpiWindow, ReportMeta, RunLog, RunReport, VehicleLog};
use crate::mobility::{spawn_times, Trajectory};
use crate::traffic::{assign_category, packet_id, CategoryTag, CbrSchedule, Packet, TransmissionGate};

const MOBILITY: &str = "mobility";
const TRAFFIC: &str = "traffic";
const AGENT: &str = "agent";
const MAC: &str = "mac";

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Spawn(u64),
    CoverageEnter(u32),
    CoverageExit(u32),
    Exit(u32),
    GateOpen(u32),
    BurstEnd(u32),
    Arrival(u32),
    Channel,
    RegistryTick,
    KpiTick,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeSummary {
    pub episode_index: u32,
    pub end_time: f64,
    pub events: u64,
    pub vehicles: u32,
    pub packets_generated: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
    pub decisions: u64,
}

#[derive(Debug)]
struct Vehicle {
    category: CategoryTag,
    trajectory: Trajectory,
    exit_time: f64,
    schedule: CbrSchedule,
    gate: TransmissionGate,
    /// Packets `[0, synced)` have left the source.
    synced: u64,
    in_coverage: bool,
    burst: Option<EventHandle>,
    arrival: Option<EventHandle>,
    /// One past the last buffered packet handed to the MAC at gate opening.
    drain_end: Option<u64>,
    delivered_bits: u64,
}

/// A run: one scenario, possibly many episodes sharing one Q-table.
pub struct Simulation {
    config: ScenarioConfig,
    channel_config: ChannelConfig,
    agent: Option<Agent>,
    observer: Observer,
    log: RunLog,
    next_vehicle_id: u32,
    episodes_run: u32,
}

impl Simulation {
    /// `table` seeds the agent (agent modes only); `learning` enables updates.
    pub fn new(config: ScenarioConfig, table: Option<QTable>, learning: bool) -> Result<Self> {
        config.validate()?;
        let channel_config = config.channel();
        let agent = config
            .mode
            .uses_agent()
            .then(|| Agent::new(table.unwrap_or_default(), config.reward, learning));
        let observer = Observer {
            rsu: config.tile.rsu_position(),
            coverage_diameter: config.coverage_diameter,
            stationary_cap: config.stationary_sojourn_cap,
            n_max: config.n_max,
        };
        Ok(Self {
            config,
            channel_config,
            agent,
            observer,
            log: RunLog::default(),
            next_vehicle_id: 0,
            episodes_run: 0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn qtable(&self) -> Option<&QTable> {
        self.agent.as_ref().map(|a| &a.table)
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn episodes_run(&self) -> u32 {
        self.episodes_run
    }

    /// Runs the next episode for `config.episode_duration` seconds.
    pub fn run_episode<S: RunSink>(&mut self, sink: &mut S) -> Result<EpisodeSummary> {
        let index = self.episodes_run;
        let duration = self.config.episode_duration;
        let seed = RngStreams::episode_seed(self.config.master_seed, index);
        let windows = CategoryTag::ALL.map(|c| KpiWindow::new(c, self.config.kpi_window));
        let mut ep = Episode {
            cfg: &self.config,
            observer: self.observer,
            queue: EventQueue::new(index, duration),
            rng: RngStreams::new(seed),
            channel: Channel::new(self.channel_config.clone()),
            channel_event: None,
            vehicles: BTreeMap::new(),
            registry: ActiveUserRegistry::new(),
            windows,
            agent: self.agent.as_mut(),
            log: &mut self.log,
            sink,
            next_vehicle_id: &mut self.next_vehicle_id,
            episode: index,
            summary: EpisodeSummary {
                episode_index: index,
                ..EpisodeSummary::default()
            },
        };
        let result = ep.run(duration);
        if let Some(agent) = self.agent.as_mut() {
            agent.reset_episode();
        }
        self.episodes_run += 1;
        result
    }

    pub fn report(&self) -> RunReport {
        summarize(
            &self.log,
            ReportMeta {
                mode: self.config.mode.to_string(),
                seed: self.config.master_seed,
                episodes: self.episodes_run,
                episode_duration_s: self.config.episode_duration,
                scenario_fingerprint: self.config.scenario_fingerprint(),
                throughput_samples: format!("per-window ({} s)", self.config.kpi_window),
                decisions: self.log.decisions,
            },
        )
    }
}

struct Episode<'a, S: RunSink> {
    cfg: &'a ScenarioConfig,
    observer: Observer,
    queue: EventQueue<Event>,
    rng: RngStreams,
    channel: Channel,
    channel_event: Option<(EventHandle, f64)>,
    vehicles: BTreeMap<u32, Vehicle>,
    registry: ActiveUserRegistry,
    windows: [KpiWindow; 4],
    agent: Option<&'a mut Agent>,
    log: &'a mut RunLog,
    sink: &'a mut S,
    next_vehicle_id: &'a mut u32,
    episode: u32,
    summary: EpisodeSummary,
}

fn io_err(e: std::io::Error) -> SimError {
    SimError::Io(e.to_string())
}

impl<S: RunSink> Episode<'_, S> {
    fn run(&mut self, duration: f64) -> Result<EpisodeSummary> {
        if spawn_times(self.cfg.entry_interval, duration).next().is_some() {
            self.queue.schedule(Event::Spawn(1), self.cfg.entry_interval)?;
        }
        if self.cfg.kpi_window <= duration {
            self.queue.schedule(Event::KpiTick, self.cfg.kpi_window)?;
        }
        while let Some((now, event)) = self.queue.pop_until(duration) {
            self.handle(now, event)?;
            self.reschedule_channel(now)?;
        }
        self.queue.advance_to(duration);
        self.finish(duration)?;
        self.summary.end_time = self.queue.now();
        self.summary.events = self.queue.dispatched();
        self.log.simulated_time += duration;
        Ok(self.summary)
    }

    fn handle(&mut self, now: f64, event: Event) -> Result<()> {
        match event {
            Event::Spawn(k) => self.spawn(now, k),
            Event::CoverageEnter(v) => self.coverage_enter(now, v),
            Event::CoverageExit(v) => self.coverage_exit(now, v),
            Event::Exit(v) => self.exit(now, v),
            Event::GateOpen(v) => self.gate_open(now, v),
            Event::BurstEnd(v) => {
                if let Some(veh) = self.vehicles.get_mut(&v) {
                    veh.burst = None;
                    self.decide(now, v)?;
                }
                Ok(())
            }
            Event::Arrival(v) => {
                if let Some(veh) = self.vehicles.get_mut(&v) {
                    veh.arrival = None;
                    self.sync(now, v);
                    self.schedule_arrival(now, v)?;
                }
                Ok(())
            }
            Event::Channel => {
                self.channel_event = None;
                self.channel_step(now)
            }
            Event::RegistryTick => {
                self.registry.tick_active_users();
                self.queue.schedule(Event::RegistryTick, now + 1.0)?;
                Ok(())
            }
            Event::KpiTick => self.kpi_tick(now),
        }
    }

    fn reschedule_channel(&mut self, now: f64) -> Result<()> {
        let next = self.channel.next_event_time().map(|t| t.max(now));
        match (self.channel_event, next) {
            (Some((_, at)), Some(t)) if at == t => {}
            (old, next) => {
                if let Some((h, _)) = old {
                    self.queue.cancel_pending(h);
                }
                self.channel_event = match next {
                    Some(t) => Some((self.queue.schedule(Event::Channel, t)?, t)),
                    None => None,
                };
            }
        }
        Ok(())
    }

    fn spawn(&mut self, now: f64, k: u64) -> Result<()> {
        let id = *self.next_vehicle_id;
        *self.next_vehicle_id += 1;
        self.summary.vehicles += 1;
        let category = assign_category(self.rng.stream(TRAFFIC));
        let trajectory = Trajectory::random(&self.cfg.tile, &self.cfg.motion, now, self.rng.stream(MOBILITY));
        let exit_time = trajectory.exit_time();
        let rsu = self.observer.rsu;
        let coverage = trajectory.coverage_interval(rsu, self.cfg.coverage_diameter / 2.0);
        let spec = self.cfg.categories.get(category);
        let mut in_coverage = false;
        if let Some((t0, t1)) = coverage {
            if t0 <= now {
                in_coverage = true;
            } else {
                self.queue.schedule(Event::CoverageEnter(id), t0)?;
            }
            if t1 < exit_time {
                self.queue.schedule(Event::CoverageExit(id), t1)?;
            }
        }
        self.queue.schedule(Event::Exit(id), exit_time)?;
        self.vehicles.insert(
            id,
            Vehicle {
                category,
                trajectory,
                exit_time,
                schedule: CbrSchedule::new(now, spec),
                gate: TransmissionGate::new(id),
                synced: 0,
                in_coverage,
                burst: None,
                arrival: None,
                drain_end: None,
                delivered_bits: 0,
            },
        );
        if self.agent.is_some() {
            self.start_open_phase(now, id)?;
        }
        self.schedule_arrival(now, id)?;

        let next = k + 1;
        let t = next as f64 * self.cfg.entry_interval;
        if spawn_times(self.cfg.entry_interval, self.queue.clock().episode_length).nth((next - 1) as usize).is_some() {
            self.queue.schedule(Event::Spawn(next), t)?;
        }
        Ok(())
    }

    fn start_open_phase(&mut self, now: f64, id: u32) -> Result<()> {
        let h = self.queue.schedule(Event::BurstEnd(id), now + self.cfg.max_burst)?;
        if let Some(v) = self.vehicles.get_mut(&id) {
            if let Some(old) = v.burst.replace(h) {
                self.queue.cancel_pending(old);
            }
        }
        Ok(())
    }

    /// Schedules an arrival event for the next packet if the vehicle's MAC
    /// queue is empty and the gate lets it through.
    fn schedule_arrival(&mut self, now: f64, id: u32) -> Result<()> {
        let Some(v) = self.vehicles.get(&id) else {
            return Ok(());
        };
        if v.arrival.is_some() || !v.in_coverage || !v.gate.is_open(now) || self.channel.queue_len(id) > 0 {
            return Ok(());
        }
        let t = v.schedule.generated_at(v.synced).max(now);
        if t >= v.exit_time {
            return Ok(());
        }
        let h = self.queue.schedule(Event::Arrival(id), t)?;
        if let Some(v) = self.vehicles.get_mut(&id) {
            v.arrival = Some(h);
        }
        Ok(())
    }

    fn make_packet(&self, id: u32, v: &Vehicle, seq: u64) -> Packet {
        let spec = self.cfg.categories.get(v.category);
        Packet {
            id: packet_id(id, seq),
            vehicle_id: id,
            category: v.category,
            size: spec.packet_size,
            generated_at: v.schedule.generated_at(seq),
            received_at: None,
        }
    }

    fn record_drops(&mut self, id: u32, seqs: Range<u64>) -> Result<()> {
        if seqs.is_empty() {
            return Ok(());
        }
        let Some(v) = self.vehicles.get(&id) else {
            return Ok(());
        };
        let category = v.category;
        self.log.category_mut(category).dropped += seqs.end - seqs.start;
        self.summary.packets_dropped += seqs.end - seqs.start;
        if self.sink.wants_packets() {
            let size = self.cfg.categories.get(category).packet_size;
            for seq in seqs {
                let rec = PacketRecord {
                    packet_id: packet_id(id, seq),
                    vehicle_id: id,
                    category,
                    size_bits: size,
                    t_generated: v.schedule.generated_at(seq),
                    t_received: None,
                    dropped: true,
                };
                self.sink.packet(&rec).map_err(io_err)?;
            }
        }
        Ok(())
    }

    fn record_frame_drops(&mut self, frames: &[MacFrame]) -> Result<()> {
        for f in frames {
            let p = f.packet;
            self.log.category_mut(p.category).dropped += 1;
            self.summary.packets_dropped += 1;
            if self.sink.wants_packets() {
                self.sink
                    .packet(&PacketRecord {
                        packet_id: p.id,
                        vehicle_id: p.vehicle_id,
                        category: p.category,
                        size_bits: p.size,
                        t_generated: p.generated_at,
                        t_received: None,
                        dropped: true,
                    })
                    .map_err(io_err)?;
            }
        }
        Ok(())
    }

    /// Moves packets generated up to `now` out of the source: into the gate
    /// buffer while closed, otherwise toward the MAC (or lost when out of
    /// coverage).
    fn sync(&mut self, now: f64, id: u32) {
        let _ = self.sync_inner(now, id, false);
    }

    fn sync_inner(&mut self, now: f64, id: u32, into_buffer: bool) -> Result<()> {
        let Some(v) = self.vehicles.get(&id) else {
            return Ok(());
        };
        let upto = v.schedule.generated_by(now.min(v.exit_time));
        if upto <= v.synced {
            return Ok(());
        }
        let from = v.synced;
        let category = v.category;
        self.log.category_mut(category).generated += upto - from;
        self.summary.packets_generated += upto - from;
        let open = v.gate.is_open(now) && !into_buffer;
        let in_coverage = v.in_coverage;
        let v = self.vehicles.get_mut(&id).expect("present");
        v.synced = upto;
        if !open {
            v.gate.push(from..upto);
            return Ok(());
        }
        if !in_coverage {
            return self.record_drops(id, from..upto);
        }
        self.hand_to_mac(now, id, from..upto).map(|_| ())
    }

    /// Enqueues a FIFO run of packets; drop-tail beyond queue capacity.
    /// Returns the number accepted.
    fn hand_to_mac(&mut self, now: f64, id: u32, seqs: Range<u64>) -> Result<u64> {
        let space = self.channel.queue_space(id) as u64;
        let take = space.min(seqs.end - seqs.start);
        let split = seqs.start + take;
        for seq in seqs.start..split {
            let p = {
                let v = &self.vehicles[&id];
                self.make_packet(id, v, seq)
            };
            if let Err(p) = self.channel.enqueue(now, p, self.rng.stream(MAC)) {
                // capacity was checked above
                return Err(SimError::Io(format!("unexpected full MAC queue for packet {}", p.id)));
            }
        }
        self.record_drops(id, split..seqs.end)?;
        Ok(take)
    }

    fn coverage_enter(&mut self, now: f64, id: u32) -> Result<()> {
        if !self.vehicles.contains_key(&id) {
            return Ok(());
        }
        self.sync(now, id);
        if let Some(v) = self.vehicles.get_mut(&id) {
            v.in_coverage = true;
        }
        self.schedule_arrival(now, id)
    }

    fn coverage_exit(&mut self, now: f64, id: u32) -> Result<()> {
        if !self.vehicles.contains_key(&id) {
            return Ok(());
        }
        self.sync(now, id);
        let frames = self.channel.remove_station(id);
        self.record_frame_drops(&frames)?;
        let v = self.vehicles.get_mut(&id).expect("present");
        v.in_coverage = false;
        v.drain_end = None;
        if let Some(h) = v.arrival.take() {
            self.queue.cancel_pending(h);
        }
        Ok(())
    }

    fn exit(&mut self, now: f64, id: u32) -> Result<()> {
        if !self.vehicles.contains_key(&id) {
            return Ok(());
        }
        self.sync(now, id);
        let frames = self.channel.remove_station(id);
        self.record_frame_drops(&frames)?;
        let (category, buffered, burst, arrival) = {
            let v = self.vehicles.get_mut(&id).expect("present");
            (
                v.category,
                v.gate.buffer_start..v.gate.buffer_end,
                v.burst.take(),
                v.arrival.take(),
            )
        };
        self.record_drops(id, buffered)?;
        for h in [burst, arrival].into_iter().flatten() {
            self.queue.cancel_pending(h);
        }
        if self.agent.is_some() {
            let stats = self.windows[category.index()].stats_at(now);
            let reward = compute_reward(self.cfg.categories.get(category), &stats, &self.cfg.reward)?;
            if let Some(agent) = self.agent.as_mut() {
                agent.terminal(id, reward);
            }
        }
        let v = self.vehicles.remove(&id).expect("present");
        self.log.vehicles.insert(
            (self.episode, id),
            VehicleLog {
                category: Some(v.category),
                delivered_bits: v.delivered_bits,
                residence: now - v.trajectory.entry_time,
            },
        );
        Ok(())
    }

    fn gate_open(&mut self, now: f64, id: u32) -> Result<()> {
        if !self.vehicles.contains_key(&id) {
            return Ok(());
        }
        self.sync_inner(now, id, true)?;
        let (drained, in_coverage) = {
            let v = self.vehicles.get_mut(&id).expect("present");
            (v.gate.drain(now).unwrap_or(0..0), v.in_coverage)
        };
        let drain_end = if in_coverage {
            let taken = self.hand_to_mac(now, id, drained.clone())?;
            (taken > 0).then_some(drained.start + taken)
        } else {
            self.record_drops(id, drained)?;
            None
        };
        if let Some(v) = self.vehicles.get_mut(&id) {
            v.drain_end = drain_end;
        }
        self.start_open_phase(now, id)?;
        self.schedule_arrival(now, id)
    }

    fn decide(&mut self, now: f64, id: u32) -> Result<()> {
        let Some(v) = self.vehicles.get_mut(&id) else {
            return Ok(());
        };
        v.drain_end = None;
        if let Some(h) = v.burst.take() {
            self.queue.cancel_pending(h);
        }
        if !self.registry.contains(id) {
            // Not heard by the RSU recently: nothing to address yet.
            return self.start_open_phase(now, id);
        }
        let category = v.category;
        let kinematics = v
            .trajectory
            .position_at(now, self.observer.rsu)
            .map_err(|_| SimError::VehicleDeparted(id))?;
        let state = self.observer.observe(id, &kinematics, &self.registry)?;
        let spec = *self.cfg.categories.get(category);
        let stats = self.windows[category.index()].stats_at(now);
        let reward = compute_reward(&spec, &stats, &self.cfg.reward)?;
        let agent = self.agent.as_mut().expect("decisions only in agent modes");
        let decision = agent.decision_cycle(id, state, &spec, reward, self.rng.stream(AGENT));
        self.log.decisions += 1;
        self.summary.decisions += 1;
        self.sink
            .decision(&DecisionRecord {
                t: now,
                vehicle_id: id,
                sj_bucket: state.sj,
                tv: state.tv,
                category,
                tcv: state.tcv,
                action: decision.action,
                waiting_time: decision.waiting_time,
                reward: decision.reward,
            })
            .map_err(io_err)?;
        if decision.waiting_time > 0.0 {
            self.sync(now, id);
            let v = self.vehicles.get_mut(&id).expect("present");
            v.gate = v.gate.apply_waiting_time(decision.waiting_time, now, &spec)?;
            if let Some(h) = v.arrival.take() {
                self.queue.cancel_pending(h);
            }
            self.queue.schedule(Event::GateOpen(id), now + decision.waiting_time)?;
            Ok(())
        } else {
            self.start_open_phase(now, id)
        }
    }

    fn channel_step(&mut self, now: f64) -> Result<()> {
        if self.channel.is_busy() {
            let flying: Vec<u32> = self.channel.in_flight().to_vec();
            for id in flying {
                self.sync(now, id);
            }
        }
        let out = self.channel.contend_step(now, self.rng.stream(MAC));
        for e in &out.events {
            let name = self.channel.config().access_categories[e.ac].name.clone();
            self.sink.mac_event(e, &name).map_err(io_err)?;
        }
        let mut drained = Vec::new();
        for rec in &out.received {
            self.deliver(rec)?;
            if self.completes_drain(rec.packet) {
                drained.push(rec.packet.vehicle_id);
            }
        }
        self.record_frame_drops(&out.dropped)?;
        for f in &out.dropped {
            if self.completes_drain(f.packet) {
                drained.push(f.packet.vehicle_id);
            }
        }
        for id in out.emptied {
            self.schedule_arrival(now, id)?;
        }
        for id in drained {
            self.decide(now, id)?;
        }
        Ok(())
    }

    fn completes_drain(&self, p: Packet) -> bool {
        self.agent.is_some()
            && self
                .vehicles
                .get(&p.vehicle_id)
                .and_then(|v| v.drain_end)
                .is_some_and(|end| (p.id & 0xffff_ffff) + 1 == end)
    }

    fn deliver(&mut self, rec: &ReceptionRecord) -> Result<()> {
        let p = rec.packet;
        let t = rec.t_received;
        self.windows[p.category.index()].record_reception(&p, t)?;
        if self.registry.register_packet(p.vehicle_id, p.category) {
            self.queue.schedule(Event::RegistryTick, t + 1.0)?;
        }
        let cl = self.log.category_mut(p.category);
        cl.latencies.push(t - p.generated_at);
        cl.delivered_bits += u64::from(p.size);
        cl.delivered += 1;
        self.log.mac_delivered_bits += u64::from(p.size);
        self.summary.packets_delivered += 1;
        if let Some(v) = self.vehicles.get_mut(&p.vehicle_id) {
            v.delivered_bits += u64::from(p.size);
        }
        if self.sink.wants_packets() {
            self.sink
                .packet(&PacketRecord {
                    packet_id: p.id,
                    vehicle_id: p.vehicle_id,
                    category: p.category,
                    size_bits: p.size,
                    t_generated: p.generated_at,
                    t_received: Some(t),
                    dropped: false,
                })
                .map_err(io_err)?;
        }
        Ok(())
    }

    fn kpi_tick(&mut self, now: f64) -> Result<()> {
        for c in CategoryTag::ALL {
            let stats = self.windows[c.index()].stats_at(now);
            let spec = self.cfg.categories.get(c);
            let active = self.registry.active_in(c) > 0;
            let cl = self.log.category_mut(c);
            cl.window_throughput.push(stats.rate_bps);
            if let Some(l) = stats.mean_latency {
                cl.window_latency.push((now, l));
            }
            if active {
                if stats.mean_latency.is_none_or(|l| l > spec.max_latency) {
                    cl.violations_latency += 1;
                }
                if stats.rate_bps < spec.min_rate {
                    cl.violations_rate += 1;
                }
            }
        }
        if self.sink.wants_trajectories() {
            let rsu = self.observer.rsu;
            let samples: Vec<TrajectorySample> = self
                .vehicles
                .iter()
                .filter_map(|(&id, v)| {
                    let k = v.trajectory.position_at(now, rsu).ok()?;
                    Some(TrajectorySample {
                        vehicle_id: id,
                        t: now,
                        x: k.position.x,
                        y: k.position.y,
                        speed: k.speed,
                    })
                })
                .collect();
            for s in &samples {
                self.sink.trajectory(s).map_err(io_err)?;
            }
        }
        let next = now + self.cfg.kpi_window;
        if next <= self.queue.clock().episode_length + 1e-9 {
            self.queue.schedule(Event::KpiTick, next)?;
        }
        Ok(())
    }

    /// Episode boundary: everything still buffered or queued is logged as
    /// neither received nor dropped.
    fn finish(&mut self, now: f64) -> Result<()> {
        let ids: Vec<u32> = self.vehicles.keys().copied().collect();
        for id in ids {
            self.sync(now, id);
            let frames = self.channel.remove_station(id);
            let v = self.vehicles.remove(&id).expect("present");
            let buffered = v.gate.buffer_end - v.gate.buffer_start;
            let cl = self.log.category_mut(v.category);
            cl.in_flight_at_end += buffered + frames.len() as u64;
            if self.sink.wants_packets() {
                for f in &frames {
                    let p = f.packet;
                    self.sink
                        .packet(&PacketRecord {
                            packet_id: p.id,
                            vehicle_id: id,
                            category: p.category,
                            size_bits: p.size,
                            t_generated: p.generated_at,
                            t_received: None,
                            dropped: false,
                        })
                        .map_err(io_err)?;
                }
                let size = self.cfg.categories.get(v.category).packet_size;
                for seq in v.gate.buffer_start..v.gate.buffer_end {
                    self.sink
                        .packet(&PacketRecord {
                            packet_id: packet_id(id, seq),
                            vehicle_id: id,
                            category: v.category,
                            size_bits: size,
                            t_generated: v.schedule.generated_at(seq),
                            t_received: None,
                            dropped: false,
                        })
                        .map_err(io_err)?;
                }
            }
            self.log.vehicles.insert(
                (self.episode, id),
                VehicleLog {
                    category: Some(v.category),
                    delivered_bits: v.delivered_bits,
                    residence: now - v.trajectory.entry_time,
                },
            );
        }
        Ok(())
    }
}

/// Trains (or evaluates) for `config.episodes` episodes with a fresh sink per
/// episode chosen by `sink_for`. Convenience for tests and batch drivers.
pub fn run_scenario<S: RunSink>(
    config: ScenarioConfig,
    table: Option<QTable>,
    learning: bool,
    mut sink_for: impl FnMut(u32) -> S,
) -> Result<(Simulation, Vec<EpisodeSummary>)> {
    let mut sim = Simulation::new(config, table, learning)?;
    let mut summaries = Vec::new();
    for i in 0..sim.config().episodes {
        let mut sink = sink_for(i);
        summaries.push(sim.run_episode(&mut sink)?);
    }
    Ok((sim, summaries))
}
