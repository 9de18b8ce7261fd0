//! End-to-end properties of whole episodes.

use std::collections::HashMap;
use std::io;

use rsuq_core::config::ScenarioConfig;
use rsuq_core::logs::{CsvSink, DecisionRecord, NullSink, PacketRecord, RunSink, TrajectorySample};
use rsuq_core::mac::{MacEvent, MacEventKind, Mode};
use rsuq_core::sim::Simulation;
use rsuq_core::traffic::{CategoryTag, Category};

const ALL_MODES: [Mode; 5] = [Mode::NoQos, Mode::Edca, Mode::EdcaHd, Mode::AgentOverNoQos, Mode::AgentOverEdca];

fn short(mode: Mode, seed: u64, duration: f64) -> ScenarioConfig {
    ScenarioConfig {
        mode,
        master_seed: seed,
        episode_duration: duration,
        ..ScenarioConfig::default()
    }
}

#[derive(Default)]
struct Capture {
    packets: Vec<PacketRecord>,
    decisions: Vec<DecisionRecord>,
    mac: Vec<MacEvent>,
    trajectories: Vec<TrajectorySample>,
}

impl RunSink for Capture {
    fn wants_packets(&self) -> bool {
        true
    }

    fn wants_trajectories(&self) -> bool {
        true
    }

    fn packet(&mut self, record: &PacketRecord) -> io::Result<()> {
        self.packets.push(*record);
        Ok(())
    }

    fn decision(&mut self, record: &DecisionRecord) -> io::Result<()> {
        self.decisions.push(*record);
        Ok(())
    }

    fn mac_event(&mut self, event: &MacEvent, _ac_name: &str) -> io::Result<()> {
        self.mac.push(*event);
        Ok(())
    }

    fn trajectory(&mut self, sample: &TrajectorySample) -> io::Result<()> {
        self.trajectories.push(*sample);
        Ok(())
    }
}

fn capture(cfg: ScenarioConfig, episodes: u32) -> (Simulation, Capture) {
    let mut sim = Simulation::new(cfg, None, true).unwrap();
    let mut cap = Capture::default();
    for _ in 0..episodes {
        sim.run_episode(&mut cap).unwrap();
    }
    (sim, cap)
}

#[test]
fn packets_are_conserved_in_every_mode() {
    for mode in ALL_MODES {
        let (sim, cap) = capture(short(mode, 3, 30.0), 2);
        let log = sim.log();
        let mut rows: HashMap<CategoryTag, (u64, u64, u64)> = HashMap::new();
        for p in &cap.packets {
            let e = rows.entry(p.category).or_default();
            match (p.t_received, p.dropped) {
                (Some(_), false) => e.0 += 1,
                (None, true) => e.1 += 1,
                (None, false) => e.2 += 1,
                (Some(_), true) => panic!("packet {} both received and dropped", p.packet_id),
            }
        }
        for c in CategoryTag::ALL {
            let cl = log.category(c);
            assert_eq!(
                cl.generated,
                cl.delivered + cl.dropped + cl.in_flight_at_end,
                "{mode} {c}: generated != delivered + dropped + in flight"
            );
            let (rx, dropped, pending) = rows.get(&c).copied().unwrap_or_default();
            assert_eq!((rx, dropped, pending), (cl.delivered, cl.dropped, cl.in_flight_at_end), "{mode} {c}");
        }
        let bits: u64 = CategoryTag::ALL.iter().map(|&c| log.category(c).delivered_bits).sum();
        assert_eq!(bits, log.mac_delivered_bits);
    }
}

#[test]
fn every_packet_is_logged_once_and_never_before_generation() {
    let (_, cap) = capture(short(Mode::AgentOverEdca, 4, 30.0), 1);
    let mut seen = HashMap::new();
    for p in &cap.packets {
        assert!(seen.insert(p.packet_id, ()).is_none(), "duplicate packet {}", p.packet_id);
        if let Some(t) = p.t_received {
            assert!(t >= p.t_generated);
        }
    }
    assert!(!seen.is_empty());
}

#[test]
fn mac_log_is_time_ordered_and_one_success_at_a_time() {
    let (_, cap) = capture(short(Mode::Edca, 5, 20.0), 1);
    let mut last = f64::NEG_INFINITY;
    let mut last_success = f64::NEG_INFINITY;
    for e in &cap.mac {
        assert!(e.t >= last, "MAC event at {} after {}", e.t, last);
        last = e.t;
        if e.kind == MacEventKind::TxSuccess {
            assert!(e.t > last_success, "two successes end at {}", e.t);
            last_success = e.t;
        }
    }
}

#[test]
fn closed_gate_hands_nothing_to_the_mac() {
    let mut cfg = short(Mode::AgentOverNoQos, 6, 40.0);
    cfg.reward.epsilon = 1.0;
    let (_, cap) = capture(cfg, 1);
    let generated: HashMap<u64, f64> = cap.packets.iter().map(|p| (p.packet_id, p.t_generated)).collect();
    let waits: Vec<&DecisionRecord> = cap.decisions.iter().filter(|d| d.waiting_time > 0.0).collect();
    assert!(waits.len() > 50, "expected many closures, got {}", waits.len());
    let mut starts: HashMap<u32, Vec<(f64, u64)>> = HashMap::new();
    for e in cap.mac.iter().filter(|e| e.kind == MacEventKind::TxStart) {
        starts.entry(e.vehicle_id).or_default().push((e.t, e.packet_id));
    }
    for d in waits {
        let (open, close) = (d.t, d.t + d.waiting_time);
        for &(t, pid) in starts.get(&d.vehicle_id).map(Vec::as_slice).unwrap_or(&[]) {
            let g = generated[&pid];
            assert!(
                !(g > open && g < close && t < close),
                "packet {pid} generated at {g} during closure [{open}, {close}) transmitted at {t}"
            );
        }
    }
}

#[test]
fn baselines_make_no_decisions() {
    for mode in [Mode::NoQos, Mode::Edca, Mode::EdcaHd] {
        let (sim, cap) = capture(short(mode, 7, 20.0), 1);
        assert!(cap.decisions.is_empty(), "{mode}");
        assert!(sim.qtable().is_none());
    }
    let (sim, cap) = capture(short(Mode::AgentOverNoQos, 7, 20.0), 1);
    assert!(!cap.decisions.is_empty());
    assert_eq!(sim.log().decisions, cap.decisions.len() as u64);
}

#[test]
fn identical_seeds_give_identical_outputs() {
    let run = |seed| {
        let cfg = short(Mode::AgentOverEdca, seed, 20.0);
        let mut sim = Simulation::new(cfg, None, true).unwrap();
        let mut sink = CsvSink::new(Some(Vec::new()), Some(Vec::new()), Some(Vec::new()), Some(Vec::new())).unwrap();
        sim.run_episode(&mut sink).unwrap();
        sim.run_episode(&mut sink).unwrap();
        let report = serde_json::to_string(&sim.report()).unwrap();
        (sink.packets.unwrap(), sink.decisions.unwrap(), sink.mac.unwrap(), sink.trajectories.unwrap(), report)
    };
    let a = run(11);
    assert!(a == run(11));
    assert!(a.0 != run(12).0);
}

#[test]
fn subsystem_streams_are_independent_of_mode() {
    // Same seed, different controller: mobility and traffic draws must match.
    let vehicles = |mode| {
        let (sim, cap) = capture(short(mode, 8, 30.0), 1);
        let cats: Vec<_> = sim.log().vehicles.iter().map(|(k, v)| (*k, v.category)).collect();
        (cats, cap.trajectories.iter().map(|s| (s.vehicle_id, s.t, s.x, s.y)).collect::<Vec<_>>())
    };
    let base = vehicles(Mode::NoQos);
    for mode in [Mode::Edca, Mode::EdcaHd, Mode::AgentOverNoQos] {
        assert!(vehicles(mode) == base, "{mode}");
    }
}

#[test]
fn vehicles_stay_inside_the_tile() {
    let cfg = short(Mode::NoQos, 9, 60.0);
    let (w, h) = (cfg.tile.width, cfg.tile.height);
    let (_, cap) = capture(cfg, 1);
    assert!(!cap.trajectories.is_empty());
    for s in &cap.trajectories {
        assert!((-1e-9..=w + 1e-9).contains(&s.x) && (-1e-9..=h + 1e-9).contains(&s.y), "{s:?}");
        assert!(s.speed >= 0.0 && s.speed <= 17.0 + 1e-9);
    }
}

#[test]
fn offered_load_matches_source_rate() {
    let mut sim = Simulation::new(short(Mode::NoQos, 10, 250.0), None, false).unwrap();
    sim.run_episode(&mut NullSink).unwrap();
    let log = sim.log();
    for c in CategoryTag::ALL {
        let spec = Category::default_for(c);
        let residence: f64 = log
            .vehicles
            .values()
            .filter(|v| v.category == Some(c))
            .map(|v| v.residence)
            .sum();
        let offered = log.category(c).generated as f64 * f64::from(spec.packet_size) / residence;
        let err = (offered - spec.source_rate).abs() / spec.source_rate;
        assert!(err < 0.01, "{c}: offered {offered} vs {} ({:.3}%)", spec.source_rate, err * 100.0);
    }
}

#[test]
fn qtable_persists_across_episodes_and_state_resets() {
    let mut sim = Simulation::new(short(Mode::AgentOverNoQos, 12, 30.0), None, true).unwrap();
    let first = sim.run_episode(&mut NullSink).unwrap();
    let updates = sim.qtable().unwrap().total_updates();
    assert!(updates > 0);
    let second = sim.run_episode(&mut NullSink).unwrap();
    assert!(sim.qtable().unwrap().total_updates() > updates);
    // Each episode spawns its own fleet on a fresh clock.
    assert_eq!(first.vehicles, second.vehicles);
    assert_eq!(second.end_time, 30.0);
    assert_eq!(sim.log().simulated_time, 60.0);
}

#[test]
fn frozen_agent_leaves_table_untouched() {
    let mut trainer = Simulation::new(short(Mode::AgentOverNoQos, 13, 30.0), None, true).unwrap();
    trainer.run_episode(&mut NullSink).unwrap();
    let table = trainer.qtable().cloned().unwrap();
    let mut cfg = short(Mode::AgentOverNoQos, 14, 30.0);
    cfg.reward.epsilon = 0.0;
    let mut eval = Simulation::new(cfg, Some(table.clone()), false).unwrap();
    eval.run_episode(&mut NullSink).unwrap();
    assert_eq!(eval.qtable().unwrap(), &table);
}

/// Without QoS, categories with identical traffic get no systematic latency
/// ordering.
#[test]
fn no_qos_treats_equal_load_equally() {
    let seeds = 10;
    let mut wins = [[0u32; 4]; 4];
    let mut diffs: Vec<[[f64; 4]; 4]> = Vec::new();
    for seed in 0..seeds {
        let mut cfg = short(Mode::NoQos, 100 + seed, 60.0);
        for c in CategoryTag::ALL {
            let cat = cfg.categories.get_mut(c);
            cat.source_rate = 4e6;
            cat.packet_size = 8_000;
        }
        let mut sim = Simulation::new(cfg, None, false).unwrap();
        sim.run_episode(&mut NullSink).unwrap();
        let report = sim.report();
        let lat: Vec<f64> = CategoryTag::ALL
            .iter()
            .map(|&c| report.category(c).unwrap().mean_latency_s.unwrap())
            .collect();
        for i in 0..4 {
            for j in 0..4 {
                if lat[i] < lat[j] {
                    wins[i][j] += 1;
                }
            }
        }
        let mean = lat.iter().sum::<f64>() / 4.0;
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[i][j] = (lat[i] - lat[j]) / mean;
            }
        }
        diffs.push(d);
    }
    // A sign test at p < 0.05 needs 9 of 10.
    for (i, row) in wins.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            assert!(w <= 8, "category {i} beat {j} in {w}/10 seeds");
        }
    }
    // Mean paired difference within three standard errors of zero.
    let n = diffs.len() as f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let xs: Vec<f64> = diffs.iter().map(|d| d[i][j]).collect();
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!(mean.abs() < 3.0 * se, "categories {i},{j}: mean gap {mean:.3}, se {se:.3}");
        }
    }
}
