//! `rsuq`: runs RSU waiting-time controller scenarios and compares reports.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde_json::json;

use rsuq_core::agent::QTable;
use rsuq_core::config::{parse_config, ScenarioConfig};
use rsuq_core::logs::{
    write_cdf, write_mac_event, DecisionRecord, PacketRecord, RunSink, TrajectorySample, DECISION_LOG_HEADER,
    MAC_LOG_HEADER, PACKET_LOG_HEADER, TRAJECTORY_HEADER,
};
use rsuq_core::mac::{MacEvent, Mode};
use rsuq_core::metrics::{compare, export_cdf, RunReport};
use rsuq_core::sim::Simulation;
use rsuq_core::traffic::CategoryTag;

const CDF_POINTS: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "rsuq", version, about = "Single-RSU vehicular network scenarios with a Q-learning waiting-time controller")]
struct Cli {
    /// Scenario file (TOML). Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// no-qos, edca, edca-hd, agent or agent-edca.
    #[arg(long)]
    mode: Option<Mode>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    episodes: Option<u32>,

    /// Episode length in seconds.
    #[arg(long)]
    duration: Option<f64>,

    /// Output directory. Defaults to `<RSUQ_OUT_DIR>/<mode>-seed<seed>`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Root for default output directories.
    #[arg(long, env = "RSUQ_OUT_DIR", default_value = "rsuq-out", hide_env_values = true)]
    out_root: PathBuf,

    /// Learn with the configured exploration rate (default).
    #[arg(long, conflicts_with = "eval")]
    train: bool,

    /// Freeze the Q-table and act greedily. Agent modes need `--qtable`.
    #[arg(long)]
    eval: bool,

    /// Q-table snapshot to start from.
    #[arg(long)]
    qtable: Option<PathBuf>,

    /// Compare two report files (baseline first) instead of running.
    #[arg(long, num_args = 2, value_names = ["BASELINE", "CANDIDATE"])]
    compare: Option<Vec<PathBuf>>,

    /// With `--compare`: exit with status 2 when the HD map latency
    /// improvement is below this percentage.
    #[arg(long, value_name = "PCT", requires = "compare", allow_negative_numbers = true)]
    fail_if_hd_latency_improvement_below: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.compare {
        Some(paths) => run_compare(&paths[0], &paths[1], cli.fail_if_hd_latency_improvement_below),
        None => run(&cli).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<(ScenarioConfig, Vec<String>)> {
    let (mut cfg, warnings) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => (ScenarioConfig::default(), Vec::new()),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(e) = cli.episodes {
        cfg.episodes = e;
    }
    if let Some(d) = cli.duration {
        cfg.episode_duration = d;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = Some(o.clone());
    }
    if cli.eval {
        cfg.reward.epsilon = 0.0;
    }
    let mut warnings = warnings;
    warnings.extend(cfg.validate()?);
    Ok((cfg, warnings))
}

fn run(cli: &Cli) -> Result<()> {
    let (cfg, warnings) = resolve_config(cli)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let table = match &cli.qtable {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(QTable::from_snapshot(&text).with_context(|| format!("in {}", path.display()))?)
        }
        None => None,
    };
    if cli.eval && cfg.mode.uses_agent() && table.is_none() {
        bail!("--eval in an agent mode needs --qtable");
    }
    if table.is_some() && !cfg.mode.uses_agent() {
        eprintln!("warning: --qtable ignored in baseline mode {}", cfg.mode);
    }

    let out = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| cli.out_root.join(format!("{}-seed{}", cfg.mode, cfg.master_seed)));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut sim = Simulation::new(cfg.clone(), table, !cli.eval)?;
    let mut files = RunFiles::create(&out)?;
    let mut summaries = Vec::new();
    for i in 0..cfg.episodes {
        files.detailed = i + 1 == cfg.episodes;
        let s = sim.run_episode(&mut files)?;
        eprintln!(
            "episode {}/{}: {} vehicles, {} delivered, {} dropped, {} decisions",
            i + 1,
            cfg.episodes,
            s.vehicles,
            s.packets_delivered,
            s.packets_dropped,
            s.decisions
        );
        summaries.push(s);
    }
    files.finish()?;

    if let Some(table) = sim.qtable() {
        write_file(&out.join("qtable.txt"), table.to_snapshot(&cfg.reward, cfg.n_max).as_bytes())?;
    }
    let report = sim.report();
    write_file(&out.join("report.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    write_cdfs(&out, &cfg, &sim)?;

    let metadata = json!({
        "version": format!("rsuq {}", env!("CARGO_PKG_VERSION")),
        "command_line": std::env::args().collect::<Vec<_>>(),
        "phase": if cli.eval { "eval" } else { "train" },
        "qtable_input": cli.qtable,
        "seed": cfg.master_seed,
        "config": cfg,
        "warnings": warnings,
        "episodes": summaries.iter().map(|s| json!({
            "index": s.episode_index,
            "events": s.events,
            "vehicles": s.vehicles,
            "generated": s.packets_generated,
            "delivered": s.packets_delivered,
            "dropped": s.packets_dropped,
            "decisions": s.decisions,
        })).collect::<Vec<_>>(),
    });
    write_file(&out.join("metadata.json"), serde_json::to_string_pretty(&metadata)?.as_bytes())?;
    println!("{}", out.display());
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_cdfs(out: &Path, cfg: &ScenarioConfig, sim: &Simulation) -> Result<()> {
    for c in CategoryTag::REPORT_ORDER {
        let log = sim.log().category(c);
        for (kind, samples) in [("latency", &log.latencies), ("throughput", &log.window_throughput)] {
            let path = out.join(format!("cdf_{kind}_{}_{c}.csv", cfg.mode));
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            write_cdf(&mut w, &export_cdf(samples, CDF_POINTS))?;
            w.flush()?;
        }
    }
    Ok(())
}

/// CSV outputs. Decisions are logged for every episode; the per-packet, MAC
/// and trajectory logs only for the final one.
struct RunFiles {
    packets: BufWriter<File>,
    decisions: BufWriter<File>,
    mac: BufWriter<File>,
    trajectories: BufWriter<File>,
    detailed: bool,
}

impl RunFiles {
    fn create(dir: &Path) -> Result<Self> {
        let open = |name: &str, header: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            writeln!(w, "{header}")?;
            Ok(w)
        };
        Ok(Self {
            packets: open("packets.csv", PACKET_LOG_HEADER)?,
            decisions: open("decisions.csv", DECISION_LOG_HEADER)?,
            mac: open("mac.csv", MAC_LOG_HEADER)?,
            trajectories: open("trajectories.csv", TRAJECTORY_HEADER)?,
            detailed: false,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.packets.flush()?;
        self.decisions.flush()?;
        self.mac.flush()?;
        self.trajectories.flush()?;
        Ok(())
    }
}

impl RunSink for RunFiles {
    fn wants_packets(&self) -> bool {
        self.detailed
    }

    fn wants_trajectories(&self) -> bool {
        self.detailed
    }

    fn packet(&mut self, record: &PacketRecord) -> io::Result<()> {
        record.write_csv(&mut self.packets)
    }

    fn decision(&mut self, record: &DecisionRecord) -> io::Result<()> {
        record.write_csv(&mut self.decisions)
    }

    fn mac_event(&mut self, event: &MacEvent, ac_name: &str) -> io::Result<()> {
        if self.detailed {
            write_mac_event(&mut self.mac, event, ac_name)?;
        }
        Ok(())
    }

    fn trajectory(&mut self, sample: &TrajectorySample) -> io::Result<()> {
        sample.write_csv(&mut self.trajectories)
    }
}

fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run_compare(baseline: &Path, candidate: &Path, threshold: Option<f64>) -> Result<ExitCode> {
    let a = read_report(baseline)?;
    let b = read_report(candidate)?;
    let delta = compare(&a, &b)?;
    println!("{}", serde_json::to_string_pretty(&delta)?);
    if let Some(min) = threshold {
        let hd = delta.category(CategoryTag::HD).and_then(|d| d.latency_improvement_pct);
        match hd {
            Some(pct) if pct >= min => {}
            other => {
                eprintln!(
                    "HD map latency improvement {} is below the required {min}%",
                    other.map_or("unavailable".to_owned(), |p| format!("{p:.2}%"))
                );
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
