//! Scenario configuration. Files are TOML with flat sections; every key is
//! optional and falls back to the reference scenario defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agent::RewardParams;
use crate::engine::mix64;
use crate::error::{Result, SimError};
use crate::mac::{configure_mode, BandwidthPreset, ChannelConfig, Mode, DEFAULT_QUEUE_CAPACITY, DEFAULT_RETRY_LIMIT};
use crate::mobility::{MotionLimits, Tile};
use crate::traffic::{CategoryTable, CategoryTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub master_seed: u64,
    pub episodes: u32,
    pub episode_duration: f64,
    pub entry_interval: f64,
    pub tile: Tile,
    pub coverage_diameter: f64,
    /// Sojourn time assigned to a stopped vehicle inside coverage.
    pub stationary_sojourn_cap: f64,
    pub motion: MotionLimits,
    pub categories: CategoryTable,
    pub reward: RewardParams,
    /// Clamp for the active-vehicle state components.
    pub n_max: u16,
    pub channel_preset: BandwidthPreset,
    pub retry_limit: u32,
    pub queue_capacity: usize,
    /// Reward / KPI measurement window, seconds.
    pub kpi_window: f64,
    /// Longest open phase before the RSU issues the next decision, seconds.
    pub max_burst: f64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: Mode::AgentOverNoQos,
            master_seed: 1,
            episodes: 50,
            episode_duration: 250.0,
            entry_interval: 0.66,
            tile: Tile::default(),
            coverage_diameter: 200.0,
            stationary_sojourn_cap: 20.0,
            motion: MotionLimits::default(),
            categories: CategoryTable::default(),
            reward: RewardParams::default(),
            n_max: 64,
            channel_preset: BandwidthPreset::P5_9Ghz10Mhz,
            retry_limit: DEFAULT_RETRY_LIMIT,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            kpi_window: 1.0,
            max_burst: 0.5,
            output_dir: None,
        }
    }
}

impl ScenarioConfig {
    pub fn channel(&self) -> ChannelConfig {
        let mut c = configure_mode(self.mode, self.channel_preset);
        c.retry_limit = self.retry_limit;
        c.queue_capacity = self.queue_capacity;
        c
    }

    /// Checks every range invariant. Returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let bad = |msg: String| Err(SimError::Config(msg));
        self.reward.validate()?;
        if !self.reward.weights_sum_to_one() {
            warnings.push(format!(
                "alpha1 + alpha2 = {} (expected 1)",
                self.reward.alpha1 + self.reward.alpha2
            ));
        }
        if !(self.episode_duration >= 0.0 && self.episode_duration.is_finite()) {
            return bad(format!("episode_duration must be finite and >= 0, got {}", self.episode_duration));
        }
        if !(self.entry_interval > 0.0) {
            return bad(format!("entry_interval must be > 0, got {}", self.entry_interval));
        }
        if !(self.tile.width > 0.0 && self.tile.height > 0.0) {
            return bad("tile dimensions must be positive".into());
        }
        if !(self.coverage_diameter > 0.0) {
            return bad("coverage_diameter must be positive".into());
        }
        let m = &self.motion;
        if !(m.max_speed > 0.0 && m.max_speed <= 17.0) {
            return bad(format!("max_speed must lie in (0, 17], got {}", m.max_speed));
        }
        if !(m.min_cruise_speed > 0.0 && m.min_cruise_speed <= m.max_speed) {
            return bad("min_cruise_speed must lie in (0, max_speed]".into());
        }
        if !(m.acceleration > 0.0 && m.deceleration > 0.0) {
            return bad("acceleration and deceleration must be positive".into());
        }
        for c in &self.categories.0 {
            if !(c.source_rate > 0.0 && c.max_latency > 0.0 && c.max_wait >= 0.0 && c.min_rate >= 0.0) {
                return bad(format!("{}: rates, latency and waiting limits must be positive", c.tag));
            }
            if c.packet_size == 0 {
                return bad(format!("{}: packet_size must be positive", c.tag));
            }
        }
        if !(self.kpi_window > 0.0 && self.max_burst > 0.0) {
            return bad("kpi_window and max_burst must be positive".into());
        }
        self.channel().validate()?;
        Ok(warnings)
    }

    /// Fingerprint of everything that defines the scenario apart from the
    /// controller: geometry, mobility, traffic and episode length.
    pub fn scenario_fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Scenario<'a> {
            duration: f64,
            entry_interval: f64,
            tile: &'a Tile,
            coverage: f64,
            motion: &'a MotionLimits,
            categories: &'a CategoryTable,
            preset: BandwidthPreset,
        }
        let json = serde_json::to_string(&Scenario {
            duration: self.episode_duration,
            entry_interval: self.entry_interval,
            tile: &self.tile,
            coverage: self.coverage_diameter,
            motion: &self.motion,
            categories: &self.categories,
            preset: self.channel_preset,
        })
        .expect("scenario serializes");
        let h = json
            .bytes()
            .fold(0u64, |h, b| mix64(h ^ u64::from(b)));
        format!("{h:016x}")
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileScenario {
    mode: Option<String>,
    seed: Option<u64>,
    episodes: Option<u32>,
    episode_duration: Option<f64>,
    entry_interval: Option<f64>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGeometry {
    tile_width: Option<f64>,
    tile_height: Option<f64>,
    coverage_diameter: Option<f64>,
    stationary_sojourn_cap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileMotion {
    max_speed: Option<f64>,
    min_cruise_speed: Option<f64>,
    acceleration: Option<f64>,
    deceleration: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAgent {
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    gamma: Option<f64>,
    learning_rate: Option<f64>,
    epsilon: Option<f64>,
    penalties_enabled: Option<bool>,
    be_bonus_enabled: Option<bool>,
    n_max: Option<u16>,
    kpi_window: Option<f64>,
    max_burst: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileChannel {
    preset: Option<String>,
    retry_limit: Option<u32>,
    queue_capacity: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCategory {
    source_rate: Option<f64>,
    packet_size: Option<u32>,
    max_latency: Option<f64>,
    min_rate: Option<f64>,
    max_wait: Option<f64>,
    penalty_latency: Option<f64>,
    penalty_rate: Option<f64>,
    bonus_latency: Option<f64>,
    bonus_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    scenario: FileScenario,
    #[serde(default)]
    geometry: FileGeometry,
    #[serde(default)]
    motion: FileMotion,
    #[serde(default)]
    agent: FileAgent,
    #[serde(default)]
    channel: FileChannel,
    #[serde(default)]
    category: std::collections::BTreeMap<String, FileCategory>,
}

macro_rules! apply {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

/// Parses configuration text, applying defaults for every missing key.
/// Returns the resolved config and any validation warnings.
pub fn parse_config(text: &str) -> Result<(ScenarioConfig, Vec<String>)> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| SimError::Config(e.message().to_owned()))?;
    let mut cfg = ScenarioConfig::default();
    if let Some(m) = file.scenario.mode {
        cfg.mode = m.parse()?;
    }
    apply!(cfg.master_seed, file.scenario.seed);
    apply!(cfg.episodes, file.scenario.episodes);
    apply!(cfg.episode_duration, file.scenario.episode_duration);
    apply!(cfg.entry_interval, file.scenario.entry_interval);
    cfg.output_dir = file.scenario.output_dir;

    apply!(cfg.tile.width, file.geometry.tile_width);
    apply!(cfg.tile.height, file.geometry.tile_height);
    apply!(cfg.coverage_diameter, file.geometry.coverage_diameter);
    apply!(cfg.stationary_sojourn_cap, file.geometry.stationary_sojourn_cap);

    apply!(cfg.motion.max_speed, file.motion.max_speed);
    apply!(cfg.motion.min_cruise_speed, file.motion.min_cruise_speed);
    apply!(cfg.motion.acceleration, file.motion.acceleration);
    apply!(cfg.motion.deceleration, file.motion.deceleration);

    let a = file.agent;
    apply!(cfg.reward.alpha1, a.alpha1);
    apply!(cfg.reward.alpha2, a.alpha2);
    apply!(cfg.reward.gamma, a.gamma);
    apply!(cfg.reward.learning_rate, a.learning_rate);
    apply!(cfg.reward.epsilon, a.epsilon);
    apply!(cfg.reward.penalties_enabled, a.penalties_enabled);
    apply!(cfg.reward.be_bonus_enabled, a.be_bonus_enabled);
    apply!(cfg.n_max, a.n_max);
    apply!(cfg.kpi_window, a.kpi_window);
    apply!(cfg.max_burst, a.max_burst);

    if let Some(p) = file.channel.preset {
        cfg.channel_preset = p.parse()?;
    }
    apply!(cfg.retry_limit, file.channel.retry_limit);
    apply!(cfg.queue_capacity, file.channel.queue_capacity);

    for (name, over) in file.category {
        let tag: CategoryTag = name.parse()?;
        let c = cfg.categories.get_mut(tag);
        apply!(c.source_rate, over.source_rate);
        apply!(c.packet_size, over.packet_size);
        apply!(c.max_latency, over.max_latency);
        apply!(c.min_rate, over.min_rate);
        apply!(c.max_wait, over.max_wait);
        apply!(c.penalty_latency, over.penalty_latency);
        apply!(c.penalty_rate, over.penalty_rate);
        apply!(c.bonus_latency, over.bonus_latency);
        apply!(c.bonus_rate, over.bonus_rate);
    }
    let warnings = cfg.validate()?;
    Ok((cfg, warnings))
}
