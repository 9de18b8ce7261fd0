//! KPI collection and reporting: per-packet latency, windowed throughput,
//! Jain fairness, empirical CDFs and cross-run deltas.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::traffic::{CategoryTag, Packet};

/// Throughput and mean latency over one measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowStats {
    pub rate_bps: f64,
    pub mean_latency: Option<f64>,
    pub packets: u64,
}

/// Sliding window of receptions for one category.
#[derive(Debug, Clone)]
pub struct KpiWindow {
    pub category: CategoryTag,
    pub window: f64,
    samples: VecDeque<(f64, u32, f64)>,
    bits: u64,
    latency_sum: f64,
}

impl KpiWindow {
    pub fn new(category: CategoryTag, window: f64) -> Self {
        Self {
            category,
            window,
            samples: VecDeque::new(),
            bits: 0,
            latency_sum: 0.0,
        }
    }

    pub fn record_reception(&mut self, packet: &Packet, t_rx: f64) -> Result<()> {
        if t_rx < packet.generated_at {
            return Err(SimError::ReceptionBeforeGeneration {
                generated: packet.generated_at,
                received: t_rx,
            });
        }
        let latency = t_rx - packet.generated_at;
        self.samples.push_back((t_rx, packet.size, latency));
        self.bits += u64::from(packet.size);
        self.latency_sum += latency;
        Ok(())
    }

    fn prune(&mut self, now: f64) {
        let cutoff = now - self.window;
        while let Some(&(t, bits, lat)) = self.samples.front() {
            if t > cutoff {
                break;
            }
            self.samples.pop_front();
            self.bits -= u64::from(bits);
            self.latency_sum -= lat;
        }
        if self.samples.is_empty() {
            self.latency_sum = 0.0;
        }
    }

    /// R and L over `(now - window, now]`.
    pub fn stats_at(&mut self, now: f64) -> WindowStats {
        self.prune(now);
        let n = self.samples.len() as u64;
        WindowStats {
            rate_bps: self.bits as f64 / self.window,
            mean_latency: if n == 0 {
                None
            } else {
                // Recompute rather than trust the running sum after many
                // subtractions.
                Some(self.samples.iter().map(|s| s.2).sum::<f64>() / n as f64)
            },
            packets: n,
        }
    }

    pub fn clear(&mut self) {
        self.samples.clear();
        self.bits = 0;
        self.latency_sum = 0.0;
    }
}

/// Jain's fairness index `(Σx)² / (n·Σx²)`. `None` for empty or all-zero input.
pub fn jain_index(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| !(*v >= 0.0)) {
        return None;
    }
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|v| v * v).sum();
    if sq == 0.0 {
        return None;
    }
    Some((sum * sum / (values.len() as f64 * sq)).min(1.0))
}

/// Empirical CDF sampled at `points` evenly spaced rank positions. The last
/// point is always the maximum with probability 1.
pub fn export_cdf(samples: &[f64], points: usize) -> Vec<(f64, f64)> {
    if samples.is_empty() || points == 0 {
        return Vec::new();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.min(n));
    for i in 1..=points {
        let rank = ((i * n) as f64 / points as f64).ceil() as usize;
        let rank = rank.clamp(1, n);
        let value = sorted[rank - 1];
        // P(X <= value), counting ties.
        let upto = sorted.partition_point(|x| *x <= value);
        let p = upto as f64 / n as f64;
        match out.last_mut() {
            Some(last) if last.0 == value => last.1 = p,
            _ => out.push((value, p)),
        }
    }
    out
}

/// Nearest-rank percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Per-category raw measurements accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryLog {
    pub latencies: Vec<f64>,
    pub delivered_bits: u64,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Still buffered or queued when an episode ended.
    pub in_flight_at_end: u64,
    pub violations_latency: u64,
    pub violations_rate: u64,
    /// Per-window throughput samples (bits/s).
    pub window_throughput: Vec<f64>,
    /// Per-window mean latency (time, seconds) for time-series export.
    pub window_latency: Vec<(f64, f64)>,
}

/// Per-vehicle totals for fairness.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VehicleLog {
    pub category: Option<CategoryTag>,
    pub delivered_bits: u64,
    pub residence: f64,
}

/// Everything the report needs from one run (possibly several episodes).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub categories: [CategoryLog; 4],
    /// Keyed by (episode, vehicle id).
    pub vehicles: BTreeMap<(u32, u32), VehicleLog>,
    pub decisions: u64,
    pub mac_delivered_bits: u64,
    pub simulated_time: f64,
}

impl RunLog {
    pub fn category(&self, c: CategoryTag) -> &CategoryLog {
        &self.categories[c.index()]
    }

    pub fn category_mut(&mut self, c: CategoryTag) -> &mut CategoryLog {
        &mut self.categories[c.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: CategoryTag,
    pub mean_latency_s: Option<f64>,
    pub p50_latency_s: Option<f64>,
    pub p90_latency_s: Option<f64>,
    pub p99_latency_s: Option<f64>,
    pub max_latency_s: Option<f64>,
    pub throughput_bps: f64,
    pub jain: Option<f64>,
    pub violations_latency: u64,
    pub violations_rate: u64,
    pub generated: u64,
    pub delivered: u64,
    pub drops: u64,
    /// Buffered or queued when an episode ended.
    pub in_flight_at_end: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub mode: String,
    pub seed: u64,
    pub episodes: u32,
    pub episode_duration_s: f64,
    /// Fingerprint of the scenario geometry and traffic model; reports are
    /// only comparable when these match.
    pub scenario_fingerprint: String,
    pub throughput_samples: String,
    pub decisions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub meta: ReportMeta,
    pub categories: Vec<CategoryReport>,
}

impl RunReport {
    pub fn category(&self, c: CategoryTag) -> Option<&CategoryReport> {
        self.categories.iter().find(|r| r.category == c)
    }
}

pub fn summarize(log: &RunLog, meta: ReportMeta) -> RunReport {
    let categories = CategoryTag::REPORT_ORDER
        .iter()
        .map(|&c| {
            let cl = log.category(c);
            let mut sorted = cl.latencies.clone();
            sorted.sort_by(f64::total_cmp);
            let mean = if sorted.is_empty() {
                None
            } else {
                Some(sorted.iter().sum::<f64>() / sorted.len() as f64)
            };
            let per_vehicle: Vec<f64> = log
                .vehicles
                .values()
                .filter(|v| v.category == Some(c) && v.residence > 0.0)
                .map(|v| v.delivered_bits as f64 / v.residence)
                .collect();
            CategoryReport {
                category: c,
                mean_latency_s: mean,
                p50_latency_s: percentile(&sorted, 0.50),
                p90_latency_s: percentile(&sorted, 0.90),
                p99_latency_s: percentile(&sorted, 0.99),
                max_latency_s: sorted.last().copied(),
                throughput_bps: if log.simulated_time > 0.0 {
                    cl.delivered_bits as f64 / log.simulated_time
                } else {
                    0.0
                },
                jain: jain_index(&per_vehicle),
                violations_latency: cl.violations_latency,
                violations_rate: cl.violations_rate,
                generated: cl.generated,
                delivered: cl.delivered,
                drops: cl.dropped,
                in_flight_at_end: cl.in_flight_at_end,
            }
        })
        .collect();
    RunReport { meta, categories }
}

/// Percentage deltas of `b` relative to `a` for one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDelta {
    pub category: CategoryTag,
    /// Positive when `b` has lower mean latency: `(a - b) / a * 100`.
    pub latency_improvement_pct: Option<f64>,
    /// `(b - a) / a * 100`.
    pub throughput_change_pct: Option<f64>,
    pub jain_change_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub baseline_mode: String,
    pub candidate_mode: String,
    pub categories: Vec<CategoryDelta>,
}

impl DeltaReport {
    pub fn category(&self, c: CategoryTag) -> Option<&CategoryDelta> {
        self.categories.iter().find(|d| d.category == c)
    }
}

fn rel_change(from: f64, to: f64) -> Option<f64> {
    if from == to {
        Some(0.0)
    } else if from == 0.0 {
        None
    } else {
        Some((to - from) / from * 100.0)
    }
}

/// Compares candidate `b` against baseline `a`.
pub fn compare(a: &RunReport, b: &RunReport) -> Result<DeltaReport> {
    if a.meta.scenario_fingerprint != b.meta.scenario_fingerprint {
        return Err(SimError::Incomparable(format!(
            "scenario fingerprints differ ({} vs {})",
            a.meta.scenario_fingerprint, b.meta.scenario_fingerprint
        )));
    }
    let mut categories = Vec::new();
    for ra in &a.categories {
        let rb = b
            .category(ra.category)
            .ok_or_else(|| SimError::Incomparable(format!("{} missing from second report", ra.category)))?;
        let both = |x: Option<f64>, y: Option<f64>| x.zip(y);
        categories.push(CategoryDelta {
            category: ra.category,
            latency_improvement_pct: both(ra.mean_latency_s, rb.mean_latency_s)
                .and_then(|(x, y)| rel_change(x, y).map(|v| -v)),
            throughput_change_pct: rel_change(ra.throughput_bps, rb.throughput_bps),
            jain_change_pct: both(ra.jain, rb.jain).and_then(|(x, y)| rel_change(x, y)),
        });
    }
    Ok(DeltaReport {
        baseline_mode: a.meta.mode.clone(),
        candidate_mode: b.meta.mode.clone(),
        categories,
    })
}
