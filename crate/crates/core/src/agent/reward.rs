//! Utility-based reward with per-category penalties and bonuses, and the
//! action to waiting-time mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::metrics::WindowStats;
use crate::traffic::{Category, CategoryTag};

/// Size of the action set.
pub const ACTION_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// Throughput weight.
    pub alpha1: f64,
    /// Latency weight.
    pub alpha2: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub penalties_enabled: bool,
    /// Disables the inverted BE bonus arm (sensitivity switch).
    pub be_bonus_enabled: bool,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            alpha1: 0.3,
            alpha2: 0.7,
            gamma: 0.99,
            learning_rate: 0.1,
            epsilon: 0.2,
            penalties_enabled: true,
            be_bonus_enabled: true,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        let range = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(SimError::Config(what.to_owned()))
            }
        };
        range((0.0..=1.0).contains(&self.epsilon), "epsilon must lie in [0, 1]")?;
        range((0.0..1.0).contains(&self.gamma), "gamma must lie in [0, 1)")?;
        range(
            self.learning_rate > 0.0 && self.learning_rate <= 1.0,
            "learning_rate must lie in (0, 1]",
        )?;
        range(
            self.alpha1.is_finite() && self.alpha2.is_finite(),
            "alpha weights must be finite",
        )
    }

    pub fn weights_sum_to_one(&self) -> bool {
        (self.alpha1 + self.alpha2 - 1.0).abs() < 1e-9
    }
}

/// Waiting time for `action` in `category`: `a * w_max(c) / |A|`.
pub fn map_action(action: usize, category: &Category) -> f64 {
    action as f64 * (category.max_wait / ACTION_COUNT as f64)
}

/// Reward for a category given the measured window.
///
/// An empty window (no receptions) contributes no latency term and counts as
/// missing the latency target.
pub fn compute_reward(category: &Category, window: &WindowStats, params: &RewardParams) -> Result<f64> {
    if category.max_latency <= 0.0 || category.source_rate <= 0.0 {
        return Err(SimError::Config(format!(
            "{}: max latency and source rate must be positive",
            category.tag
        )));
    }
    let rate = window.rate_bps;
    let rate_term = params.alpha1 * rate / category.source_rate;
    let latency_term = window
        .mean_latency
        .map_or(0.0, |l| params.alpha2 * l / category.max_latency);
    let mut utility = rate_term - latency_term;
    if !params.penalties_enabled {
        return Ok(utility);
    }
    let latency = window.mean_latency.unwrap_or(f64::INFINITY);
    let (l_max, r_min) = (category.max_latency, category.min_rate);
    if category.tag == CategoryTag::BE {
        if latency < l_max {
            utility += category.penalty_latency;
        }
        if rate > r_min {
            utility += category.penalty_rate;
        }
        if params.be_bonus_enabled {
            if latency >= l_max {
                utility += category.bonus_latency;
            }
            if rate <= r_min {
                utility += category.bonus_rate;
            }
        }
    } else {
        if latency > l_max {
            utility += category.penalty_latency;
        }
        if rate < r_min {
            utility += category.penalty_rate;
        }
        if latency <= l_max {
            utility += category.bonus_latency;
        }
        if rate >= r_min {
            utility += category.bonus_rate;
        }
    }
    Ok(utility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::CategoryTable;

    fn window(rate_bps: f64, latency: f64) -> WindowStats {
        WindowStats {
            rate_bps,
            mean_latency: Some(latency),
            packets: 1,
        }
    }

    #[test]
    fn zero_action_waits_zero() {
        let t = CategoryTable::default();
        for c in t.0 {
            assert_eq!(map_action(0, &c), 0.0);
        }
    }

    #[test]
    fn mapped_waits() {
        let t = CategoryTable::default();
        assert!((map_action(7, t.get(CategoryTag::VO)) - 0.805).abs() < 1e-12);
        assert_eq!(map_action(4, t.get(CategoryTag::HD)), 1.0);
        for c in t.0 {
            for a in 0..ACTION_COUNT {
                assert!(map_action(a, &c) <= c.max_wait);
            }
        }
    }

    #[test]
    fn hd_both_bonuses() {
        let t = CategoryTable::default();
        let u = compute_reward(t.get(CategoryTag::HD), &window(2e6, 0.050), &RewardParams::default()).unwrap();
        assert!((u - 3.8).abs() < 1e-12, "{u}");
    }

    #[test]
    fn hd_both_penalties() {
        let t = CategoryTable::default();
        let u = compute_reward(t.get(CategoryTag::HD), &window(1e6, 0.200), &RewardParams::default()).unwrap();
        assert!((u + 5.325).abs() < 1e-12, "{u}");
    }

    #[test]
    fn be_rewarded_when_poor() {
        let t = CategoryTable::default();
        let u = compute_reward(t.get(CategoryTag::BE), &window(0.5e6, 2.0), &RewardParams::default()).unwrap();
        let expected = 0.3 * (0.5 / 28.0) - 0.7 * 2.0 + 4.0;
        assert!((u - expected).abs() < 1e-12, "{u}");
    }

    #[test]
    fn be_penalized_when_good() {
        let t = CategoryTable::default();
        let u = compute_reward(t.get(CategoryTag::BE), &window(2e6, 0.5), &RewardParams::default()).unwrap();
        let expected = 0.3 * (2.0 / 28.0) - 0.7 * 0.5 - 20.0;
        assert!((u - expected).abs() < 1e-12);
        let no_bonus = RewardParams {
            be_bonus_enabled: false,
            ..RewardParams::default()
        };
        let u = compute_reward(t.get(CategoryTag::BE), &window(0.5e6, 2.0), &no_bonus).unwrap();
        assert!((u - (0.3 * (0.5 / 28.0) - 1.4)).abs() < 1e-12);
    }

    #[test]
    fn penalties_disabled_gives_plain_utility() {
        let t = CategoryTable::default();
        let p = RewardParams {
            penalties_enabled: false,
            ..RewardParams::default()
        };
        let u = compute_reward(t.get(CategoryTag::HD), &window(2e6, 0.050), &p).unwrap();
        assert!((u - (0.15 - 0.35)).abs() < 1e-12);
    }

    #[test]
    fn empty_window_counts_as_late() {
        let t = CategoryTable::default();
        let empty = WindowStats::default();
        let u = compute_reward(t.get(CategoryTag::VI), &empty, &RewardParams::default()).unwrap();
        assert_eq!(u, -4.0);
    }

    #[test]
    fn zero_thresholds_rejected() {
        let mut c = Category::default_for(CategoryTag::HD);
        c.max_latency = 0.0;
        assert!(compute_reward(&c, &window(1.0, 1.0), &RewardParams::default()).is_err());
    }

    #[test]
    fn param_validation() {
        let bad = RewardParams {
            epsilon: 1.5,
            ..RewardParams::default()
        };
        assert!(bad.validate().is_err());
        assert!(RewardParams::default().validate().is_ok());
        assert!(RewardParams::default().weights_sum_to_one());
    }
}
