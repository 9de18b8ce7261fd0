//! RSU-side controller: active-user bookkeeping, state assembly, epsilon-greedy
//! tabular Q-learning and waiting-time dispatch.

mod qtable;
mod registry;
mod reward;

use std::collections::BTreeMap;

use rand::Rng;

pub use qtable::{choose_action, AgentState, QTable};
pub use registry::{ActiveUserRegistry, ACTIVE_TTL};
pub use reward::{compute_reward, map_action, RewardParams, ACTION_COUNT};

use crate::error::{Result, SimError};
use crate::mobility::{sojourn_bucket, sojourn_time, Kinematics, Point};
use crate::traffic::Category;

/// Geometry needed to turn kinematics into a sojourn bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer {
    pub rsu: Point,
    pub coverage_diameter: f64,
    pub stationary_cap: f64,
    /// Clamp for the Tv / Tcv state components.
    pub n_max: u16,
}

impl Observer {
    pub fn observe(
        &self,
        vehicle_id: u32,
        kinematics: &Kinematics,
        registry: &ActiveUserRegistry,
    ) -> Result<AgentState> {
        let c = registry
            .category_of(vehicle_id)
            .ok_or(SimError::UnknownVehicle(vehicle_id))?;
        let sj = sojourn_time(kinematics, self.rsu, self.coverage_diameter, self.stationary_cap);
        let clamp = |n: usize| n.min(usize::from(self.n_max)) as u16;
        Ok(AgentState {
            sj: sojourn_bucket(sj)?.value,
            tv: clamp(registry.total_active()),
            c,
            tcv: clamp(registry.active_in(c)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub waiting_time: f64,
    /// Reward credited to the previous (state, action) of this vehicle, if any.
    pub reward: Option<f64>,
}

/// Learning agent with per-vehicle pending transitions.
#[derive(Debug, Clone)]
pub struct Agent {
    pub table: QTable,
    pub params: RewardParams,
    pub learning: bool,
    pending: BTreeMap<u32, (AgentState, usize)>,
}

impl Agent {
    pub fn new(table: QTable, params: RewardParams, learning: bool) -> Self {
        Self {
            table,
            params,
            learning,
            pending: BTreeMap::new(),
        }
    }

    pub fn pending(&self, vehicle_id: u32) -> Option<(AgentState, usize)> {
        self.pending.get(&vehicle_id).copied()
    }

    /// One decision for `vehicle_id`: closes the previous transition with
    /// `reward` and `state` as successor, then selects and maps a new action.
    pub fn decision_cycle<R: Rng + ?Sized>(
        &mut self,
        vehicle_id: u32,
        state: AgentState,
        category: &Category,
        reward: f64,
        rng: &mut R,
    ) -> Decision {
        let credited = self.pending.remove(&vehicle_id).map(|(s, a)| {
            if self.learning {
                self.table.q_update(s, a, reward, Some(&state), &self.params);
            }
            reward
        });
        let action = choose_action(&state, &self.table, self.params.epsilon, rng);
        self.pending.insert(vehicle_id, (state, action));
        Decision {
            action,
            waiting_time: map_action(action, category),
            reward: credited,
        }
    }

    /// The vehicle left: close its pending transition as terminal.
    pub fn terminal(&mut self, vehicle_id: u32, reward: f64) -> bool {
        match self.pending.remove(&vehicle_id) {
            Some((s, a)) => {
                if self.learning {
                    self.table.q_update(s, a, reward, None, &self.params);
                }
                true
            }
            None => false,
        }
    }

    /// Drops in-flight transitions at an episode boundary; the table persists.
    pub fn reset_episode(&mut self) {
        self.pending.clear();
    }
}
