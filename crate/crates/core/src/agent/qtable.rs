use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::reward::{RewardParams, ACTION_COUNT};
use crate::error::{Result, SimError};
use crate::traffic::CategoryTag;

/// Q-table key: (sojourn bucket, active vehicles, category, active vehicles
/// of that category).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentState {
    pub sj: u8,
    pub tv: u16,
    pub c: CategoryTag,
    pub tcv: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Row {
    q: [f64; ACTION_COUNT],
    visits: [u64; ACTION_COUNT],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QTable {
    rows: BTreeMap<AgentState, Row>,
    updates: u64,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Q(s, a); unvisited entries read as zero.
    pub fn get(&self, s: &AgentState, a: usize) -> f64 {
        self.rows.get(s).map_or(0.0, |r| r.q[a])
    }

    pub fn set(&mut self, s: AgentState, a: usize, value: f64) {
        self.rows.entry(s).or_default().q[a] = value;
    }

    pub fn values(&self, s: &AgentState) -> [f64; ACTION_COUNT] {
        self.rows.get(s).map_or([0.0; ACTION_COUNT], |r| r.q)
    }

    pub fn visits(&self, s: &AgentState, a: usize) -> u64 {
        self.rows.get(s).map_or(0, |r| r.visits[a])
    }

    pub fn max_value(&self, s: &AgentState) -> f64 {
        self.values(s).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action, ties broken toward the lowest index.
    pub fn argmax(&self, s: &AgentState) -> usize {
        let q = self.values(s);
        let mut best = 0;
        for a in 1..ACTION_COUNT {
            if q[a] > q[best] {
                best = a;
            }
        }
        best
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    pub fn total_updates(&self) -> u64 {
        self.updates
    }

    /// Temporal-difference update. `next` is `None` for a terminal transition.
    pub fn q_update(
        &mut self,
        s: AgentState,
        a: usize,
        reward: f64,
        next: Option<&AgentState>,
        params: &RewardParams,
    ) {
        let next_max = next.map_or(0.0, |n| self.max_value(n));
        let row = self.rows.entry(s).or_default();
        let q = row.q[a];
        row.q[a] = q + params.learning_rate * (reward + params.gamma * next_max - q);
        row.visits[a] += 1;
        self.updates += 1;
    }

    /// Writes the snapshot text format: `key=value` header lines, a column
    /// header, then one row per visited (state, action).
    pub fn to_snapshot(&self, params: &RewardParams, n_max: u16) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# rsuq q-table");
        let _ = writeln!(out, "format_version=1");
        let _ = writeln!(out, "actions={ACTION_COUNT}");
        let _ = writeln!(out, "sj_range=0..4");
        let _ = writeln!(out, "tv_range=0..{n_max}");
        let _ = writeln!(out, "tcv_range=0..{n_max}");
        let _ = writeln!(out, "categories=VO,VI,BE,HD");
        let _ = writeln!(out, "alpha1={}", params.alpha1);
        let _ = writeln!(out, "alpha2={}", params.alpha2);
        let _ = writeln!(out, "gamma={}", params.gamma);
        let _ = writeln!(out, "learning_rate={}", params.learning_rate);
        let _ = writeln!(out, "epsilon={}", params.epsilon);
        let _ = writeln!(out, "penalties_enabled={}", params.penalties_enabled);
        let _ = writeln!(out, "updates={}", self.updates);
        let _ = writeln!(out, "sj,tv,category,tcv,action,q_value,visits");
        for (s, row) in &self.rows {
            for a in 0..ACTION_COUNT {
                if row.visits[a] == 0 && row.q[a] == 0.0 {
                    continue;
                }
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    s.sj, s.tv, s.c, s.tcv, a, row.q[a], row.visits[a]
                );
            }
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| SimError::Snapshot {
            line: line + 1,
            msg: msg.to_owned(),
        };
        let mut table = QTable::new();
        let mut in_rows = false;
        let mut saw_version = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !in_rows {
                if line.starts_with("sj,") {
                    in_rows = true;
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| err(i, "expected key=value"))?;
                match k {
                    "format_version" => {
                        if v != "1" {
                            return Err(err(i, "unsupported format version"));
                        }
                        saw_version = true;
                    }
                    "actions" => {
                        if v.parse::<usize>().ok() != Some(ACTION_COUNT) {
                            return Err(err(i, "action count mismatch"));
                        }
                    }
                    "updates" => {
                        table.updates = v.parse().map_err(|_| err(i, "bad update count"))?;
                    }
                    _ => {}
                }
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(err(i, "expected 7 fields"));
            }
            let num = |idx: usize| -> Result<u64> { f[idx].parse().map_err(|_| err(i, "bad integer")) };
            let sj = num(0)?;
            if sj > 4 {
                return Err(err(i, "sojourn bucket out of range"));
            }
            let state = AgentState {
                sj: sj as u8,
                tv: u16::try_from(num(1)?).map_err(|_| err(i, "tv out of range"))?,
                c: f[2].parse().map_err(|_| err(i, "bad category"))?,
                tcv: u16::try_from(num(3)?).map_err(|_| err(i, "tcv out of range"))?,
            };
            let action = num(4)? as usize;
            if action >= ACTION_COUNT {
                return Err(err(i, "action out of range"));
            }
            let q: f64 = f[5].parse().map_err(|_| err(i, "bad q value"))?;
            let row = table.rows.entry(state).or_default();
            row.q[action] = q;
            row.visits[action] = num(6)?;
        }
        if !saw_version {
            return Err(err(0, "missing format_version header"));
        }
        Ok(table)
    }
}

/// Epsilon-greedy selection: a uniform random action with probability
/// `epsilon`, otherwise the greedy action.
pub fn choose_action<R: Rng + ?Sized>(state: &AgentState, table: &QTable, epsilon: f64, rng: &mut R) -> usize {
    let p: f64 = rng.gen();
    if p < epsilon {
        rng.gen_range(0..ACTION_COUNT)
    } else {
        table.argmax(state)
    }
}
