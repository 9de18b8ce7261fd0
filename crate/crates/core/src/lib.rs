//! Discrete-event simulator of a roadside unit that learns per-vehicle
//! transmission waiting times with tabular Q-learning, on top of a slotted
//! CSMA/CA channel model.

pub mod agent;
pub mod config;
pub mod engine;
pub mod error;
pub mod logs;
pub mod mac;
pub mod metrics;
pub mod mobility;
pub mod sim;
pub mod traffic;

pub use error::{Result, SimError};
