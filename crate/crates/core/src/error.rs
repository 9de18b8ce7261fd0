use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("cannot schedule event at t={at} before current time t={now}")]
    ScheduleInPast { at: f64, now: f64 },
    #[error("vehicle {0} has departed")]
    VehicleDeparted(u32),
    #[error("unknown vehicle {0}")]
    UnknownVehicle(u32),
    #[error("sojourn time must be non-negative, got {0}")]
    NegativeSojourn(f64),
    #[error("waiting time {w}s exceeds the {max}s limit for {category}")]
    WaitTooLong { w: f64, max: f64, category: &'static str },
    #[error("reception at t={received} precedes generation at t={generated}")]
    ReceptionBeforeGeneration { generated: f64, received: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("reports are not comparable: {0}")]
    Incomparable(String),
    #[error("malformed q-table snapshot at line {line}: {msg}")]
    Snapshot { line: usize, msg: String },
    #[error("output error: {0}")]
    Io(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
