//! Run output records and their CSV encodings. Writers are generic over
//! `io::Write`; opening files is left to the caller.

use std::io::{self, Write};

use crate::mac::MacEvent;
use crate::traffic::CategoryTag;

pub const PACKET_LOG_HEADER: &str = "packet_id,vehicle_id,category,size_bits,t_generated,t_received,dropped";
pub const DECISION_LOG_HEADER: &str = "t,vehicle_id,sj_bucket,tv,category,tcv,action,waiting_time,reward";
pub const MAC_LOG_HEADER: &str = "t,event,vehicle_id,ac,packet_id";
pub const TRAJECTORY_HEADER: &str = "vehicle_id,t,x,y,speed";
pub const CDF_HEADER: &str = "value,cumulative_probability";

/// Final fate of one packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketRecord {
    pub packet_id: u64,
    pub vehicle_id: u32,
    pub category: CategoryTag,
    pub size_bits: u32,
    pub t_generated: f64,
    pub t_received: Option<f64>,
    pub dropped: bool,
}

impl PacketRecord {
    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        write!(
            w,
            "{},{},{},{},{:.9},",
            self.packet_id, self.vehicle_id, self.category, self.size_bits, self.t_generated
        )?;
        if let Some(t) = self.t_received {
            write!(w, "{t:.9}")?;
        }
        writeln!(w, ",{}", u8::from(self.dropped))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub t: f64,
    pub vehicle_id: u32,
    pub sj_bucket: u8,
    pub tv: u16,
    pub category: CategoryTag,
    pub tcv: u16,
    pub action: usize,
    pub waiting_time: f64,
    /// Reward credited to the vehicle's previous decision, if there was one.
    pub reward: Option<f64>,
}

impl DecisionRecord {
    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        write!(
            w,
            "{:.9},{},{},{},{},{},{},{},",
            self.t, self.vehicle_id, self.sj_bucket, self.tv, self.category, self.tcv, self.action, self.waiting_time
        )?;
        if let Some(r) = self.reward {
            write!(w, "{r}")?;
        }
        writeln!(w)
    }
}

pub fn write_mac_event<W: Write + ?Sized>(w: &mut W, e: &MacEvent, ac_name: &str) -> io::Result<()> {
    writeln!(
        w,
        "{:.9},{},{},{},{}",
        e.t,
        e.kind.as_str(),
        e.vehicle_id,
        ac_name,
        e.packet_id
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub vehicle_id: u32,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
}

impl TrajectorySample {
    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6},{:.6}",
            self.vehicle_id, self.t, self.x, self.y, self.speed
        )
    }
}

pub fn write_cdf<W: Write + ?Sized>(w: &mut W, cdf: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "{CDF_HEADER}")?;
    for (v, p) in cdf {
        writeln!(w, "{v},{p}")?;
    }
    Ok(())
}

/// Receives run outputs as they are produced. Every method has a no-op
/// default, so sinks only implement what they record.
pub trait RunSink {
    /// Per-packet records are expensive at full load; sinks that ignore them
    /// should return false.
    fn wants_packets(&self) -> bool {
        false
    }

    fn wants_trajectories(&self) -> bool {
        false
    }

    fn packet(&mut self, _record: &PacketRecord) -> io::Result<()> {
        Ok(())
    }

    fn decision(&mut self, _record: &DecisionRecord) -> io::Result<()> {
        Ok(())
    }

    fn mac_event(&mut self, _event: &MacEvent, _ac_name: &str) -> io::Result<()> {
        Ok(())
    }

    fn trajectory(&mut self, _sample: &TrajectorySample) -> io::Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl RunSink for NullSink {}

/// Streams CSV rows into arbitrary writers.
pub struct CsvSink<P, D, M, T> {
    pub packets: Option<P>,
    pub decisions: Option<D>,
    pub mac: Option<M>,
    pub trajectories: Option<T>,
}

impl<P: Write, D: Write, M: Write, T: Write> CsvSink<P, D, M, T> {
    /// Wraps the writers and emits each file's header row.
    pub fn new(
        mut packets: Option<P>,
        mut decisions: Option<D>,
        mut mac: Option<M>,
        mut trajectories: Option<T>,
    ) -> io::Result<Self> {
        if let Some(w) = packets.as_mut() {
            writeln!(w, "{PACKET_LOG_HEADER}")?;
        }
        if let Some(w) = decisions.as_mut() {
            writeln!(w, "{DECISION_LOG_HEADER}")?;
        }
        if let Some(w) = mac.as_mut() {
            writeln!(w, "{MAC_LOG_HEADER}")?;
        }
        if let Some(w) = trajectories.as_mut() {
            writeln!(w, "{TRAJECTORY_HEADER}")?;
        }
        Ok(Self {
            packets,
            decisions,
            mac,
            trajectories,
        })
    }

    pub fn flush(&mut self) -> io::Result<()> {
        if let Some(w) = self.packets.as_mut() {
            w.flush()?;
        }
        if let Some(w) = self.decisions.as_mut() {
            w.flush()?;
        }
        if let Some(w) = self.mac.as_mut() {
            w.flush()?;
        }
        if let Some(w) = self.trajectories.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

impl<P: Write, D: Write, M: Write, T: Write> RunSink for CsvSink<P, D, M, T> {
    fn wants_packets(&self) -> bool {
        self.packets.is_some()
    }

    fn wants_trajectories(&self) -> bool {
        self.trajectories.is_some()
    }

    fn packet(&mut self, record: &PacketRecord) -> io::Result<()> {
        match self.packets.as_mut() {
            Some(w) => record.write_csv(w),
            None => Ok(()),
        }
    }

    fn decision(&mut self, record: &DecisionRecord) -> io::Result<()> {
        match self.decisions.as_mut() {
            Some(w) => record.write_csv(w),
            None => Ok(()),
        }
    }

    fn mac_event(&mut self, event: &MacEvent, ac_name: &str) -> io::Result<()> {
        match self.mac.as_mut() {
            Some(w) => write_mac_event(w, event, ac_name),
            None => Ok(()),
        }
    }

    fn trajectory(&mut self, sample: &TrajectorySample) -> io::Result<()> {
        match self.trajectories.as_mut() {
            Some(w) => sample.write_csv(w),
            None => Ok(()),
        }
    }
}
