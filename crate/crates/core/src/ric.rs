//! Control plane between the vehicles/RSUs and the near-real-time controller.
//!
//! Messages travel with a fixed one-way latency and are never lost. Every
//! message is counted in an [`OverheadLedger`]. Sizes are in bits and rates
//! use 1 kb = 1000 bits.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const DEFAULT_MESSAGE_BITS: u64 = 1000;
pub const DEFAULT_LATENCY_S: f64 = 0.030;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Report,
    Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlMessage {
    pub kind: MessageKind,
    pub direction: Direction,
    pub size_bits: u64,
    pub src: u32,
    pub dst: u32,
    pub t_send: f64,
}

impl ControlMessage {
    pub fn report(src: u32, dst: u32, t_send: f64) -> Self {
        Self {
            kind: MessageKind::Report,
            direction: Direction::Uplink,
            size_bits: DEFAULT_MESSAGE_BITS,
            src,
            dst,
            t_send,
        }
    }

    pub fn command(src: u32, dst: u32, t_send: f64) -> Self {
        Self {
            kind: MessageKind::Command,
            direction: Direction::Downlink,
            size_bits: DEFAULT_MESSAGE_BITS,
            src,
            dst,
            t_send,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    pub one_way_latency: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            one_way_latency: DEFAULT_LATENCY_S,
        }
    }
}

impl LatencyModel {
    pub fn new(one_way_latency: f64) -> Result<Self> {
        if !(one_way_latency >= 0.0 && one_way_latency.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "control latency must be >= 0, got {one_way_latency}"
            )));
        }
        Ok(Self { one_way_latency })
    }

    pub fn deliver(&self, msg: &ControlMessage) -> f64 {
        msg.t_send + self.one_way_latency
    }

    /// Round trip: report up, command down.
    pub fn round_trip(&self) -> f64 {
        2.0 * self.one_way_latency
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverheadLedger {
    pub ul_bits: u64,
    pub dl_bits: u64,
    pub ul_msgs: u64,
    pub dl_msgs: u64,
    /// Relay recomputation events and their summed hop counts.
    pub events: u64,
    pub hop_sum: u64,
    /// Averaging window in seconds.
    pub window: f64,
}

impl OverheadLedger {
    pub fn new(window: f64) -> Result<Self> {
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::InvalidConfig(format!("ledger window must be > 0, got {window}")));
        }
        Ok(Self {
            window,
            ..Default::default()
        })
    }

    pub fn record(&mut self, msg: &ControlMessage) -> Result<()> {
        if msg.size_bits == 0 {
            return Err(Error::contract("control message with zero size"));
        }
        match msg.direction {
            Direction::Uplink => {
                self.ul_bits += msg.size_bits;
                self.ul_msgs += 1;
            }
            Direction::Downlink => {
                self.dl_bits += msg.size_bits;
                self.dl_msgs += 1;
            }
        }
        Ok(())
    }

    /// A relay path (re)computation: two uplink messages from the affected
    /// vehicle, one downlink command per hop of the new path.
    pub fn account_relay_event(&mut self, hops: u32) -> Result<()> {
        if hops < 1 {
            return Err(Error::contract(format!("relay event needs hops >= 1, got {hops}")));
        }
        self.ul_bits += 2 * DEFAULT_MESSAGE_BITS;
        self.ul_msgs += 2;
        self.dl_bits += u64::from(hops) * DEFAULT_MESSAGE_BITS;
        self.dl_msgs += u64::from(hops);
        self.events += 1;
        self.hop_sum += u64::from(hops);
        Ok(())
    }

    pub fn mean_hops(&self) -> f64 {
        if self.events == 0 {
            0.0
        } else {
            self.hop_sum as f64 / self.events as f64
        }
    }

    /// `(ul_kbps, dl_kbps)` averaged over the window.
    pub fn rate_kbps(&self) -> (f64, f64) {
        let k = 1.0 / self.window / 1000.0;
        (self.ul_bits as f64 * k, self.dl_bits as f64 * k)
    }

    pub fn total_kbps(&self) -> f64 {
        let (ul, dl) = self.rate_kbps();
        ul + dl
    }

    pub fn merge(&mut self, o: &OverheadLedger) {
        self.ul_bits += o.ul_bits;
        self.dl_bits += o.dl_bits;
        self.ul_msgs += o.ul_msgs;
        self.dl_msgs += o.dl_msgs;
        self.events += o.events;
        self.hop_sum += o.hop_sum;
    }
}

/// Aggregate relay-control rate in kbps predicted from event statistics:
/// each event costs `2 + hops` messages of 1 kb.
pub fn relay_rate_closed_form(events: f64, mean_hops: f64, window: f64) -> f64 {
    events * (2.0 + mean_hops) * DEFAULT_MESSAGE_BITS as f64 / 1000.0 / window
}

/// A decision taken at `decision_time` may only use state observed at or
/// before `decision_time - one_way_latency`.
pub fn check_staleness(state_time: f64, decision_time: f64, lm: &LatencyModel) -> Result<()> {
    if state_time > decision_time - lm.one_way_latency + 1e-9 {
        return Err(Error::invariant(format!(
            "xApp decision at {decision_time} s used state from {state_time} s, newer than one control latency"
        )));
    }
    Ok(())
}

/// A controller application driven by reports.
pub trait XApp {
    /// Handle a delivered report at time `now`; returned commands are sent
    /// at `now`.
    fn on_report(&mut self, report: &ControlMessage, now: f64) -> Vec<ControlMessage>;
}

/// FIFO message transport with ledger accounting.
#[derive(Debug, Clone)]
pub struct ControlPlane {
    pub latency: LatencyModel,
    pub ledger: OverheadLedger,
    in_flight: VecDeque<(f64, ControlMessage)>,
    last_send: f64,
}

impl ControlPlane {
    pub fn new(latency: LatencyModel, window: f64) -> Result<Self> {
        Ok(Self {
            latency,
            ledger: OverheadLedger::new(window)?,
            in_flight: VecDeque::new(),
            last_send: f64::NEG_INFINITY,
        })
    }

    /// Queue a message; returns its arrival time. Sends must be issued in
    /// non-decreasing time order, which keeps delivery FIFO.
    pub fn send(&mut self, msg: ControlMessage) -> Result<f64> {
        if msg.t_send < self.last_send {
            return Err(Error::contract(format!(
                "message sent at {} after one sent at {}",
                msg.t_send, self.last_send
            )));
        }
        self.ledger.record(&msg)?;
        self.last_send = msg.t_send;
        let arrival = self.latency.deliver(&msg);
        self.in_flight.push_back((arrival, msg));
        Ok(arrival)
    }

    /// Pop every message that has arrived by `now`, in arrival order.
    pub fn due(&mut self, now: f64) -> Vec<ControlMessage> {
        let mut out = Vec::new();
        while self.in_flight.front().is_some_and(|(a, _)| *a <= now + 1e-12) {
            out.push(self.in_flight.pop_front().expect("checked non-empty").1);
        }
        out
    }

    pub fn pending(&self) -> usize {
        self.in_flight.len()
    }

    /// Deliver due uplink reports to `xapp`, checking that it never sees a
    /// report earlier than one latency after it was sent, then send its
    /// commands. Due downlink commands are returned to the caller.
    pub fn dispatch(&mut self, now: f64, xapp: &mut impl XApp) -> Result<Vec<ControlMessage>> {
        let mut commands = Vec::new();
        for msg in self.due(now) {
            match msg.direction {
                Direction::Uplink => {
                    check_staleness(msg.t_send, now, &self.latency)?;
                    for cmd in xapp.on_report(&msg, now) {
                        self.send(cmd)?;
                    }
                }
                Direction::Downlink => commands.push(msg),
            }
        }
        Ok(commands)
    }
}
